import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abelca.groups import (
    EndoSpec, FiniteField, GroupSpec, InvalidEndomorphism, check_endomorphism,
    commuting_square_holds, crt_recombine, crt_split, embed, embed_automaton, flatten_field,
    is_irreducible,
)
from abelca.ring import PolyMatrix

EXAMPLE_GROUP = GroupSpec((32, 4, 2))
EXAMPLE_ALPHA = EndoSpec(((3, 2, 1), (24, 0, 1), (16, 2, 0)))


def test_example_embedding_golden():
    emb = embed(EXAMPLE_GROUP, EXAMPLE_ALPHA)
    assert emb.modulus == 32
    assert emb.matrix.tolist() == [[3, 3, 1], [16, 0, 1], [16, 2, 0]]
    assert emb.s((1, 1, 1)) == (1, 8, 16)


def test_example_commuting_square():
    assert commuting_square_holds(EXAMPLE_GROUP, EXAMPLE_ALPHA)


@st.composite
def p_group_endos(draw):
    p = draw(st.sampled_from([2, 3]))
    exps = draw(st.lists(st.integers(1, 3), min_size=1, max_size=3))
    orders = tuple(p**e for e in exps)
    images = []
    for nj in orders:
        row = []
        for ni in orders:
            # alpha(e_j)_i must have order dividing n_j in Z/n_i
            step = ni // np.gcd(ni, nj)
            row.append(step * draw(st.integers(0, ni)))
        images.append(tuple(row))
    return GroupSpec(orders), EndoSpec(tuple(images))


@given(p_group_endos())
@settings(max_examples=60, deadline=None)
def test_embedding_commutes_for_random_endomorphisms(case):
    group, alpha = case
    emb = embed(group, alpha)
    assert list(emb.exponents) == sorted(emb.exponents, reverse=True)
    assert commuting_square_holds(group, alpha, emb)


@given(p_group_endos())
@settings(max_examples=30, deadline=None)
def test_embedding_is_injective(case):
    group, alpha = case
    emb = embed(group, alpha)
    images = {emb.s(g) for g in group.elements()}
    assert len(images) == group.size


def test_invalid_endomorphism_rejected():
    with pytest.raises(InvalidEndomorphism):
        check_endomorphism(GroupSpec((4, 2)), EndoSpec(((1, 1), (1, 1))))
    with pytest.raises(InvalidEndomorphism):
        embed(GroupSpec((4, 2)), EndoSpec(((1, 1), (1, 1))))


def test_crt_split_and_recombine():
    group = GroupSpec((12, 6))
    alpha = EndoSpec(((5, 3), (2, 1)))
    check_endomorphism(group, alpha)
    parts = crt_split(group, alpha)
    assert [p for p, _, _ in parts] == [2, 3]
    assert parts[0][1].orders == (4, 2)
    assert parts[1][1].orders == (3, 3)
    assert crt_recombine(group, parts) == alpha.normalized(group)
    with pytest.raises(ValueError):
        embed(group, alpha)
    for _, sub, endo in parts:
        assert commuting_square_holds(sub, endo)


def test_embed_automaton_offsets():
    group = GroupSpec((4, 2))
    maps = {0: EndoSpec(((1, 0), (0, 1))), 1: EndoSpec(((2, 1), (0, 0)))}
    _, T = embed_automaton(group, maps)
    assert T.q == 4
    assert T.coefficient(0).tolist() == [[1, 0], [0, 1]]
    assert T.coefficient(1).tolist() == [[2, 0], [2, 0]]


def test_finite_field_f4():
    F = FiniteField(2, [1, 1, 1])
    w = (0, 1)
    assert F.mul(w, w) == (1, 1)
    assert F.mul(w, F.mul(w, w)) == F.one()
    for a in F.elements():
        if any(a):
            assert any(F.mul(a, b) == F.one() for b in F.elements())
    with pytest.raises(ValueError):
        FiniteField(2, [1, 0, 1])
    assert is_irreducible([1, 1, 0, 1], 2)


def test_flatten_field_is_a_ring_homomorphism():
    F = FiniteField(2, [1, 1, 1])
    A = [[{0: (0, 1)}, {1: (1, 0)}], [{}, {-1: (1, 1)}]]
    B = [[{0: (1, 1)}, {}], [{0: (0, 1)}, {2: (1, 0)}]]
    # the product in F_4[u] computed by hand through field multiplication
    prod = [[{} for _ in range(2)] for _ in range(2)]
    for i in range(2):
        for j in range(2):
            acc: dict[int, tuple[int, int]] = {}
            for k in range(2):
                for e1, a in A[i][k].items():
                    for e2, b in B[k][j].items():
                        acc[e1 + e2] = F.add(acc.get(e1 + e2, F.zero()), F.mul(a, b))
            prod[i][j] = {e: v for e, v in acc.items() if any(v)}
    assert flatten_field(A, F) * flatten_field(B, F) == flatten_field(prod, F)
    assert isinstance(flatten_field(A, F), PolyMatrix)
