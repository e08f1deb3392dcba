import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abelca.pipeline import derive
from abelca.recursion import Window
from abelca.substitution import (
    AlphabetTooLarge, SubstitutionRule, WindowTooSmall, _analyze, aperiodic_power, blank_filter,
    build_substitution, digits_to_hex, dumps, expand, graph_analysis, hex_to_digits, loads,
    seed_grid, tarjan_scc,
)

from conftest import derived, spec

# parent block letters: a..d = alpha_1 at offsets -1..2, e..h = alpha_0 at offsets -1..2
LETTERS = "efghabcd"


def golden_children(v):
    """The hand-derived 8-symbol rule of the running example."""
    a, b, c, d, e, f, g, h = (v[LETTERS.index(x)] for x in "abcdefgh")
    quads = {  # (s, t): (alpha_1 row, alpha_0 row)
        (0, 1): ((0, a + c + f, 0, b + d + g), (a + b, b, b + c, c)),
        (1, 1): ((a + c + f, 0, b + d + g, 0), (b, b + c, c, c + d)),
        (0, 0): ((a + b, b, b + c, c), (0, b + f, 0, c + g)),
        (1, 0): ((b, b + c, c, c + d), (b + f, 0, c + g, 0)),
    }
    out = {}
    for st_, (top, bottom) in quads.items():
        out[st_] = tuple(x % 2 for x in bottom + top)
    return out


def letter(ch):
    v = np.zeros(8, dtype=np.uint8)
    v[LETTERS.index(ch)] = 1
    return v


def test_golden_rule_entry_for_entry(theta):
    sys_ = theta.system
    assert (sys_.lo, sys_.hi, sys_.N) == (-1, 2, 8)
    for n in range(256):
        v = hex_to_digits(format(n, "x"), 2, 8)
        sid = sys_.lookup(v)
        want = golden_children(v.tolist())
        for (s, t), kid in want.items():
            assert tuple(sys_.states[sys_.child(sid, s, t)].tolist()) == kid


def test_golden_f_children(theta):
    sys_ = theta.system
    F = sys_.lookup(letter("f"))
    kids = {st_: sys_.states[sys_.child(F, *st_)] for st_ in [(0, 1), (1, 1), (0, 0), (1, 0)]}
    assert np.array_equal(kids[(0, 1)], letter("b"))
    assert np.array_equal(kids[(1, 1)], letter("a"))
    assert np.array_equal(kids[(0, 0)], letter("f"))
    assert np.array_equal(kids[(1, 0)], letter("e"))


def test_seed_word_is_hgfe(theta):
    sys_ = theta.system
    word = [(x, sys_.states[sid]) for x, sid in sorted(sys_.seed)]
    assert [x for x, _ in word] == [-2, -1, 0, 1]
    for (_, v), ch in zip(word, "hgfe"):
        assert np.array_equal(v, letter(ch))


def test_full_space_and_reachable_sizes(theta, theta_reachable):
    assert len(theta.system) == 256
    assert len(theta_reachable.system) == 99
    assert theta.system.is_closed


@pytest.mark.parametrize("name", ["theta", "theta_u", "tf4", "theta_k4"])
def test_compiled_and_lazy_rules_agree(name):
    d = derived(name, closed=False)
    tables, win = d.system.rule.tables, d.system.rule.window
    compiled = SubstitutionRule(tables, win)
    pushed = SubstitutionRule(tables, win, compile_limit=0)
    assert compiled.mats is not None and pushed.mats is None
    rng = np.random.default_rng(7)
    V = rng.integers(0, d.system.q, size=(12, compiled.N))
    assert np.array_equal(compiled.children(V), pushed.children(V))


@given(data=st.data())
@settings(max_examples=40, deadline=None)
def test_children_are_linear(data):
    rule = derived("theta_u", closed=False).system.rule
    u = np.array(data.draw(st.lists(st.integers(0, 1), min_size=8, max_size=8)))
    v = np.array(data.draw(st.lists(st.integers(0, 1), min_size=8, max_size=8)))
    cu, cv, cs = rule.children(np.stack([u, v, (u + v) % 2]))
    assert np.array_equal((cu.astype(int) + cv) % 2, cs)


def test_window_too_small_is_reported():
    d = derived("theta", closed=False)
    with pytest.raises(WindowTooSmall):
        SubstitutionRule(d.system.rule.tables, Window(-2, 2, 0, 1))


def test_alphabet_budget():
    d = derived("theta", closed=False)
    with pytest.raises(AlphabetTooLarge):
        build_substitution(d.system.rule.tables, d.window, max_states=50)
    with pytest.raises(AlphabetTooLarge):
        build_substitution(d.system.rule.tables, d.window, full_space=True, max_states=100)


def test_expansion_shape(theta):
    g0 = seed_grid(theta.system)
    assert g0.ids.shape == (1, 4) and g0.x0 == -2
    g = expand(theta.system, 3)
    assert g.ids.shape == (8, 32) and g.x0 == -16
    with pytest.raises(ValueError):
        expand(theta.system, -1)


@given(st.integers(2, 9).flatmap(
    lambda q: st.tuples(st.just(q), st.lists(st.integers(0, q - 1), min_size=1, max_size=12))))
@settings(max_examples=200, deadline=None)
def test_encoding_round_trip(case):
    q, digits = case
    width = max(1, len(format(q ** len(digits) - 1, "x")))
    text = digits_to_hex(digits, q, width)
    assert len(text) == width
    assert hex_to_digits(text, q, len(digits)).tolist() == digits


@pytest.mark.parametrize("name", ["theta", "theta_u", "rule90", "shift", "tf4"])
def test_serialization_round_trip(name):
    sys_ = derived(name).system if name != "theta" else derived(name, full_space=True).system
    text = dumps(sys_)
    back = loads(text)
    assert dumps(back) == text
    assert len(back) == len(sys_)


def test_serialization_is_deterministic():
    T = spec("theta_u").automaton()
    assert dumps(derive(T).system) == dumps(derive(T).system)


def test_loads_rejects_garbage():
    with pytest.raises(ValueError, match="header"):
        loads("hello\n")
    with pytest.raises(ValueError):
        loads("SUBST k=2 m'=1 window=[0,0] ring=Z2^1\nS 1 -> 1 1 1\n")
    with pytest.raises(ValueError, match="closed"):
        loads("SUBST k=2 m'=1 window=[0,0] ring=Z2^1\nS 1 -> 1 1 1 0\n")


def test_blank_filter_keeps_reaching_states(theta):
    f = blank_filter(theta.system)
    assert len(f) <= len(theta.system)
    assert f.is_closed
    for v in range(len(f)):
        assert len(f.trans[v]) == 4


# -- graph oracles -------------------------------------------------------------

def random_digraph(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    edges = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)), max_size=3 * n))
    adj = [sorted({w for v, w in edges if v == u}) for u in range(n)]
    return n, adj


def reach_matrix(n, adj):
    R = np.eye(n, dtype=bool)
    for v in range(n):
        for w in adj[v]:
            R[v, w] = True
    for k in range(n):
        R |= R[:, [k]] & R[[k], :]
    return R


def scc_oracle(n, adj):
    R = reach_matrix(n, adj)
    comps = {tuple(sorted(np.nonzero(R[v] & R[:, v])[0].tolist())) for v in range(n)}
    return sorted(comps)


def period_oracle(comp, A):
    idx = list(comp)
    sub = A[np.ix_(idx, idx)].astype(np.int64)
    g, P = 0, np.eye(len(idx), dtype=np.int64)
    for L in range(1, len(idx) + 1):
        P = np.minimum(P @ sub, 1)
        if np.trace(P):
            g = math.gcd(g, L)
    return g or None


def adjacency_matrix(n, adj):
    A = np.zeros((n, n), dtype=np.int64)
    for v in range(n):
        A[v, adj[v]] = 1
    return A


@st.composite
def digraphs(draw):
    return random_digraph(draw)


@given(digraphs())
@settings(max_examples=200, deadline=None)
def test_tarjan_and_periods_match_oracles(g):
    n, adj = g
    comps, periods = _analyze(n, adj)
    assert sorted(tuple(c) for c in comps) == scc_oracle(n, adj)
    A = adjacency_matrix(n, adj)
    for c, p in zip(comps, periods):
        assert p == period_oracle(c, A)


@given(digraphs())
@settings(max_examples=100, deadline=None)
def test_aperiodic_power_matches_explicit_graph_powers(g):
    n, adj = g
    _, periods = _analyze(n, adj)
    kappa = aperiodic_power(periods)
    A = adjacency_matrix(n, adj)

    def all_aperiodic(power):
        P = np.linalg.matrix_power(A, power).clip(0, 1)
        padj = [np.nonzero(P[v])[0].tolist() for v in range(n)]
        return all(period_oracle(c, P) in (None, 1) for c in scc_oracle(n, padj))

    assert all_aperiodic(kappa)
    assert not any(all_aperiodic(j) for j in range(1, kappa))


def test_cycle_graph_periods():
    adj = [[1], [2], [0], [4], [3]]
    comps, periods = _analyze(5, adj)
    assert sorted(periods) == [2, 3]
    assert aperiodic_power(periods) == 6
    assert tarjan_scc(1, [[]]) == [[0]]


def test_theta_graph_is_aperiodic(theta):
    g = graph_analysis(theta.system)
    assert g.aperiodic and g.kappa == 1


def test_tf4_graph_needs_a_power():
    g = graph_analysis(derived("tf4").system)
    assert g.kappa == 6 and not g.aperiodic


@pytest.mark.slow
def test_large_system_serialization_is_deterministic():
    import hashlib

    from abelca.substitution import iter_lines

    T = spec("theta_k4").automaton()
    digests = []
    for _ in range(2):
        h = hashlib.sha256()
        for line in iter_lines(derive(T).system):
            h.update(line.encode("ascii"))
        digests.append(h.hexdigest())
    assert digests[0] == digests[1]
