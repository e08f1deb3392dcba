"""Reduction of finite abelian groups and their endomorphisms to Z/p^k modules.

Groups are products of cyclic factors Z/n_1 x ... x Z/n_r; an endomorphism
is given by the images of the canonical generators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod
from typing import Sequence

import numpy as np

from .ring import LaurentPoly, PolyMatrix, is_prime, prime_power


class InvalidEndomorphism(ValueError):
    pass


def factorize(n: int) -> dict[int, int]:
    out: dict[int, int] = {}
    f = 2
    while f * f <= n:
        while n % f == 0:
            out[f] = out.get(f, 0) + 1
            n //= f
        f += 1
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


@dataclass(frozen=True)
class GroupSpec:
    """Z/orders[0] x Z/orders[1] x ..."""

    orders: tuple[int, ...]

    def __post_init__(self):
        if not self.orders:
            raise ValueError("a group needs at least one cyclic factor")
        if any(n < 2 for n in self.orders):
            raise ValueError("cyclic orders must be >= 2")

    @property
    def size(self) -> int:
        return prod(self.orders)

    def primes(self) -> list[int]:
        return sorted(set(itertools.chain.from_iterable(factorize(n) for n in self.orders)))

    def p_exponents(self) -> tuple[int, tuple[int, ...]]:
        """``(p, (k_1, ..., k_d))`` for a p-group; raises otherwise."""
        pes = [prime_power(n) for n in self.orders]
        if any(pe is None for pe in pes) or len({pe[0] for pe in pes}) != 1:
            raise ValueError(f"{self.orders} is not a p-group presentation")
        return pes[0][0], tuple(pe[1] for pe in pes)

    def elements(self):
        return itertools.product(*(range(n) for n in self.orders))


@dataclass(frozen=True)
class EndoSpec:
    """images[j] is alpha(e_j) as a tuple of residues, one per cyclic factor."""

    images: tuple[tuple[int, ...], ...]

    def apply(self, group: GroupSpec, g: Sequence[int]) -> tuple[int, ...]:
        out = [0] * len(group.orders)
        for gj, img in zip(g, self.images):
            for i, v in enumerate(img):
                out[i] += gj * v
        return tuple(v % n for v, n in zip(out, group.orders))

    def normalized(self, group: GroupSpec) -> "EndoSpec":
        return EndoSpec(tuple(tuple(v % n for v, n in zip(img, group.orders)) for img in self.images))


def check_endomorphism(group: GroupSpec, alpha: EndoSpec) -> None:
    r = len(group.orders)
    if len(alpha.images) != r or any(len(img) != r for img in alpha.images):
        raise InvalidEndomorphism("endomorphism images must form an r x r table")
    for j, img in enumerate(alpha.images):
        nj = group.orders[j]
        for i, v in enumerate(img):
            # the image of a generator of order n_j must have order dividing n_j
            if (nj * v) % group.orders[i]:
                raise InvalidEndomorphism(
                    f"alpha(e_{j + 1})_{i + 1} = {v} has order not dividing {nj}"
                )


def crt_split(group: GroupSpec, alpha: EndoSpec) -> list[tuple[int, GroupSpec, EndoSpec]]:
    """Split into one (p, p-group, endomorphism) triple per prime dividing |G|."""
    check_endomorphism(group, alpha)
    alpha = alpha.normalized(group)
    out = []
    for p in group.primes():
        keep = [a for a, n in enumerate(group.orders) if n % p == 0]
        sub_orders = tuple(p ** factorize(group.orders[a])[p] for a in keep)
        images = tuple(
            tuple(alpha.images[a][b] % sub_orders[bi] for bi, b in enumerate(keep)) for a in keep
        )
        out.append((p, GroupSpec(sub_orders), EndoSpec(images)))
    return out


def crt_recombine(group: GroupSpec, parts: list[tuple[int, GroupSpec, EndoSpec]]) -> EndoSpec:
    """Inverse of crt_split: rebuild alpha from its p-components."""
    r = len(group.orders)
    images = []
    for a in range(r):
        row = []
        for b in range(r):
            residues, moduli = [], []
            for p, sub, endo in parts:
                keep = [c for c, n in enumerate(group.orders) if n % p == 0]
                if a in keep and b in keep:
                    residues.append(endo.images[keep.index(a)][keep.index(b)])
                    moduli.append(sub.orders[keep.index(b)])
            row.append(_crt(residues, moduli) % group.orders[b])
        images.append(tuple(row))
    return EndoSpec(tuple(images))


def _crt(residues: list[int], moduli: list[int]) -> int:
    x, m = 0, 1
    for r, n in zip(residues, moduli):
        # moduli are powers of distinct primes, hence coprime
        t = ((r - x) * pow(m, -1, n)) % n
        x += m * t
        m *= n
    return x


@dataclass(frozen=True)
class Embedding:
    """Result of embedding a p-group endomorphism into M_d(Z/p^k)."""

    p: int
    k: int
    exponents: tuple[int, ...]  # sorted non-increasing
    order: tuple[int, ...]  # order[new_index] = original factor index
    matrix: np.ndarray

    @property
    def modulus(self) -> int:
        return self.p**self.k

    def s(self, g: Sequence[int]) -> tuple[int, ...]:
        """The injective map G -> (Z/p^k)^d, in the sorted coordinate order."""
        q = self.modulus
        return tuple(
            (g[self.order[i]] * self.p ** (self.k - ki)) % q for i, ki in enumerate(self.exponents)
        )


def embed(group: GroupSpec, alpha: EndoSpec) -> Embedding:
    """A(alpha)_{i,j} = p^(k_j - k_i) alpha(e_j)_i over Z/p^k, k the largest exponent.

    Factors are first sorted by non-increasing exponent; negative powers of p
    are exact divisions, guaranteed by the order constraint on alpha.
    """
    p, exps = group.p_exponents()
    r = len(exps)
    if len(alpha.images) != r or any(len(img) != r for img in alpha.images):
        raise InvalidEndomorphism("endomorphism images must form an r x r table")
    alpha = alpha.normalized(group)
    order = tuple(sorted(range(len(exps)), key=lambda a: -exps[a]))
    ks = tuple(exps[a] for a in order)
    k = ks[0]
    d = len(ks)
    A = np.zeros((d, d), dtype=np.int64)
    for i in range(d):
        for j in range(d):
            v = alpha.images[order[j]][order[i]]
            diff = ks[j] - ks[i]
            if diff >= 0:
                A[i, j] = (v * p**diff) % p**k
            else:
                if v % p ** (-diff):
                    raise InvalidEndomorphism(
                        f"alpha(e_{order[j] + 1})_{order[i] + 1} = {v} is not divisible by "
                        f"{p ** (-diff)} (entry ({i + 1},{j + 1}))"
                    )
                A[i, j] = (v // p ** (-diff)) % p**k
    return Embedding(p, k, ks, order, A)


def embed_automaton(
    group: GroupSpec, maps: dict[int, EndoSpec]
) -> tuple[Embedding, PolyMatrix]:
    """Embed a CA given by one endomorphism per neighbourhood offset."""
    embs = {off: embed(group, a) for off, a in maps.items()}
    first = next(iter(embs.values()))
    T = PolyMatrix.from_coefficients({off: e.matrix for off, e in embs.items()}, first.modulus)
    return first, T


# -- finite fields F_{p^e} = F_p[w]/(modulus) -----------------------------------

def _poly_mod(a: list[int], m: list[int], p: int) -> list[int]:
    """Remainder of a by monic m over F_p; coefficient lists low -> high."""
    a = [c % p for c in a]
    dm = len(m) - 1
    inv = pow(m[-1], -1, p)
    for i in range(len(a) - 1, dm - 1, -1):
        c = (a[i] * inv) % p
        if c:
            for j in range(dm + 1):
                a[i - dm + j] = (a[i - dm + j] - c * m[j]) % p
    return (a + [0] * dm)[:dm]


def is_irreducible(modulus: Sequence[int], p: int) -> bool:
    """Exhaustive factor search; fine for degree <= 8."""
    m = [c % p for c in modulus]
    while m and m[-1] == 0:
        m.pop()
    e = len(m) - 1
    if e < 1:
        return False
    for deg in range(1, e // 2 + 1):
        for low in itertools.product(range(p), repeat=deg):
            f = list(low) + [1]
            if not any(_poly_mod(m, f, p)):
                return False
    return True


class FiniteField:
    """F_{p^e} with elements as coefficient tuples in the basis 1, w, ..., w^(e-1)."""

    def __init__(self, p: int, modulus: Sequence[int]):
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        m = [c % p for c in modulus]
        while m and m[-1] == 0:
            m.pop()
        if len(m) < 2:
            raise ValueError("modulus must have degree >= 1")
        if len(m) - 1 > 8:
            raise ValueError("irreducibility is only checked for degree <= 8")
        if not is_irreducible(m, p):
            raise ValueError(f"modulus {m} is reducible over F_{p}")
        inv = pow(m[-1], -1, p)
        self.p = p
        self.modulus = tuple((c * inv) % p for c in m)
        self.e = len(m) - 1

    def elem(self, coeffs: Sequence[int]) -> tuple[int, ...]:
        return tuple(_poly_mod(list(coeffs) or [0], list(self.modulus), self.p))

    def add(self, a, b):
        return tuple((x + y) % self.p for x, y in zip(a, b))

    def mul(self, a, b):
        prod_ = [0] * (2 * self.e - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                prod_[i + j] += x * y
        return self.elem(prod_)

    def zero(self):
        return (0,) * self.e

    def one(self):
        return self.elem([1])

    def mult_matrix(self, a) -> np.ndarray:
        """Matrix of x -> a*x; column c is a * w^c."""
        M = np.zeros((self.e, self.e), dtype=np.int64)
        for c in range(self.e):
            basis = [0] * self.e
            basis[c] = 1
            M[:, c] = self.mul(a, tuple(basis))
        return M

    def elements(self):
        return itertools.product(range(self.p), repeat=self.e)


def flatten_field(
    entries: Sequence[Sequence[dict[int, tuple[int, ...]]]], field: FiniteField
) -> PolyMatrix:
    """Rewrite a d x d matrix over F_{p^e}[u,u^-1] as (d e) x (d e) over Z/p.

    ``entries[i][j]`` maps exponent of u -> field element.
    """
    d = len(entries)
    e = field.e
    n = d * e
    rows = [[dict() for _ in range(n)] for _ in range(n)]
    for i in range(d):
        for j in range(d):
            for exp, a in entries[i][j].items():
                M = field.mult_matrix(a)
                for r in range(e):
                    for c in range(e):
                        if M[r, c]:
                            rows[i * e + r][j * e + c][exp] = int(M[r, c])
    return PolyMatrix([[LaurentPoly(c, field.p) for c in r] for r in rows], field.p)


def commuting_square_holds(group: GroupSpec, alpha: EndoSpec, emb: Embedding | None = None) -> bool:
    """Exhaustively check s(alpha(g)) == A(alpha) s(g) for every g in G."""
    emb = emb or embed(group, alpha)
    q = emb.modulus
    A = emb.matrix
    for g in group.elements():
        lhs = emb.s(alpha.apply(group, g))
        rhs = tuple(int(v) for v in (A @ np.array(emb.s(g), dtype=np.int64)) % q)
        if lhs != rhs:
            return False
    return True
