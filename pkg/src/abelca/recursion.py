"""Scaling relation, leaf decomposition tables and grouping windows.

From a monic annihilating polynomial of T we derive a relation

    T^(k^n m') = sum_{i,j} mu[i,j] u^(k^n i) T^(k^n j)        (all n >= 0)

and, from its n = 0 instance, tables expressing Xi^(k j + t)_x through terms
Xi^(j')_(x + delta) with j' < m'.  Here Xi^y_x denotes the u^x coefficient of
T^y, so every identity below is an identity between integer matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .ring import LaurentPoly, MonicPoly, PolyMatrix, ResidueRing, mat_pow


@dataclass(frozen=True)
class FrobeniusPeriod:
    p: int
    M: int
    N: int

    @property
    def k(self) -> int:
        return self.p**self.N


def frobenius_period(R: ResidueRing) -> FrobeniusPeriod:
    """Smallest (M, N), N >= 1, with x^(p^(M+N)) = x^(p^M) for every x in R."""
    q, p = R.modulus, R.p
    elems = np.arange(q, dtype=object)

    def frob(vals, times):
        for _ in range(times):
            vals = np.array([pow(int(v), p, q) for v in vals], dtype=object)
        return vals

    for M in range(4 * R.l + 8):
        base = frob(elems, M)
        cur = base
        for N in range(1, 4 * R.l + 8):
            cur = frob(cur, 1)
            if all(a == b for a, b in zip(cur, base)):
                return FrobeniusPeriod(p, M, N)
    raise AssertionError(f"no Frobenius period found for {R}")


# -- polynomials in X over (Z/q)[U, U^-1]; list index = power of X -------------

def _xpoly_mul(a: list[LaurentPoly], b: list[LaurentPoly], q: int) -> list[LaurentPoly]:
    out = [LaurentPoly({}, q) for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j, y in enumerate(b):
            if not y.is_zero():
                out[i + j] = out[i + j] + x * y
    return out


def _xpoly_pow(a: list[LaurentPoly], n: int, q: int) -> list[LaurentPoly]:
    result = [LaurentPoly.const(1, q)]
    base = a
    while n:
        if n & 1:
            result = _xpoly_mul(result, base, q)
        n >>= 1
        if n:
            base = _xpoly_mul(base, base, q)
    return result


@dataclass(frozen=True)
class Relation:
    """X^m' = sum mu[(i, j)] U^i X^j with U = u^(k^n), X = T^(k^n)."""

    ring: ResidueRing
    period: FrobeniusPeriod
    m: int
    m_prime: int
    mu: dict[tuple[int, int], int] = field(repr=False)

    @property
    def k(self) -> int:
        return self.period.k

    @property
    def q(self) -> int:
        return self.ring.modulus

    def coefficient_polys(self) -> list[LaurentPoly]:
        """mu as m' Laurent polynomials in u, indexed by power of X."""
        polys: list[dict[int, int]] = [dict() for _ in range(self.m_prime)]
        for (i, j), c in self.mu.items():
            polys[j][i] = c
        return [LaurentPoly(p, self.q) for p in polys]

    def offsets(self) -> list[int]:
        return sorted({i for i, _ in self.mu})

    def check(self, T: PolyMatrix, ns=(0, 1, 2)) -> dict[int, bool]:
        """Exact matrix check of the relation for each n in ``ns``."""
        out = {}
        for n in ns:
            s = self.k**n
            lhs = mat_pow(T, s * self.m_prime)
            rhs = PolyMatrix.zero(T.d, T.q)
            Ts = mat_pow(T, s)
            powers = {0: PolyMatrix.identity(T.d, T.q)}
            for j in range(1, self.m_prime):
                powers[j] = powers[j - 1] * Ts
            for j, c in enumerate(self.coefficient_polys()):
                if not c.is_zero():
                    rhs = rhs + powers[j] * c.scale_exponents(s)
            out[n] = lhs == rhs
        return out


def derive_relation(pi: MonicPoly, R: ResidueRing) -> Relation:
    """Expand P(X) = (sum_j (sum_i lam[i,j]^(p^M) U^(p^M i))^(p^(l-1)) X^(p^(M+l-1) j))^(p^(l-1))."""
    if pi.q != R.modulus:
        raise ValueError(f"polynomial is over Z/{pi.q}, ring is {R}")
    q, p, l = R.modulus, R.p, R.l
    period = frobenius_period(R)
    pM = p**period.M
    pl1 = p ** (l - 1)
    m = pi.degree
    m_prime = p ** (period.M + 2 * (l - 1)) * m

    step = p ** (period.M + l - 1)
    S = [LaurentPoly({}, q) for _ in range(step * (m - 1) + 1)]
    for j, lam in enumerate(pi.lambdas):
        inner = LaurentPoly({pM * i: pow(c, pM, q) for i, c in lam.terms()}, q)
        S[step * j] = inner**pl1
    P = _xpoly_pow(S, pl1, q)
    while len(P) > 1 and P[-1].is_zero():
        P.pop()
    if len(P) > m_prime:
        raise AssertionError(f"relation degree {len(P) - 1} >= m' = {m_prime}")
    mu = {(i, j): c for j, poly in enumerate(P) for i, c in poly.terms()}
    return Relation(R, period, m, m_prime, dict(sorted(mu.items(), key=lambda kv: (kv[0][1], kv[0][0]))))


# -- leaf tables ---------------------------------------------------------------

Entry = tuple[int, int, int]  # (delta, j', coefficient)


class _Remainders:
    """Streams r_e = X^e mod (X^m' - sum mu U^i X^j) as dense (m', width) arrays."""

    def __init__(self, rel: Relation):
        self.q = rel.q
        self.m = rel.m_prime
        offs = rel.offsets() or [0]
        self.mu_lo = offs[0]
        self.mu = np.zeros((self.m, offs[-1] - offs[0] + 1), dtype=np.int64)
        for (i, j), c in rel.mu.items():
            self.mu[j, i - self.mu_lo] = c

    def start(self) -> tuple[int, np.ndarray, int]:
        """State at e = m': the reduced X^m'."""
        return self.m, self.mu.copy(), self.mu_lo

    def advance(self, r: np.ndarray, lo: int) -> tuple[np.ndarray, int]:
        top = r[-1]
        nz = np.nonzero(top)[0]
        shifted = np.zeros_like(r)
        shifted[1:] = r[:-1]
        if len(nz) == 0:
            return shifted, lo
        w_mu = self.mu.shape[1]
        new_lo = min(lo, lo + int(nz[0]) + self.mu_lo)
        new_hi = max(lo + r.shape[1] - 1, lo + int(nz[-1]) + self.mu_lo + w_mu - 1)
        out = np.zeros((self.m, new_hi - new_lo + 1), dtype=np.int64)
        out[:, lo - new_lo : lo - new_lo + r.shape[1]] = shifted
        for a in nz:
            col = lo + int(a) + self.mu_lo - new_lo
            out[:, col : col + w_mu] += int(top[a]) * self.mu
        out %= self.q
        keep = np.nonzero(out.any(axis=0))[0]
        if len(keep) == 0:
            return out[:, :1] * 0, new_lo
        return out[:, keep[0] : keep[-1] + 1], new_lo + int(keep[0])


def _entries_of(r: np.ndarray, lo: int) -> tuple[Entry, ...]:
    js, cols = np.nonzero(r)
    ents = [(-(lo + int(c)), int(j), int(r[j, c])) for j, c in zip(js, cols)]
    return tuple(sorted(ents, key=lambda e: (e[1], e[0])))


class LeafTables:
    """Xi^(k j + t)_x = sum c Xi^(j')_(x + delta) over entries (delta, j', c) of (j, t).

    Tables are computed lazily and cached; exponents below m' are identities.
    """

    CHECKPOINT = 256

    def __init__(self, rel: Relation):
        self.rel = rel
        self.k = rel.k
        self.m_prime = rel.m_prime
        self._rem = _Remainders(rel)
        self._cache: dict[int, tuple[Entry, ...]] = {}
        e0, r0, lo0 = self._rem.start()
        self._checkpoints: dict[int, tuple[np.ndarray, int]] = {e0: (r0, lo0)}
        self._bounds: tuple[int, int] | None = None

    @property
    def max_exponent(self) -> int:
        return self.k * self.m_prime - 1

    def exponent_entries(self, e: int) -> tuple[Entry, ...]:
        if not 0 <= e <= self.max_exponent:
            raise IndexError(f"exponent {e} outside [0, {self.max_exponent}]")
        if e < self.m_prime:
            return ((0, e, 1),)
        if e not in self._cache:
            start = max(c for c in self._checkpoints if c <= e)
            r, lo = self._checkpoints[start]
            for cur in range(start, e):
                r, lo = self._rem.advance(r, lo)
                if (cur + 1) % self.CHECKPOINT == 0:
                    self._checkpoints[cur + 1] = (r, lo)
            self._cache[e] = _entries_of(r, lo)
        return self._cache[e]

    def entries(self, j: int, t: int) -> tuple[Entry, ...]:
        if not (0 <= j < self.m_prime and 0 <= t < self.k):
            raise IndexError(f"(j, t) = ({j}, {t}) out of range")
        return self.exponent_entries(self.k * j + t)

    def items(self) -> Iterator[tuple[tuple[int, int], tuple[Entry, ...]]]:
        for j in range(self.m_prime):
            for t in range(self.k):
                yield (j, t), self.entries(j, t)

    def offset_bounds(self) -> tuple[int, int]:
        """(d_min, d_max) over every table; streams without caching."""
        if self._bounds is None:
            d_min = d_max = 0
            e, r, lo = self._rem.start()
            while True:
                nzc = np.nonzero(r.any(axis=0))[0]
                if len(nzc):
                    d_min = min(d_min, -(lo + int(nzc[-1])))
                    d_max = max(d_max, -(lo + int(nzc[0])))
                if e == self.max_exponent:
                    break
                r, lo = self._rem.advance(r, lo)
                e += 1
            self._bounds = (d_min, d_max)
        return self._bounds


def leaf_tables(rel: Relation) -> LeafTables:
    return LeafTables(rel)


# -- windows -------------------------------------------------------------------

@dataclass(frozen=True)
class Window:
    d_min: int
    d_max: int
    lo: int
    hi: int
    rule: str = "exact"

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def offsets(self) -> range:
        return range(self.lo, self.hi + 1)

    def __contains__(self, o: int) -> bool:
        return self.lo <= o <= self.hi


def _cdiv(a: int, b: int) -> int:
    return -((-a) // b)


def closes(lo: int, hi: int, d_min: int, d_max: int, k: int) -> bool:
    """True when every child entry in [lo, hi] reads parent entries in [lo, hi] only."""
    return lo <= hi and _cdiv(hi + d_max, k) <= hi and _cdiv(lo + d_min, k) >= lo


def exact_window(d_min: int, d_max: int, k: int) -> tuple[int, int]:
    """Smallest [lo, hi] with ``closes``; both conditions are monotone."""
    hi = math.floor(d_max / (k - 1)) - 2
    while _cdiv(hi + d_max, k) > hi:
        hi += 1
    lo = math.ceil(d_min / (k - 1)) + 2
    while _cdiv(lo + d_min, k) < lo:
        lo -= 1
    # the lower condition stays true when lo decreases
    return min(lo, hi), hi


def inequality_window(d_min: int, d_max: int, k: int) -> tuple[int, int]:
    """Coarse bounds: hi >= d_max + ceil(hi/k), lo <= d_min - 1 + ceil((lo+1)/k).

    Searched outward from the raw offset bounds.
    """
    hi = d_max
    while hi < d_max + _cdiv(hi, k):
        hi += 1
    lo = d_min
    while lo > d_min - 1 + _cdiv(lo + 1, k):
        lo -= 1
    return lo, hi


def rendering_cover(T: PolyMatrix, m_prime: int) -> tuple[int, int]:
    """Offsets o with T^j_(-o) != 0 for some j < m'."""
    lo = hi = 0
    P = PolyMatrix.identity(T.d, T.q)
    for _ in range(1, m_prime):
        P = P * T
        sup = P.support()
        if sup is not None:
            lo, hi = min(lo, -sup[1]), max(hi, -sup[0])
    return lo, hi


def compute_window(
    tables: LeafTables,
    k: int,
    rule: str = "exact",
    cover: tuple[int, int] | None = None,
    override: tuple[int, int] | None = None,
) -> Window:
    d_min, d_max = tables.offset_bounds()
    if override is not None:
        lo, hi = override
        if not closes(lo, hi, d_min, d_max, k):
            raise ValueError(
                f"window [{lo},{hi}] does not close under offsets [{d_min},{d_max}] with k={k}"
            )
        if cover is not None and not (lo <= cover[0] and cover[1] <= hi):
            raise ValueError(f"window [{lo},{hi}] does not cover rendering offsets {list(cover)}")
        return Window(d_min, d_max, lo, hi, "override")
    if rule == "exact":
        lo, hi = exact_window(d_min, d_max, k)
    elif rule == "inequality":
        lo, hi = inequality_window(d_min, d_max, k)
    else:
        raise ValueError(f"unknown window rule {rule!r}")
    if cover is not None:
        lo, hi = min(lo, cover[0]), max(hi, cover[1])
    return Window(d_min, d_max, lo, hi, rule)
