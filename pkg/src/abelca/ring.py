"""Exact arithmetic over Z/p^l: Laurent polynomials and matrices of them.

A linear cellular automaton on R^d is stored as a d x d matrix of Laurent
polynomials in the shift variable ``u``; the coefficient of ``u^i`` is the
d x d matrix applied to the cell at distance ``i`` to the left.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    f = 2
    while f * f <= n:
        if n % f == 0:
            return False
        f += 1
    return True


def prime_power(n: int) -> tuple[int, int] | None:
    """Return ``(p, e)`` with ``n == p**e``, or None if n is not a prime power."""
    if n < 2:
        return None
    p = 2
    while p * p <= n and n % p:
        p += 1
    if n % p:
        p = n
    e = 0
    while n % p == 0:
        n //= p
        e += 1
    return (p, e) if n == 1 else None


@dataclass(frozen=True)
class ResidueRing:
    """The ring Z/p^l."""

    p: int
    l: int = 1

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"{self.p} is not prime")
        if self.l < 1:
            raise ValueError("exponent l must be >= 1")

    @property
    def modulus(self) -> int:
        return self.p**self.l

    @classmethod
    def from_modulus(cls, q: int) -> "ResidueRing":
        pe = prime_power(q)
        if pe is None:
            raise ValueError(f"{q} is not a prime power")
        return cls(*pe)

    def elements(self) -> range:
        return range(self.modulus)

    def __str__(self):
        return f"Z{self.p}^{self.l}"


class LaurentPoly:
    """Sparse Laurent polynomial over Z/q, immutable.

    ``coeffs`` maps exponent -> coefficient; zero coefficients are never stored.
    """

    __slots__ = ("_c", "q", "_hash")

    def __init__(self, coeffs: Mapping[int, int] | None = None, q: int = 2):
        self.q = q
        self._c = {e: c % q for e, c in (coeffs or {}).items() if c % q}
        self._hash = None

    @classmethod
    def const(cls, c: int, q: int) -> "LaurentPoly":
        return cls({0: c}, q)

    @classmethod
    def mono(cls, c: int, e: int, q: int) -> "LaurentPoly":
        return cls({e: c}, q)

    @classmethod
    def from_dense(cls, lo: int, arr: Sequence[int], q: int) -> "LaurentPoly":
        return cls({lo + i: int(c) for i, c in enumerate(arr) if c % q}, q)

    # -- inspection --------------------------------------------------------
    @property
    def coeffs(self) -> dict[int, int]:
        return dict(self._c)

    def terms(self) -> list[tuple[int, int]]:
        return sorted(self._c.items())

    def __getitem__(self, e: int) -> int:
        return self._c.get(e, 0)

    def is_zero(self) -> bool:
        return not self._c

    def support(self) -> tuple[int, int] | None:
        if not self._c:
            return None
        return min(self._c), max(self._c)

    def to_dense(self) -> tuple[int, np.ndarray]:
        lo, hi = self.support() or (0, -1)
        arr = np.zeros(hi - lo + 1, dtype=np.int64)
        for e, c in self._c.items():
            arr[e - lo] = c
        return lo, arr

    def is_unit_monomial(self) -> bool:
        if len(self._c) != 1:
            return False
        (c,) = self._c.values()
        return np.gcd(c, self.q) == 1

    # -- arithmetic --------------------------------------------------------
    def _coerce(self, other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            if other.q != self.q:
                raise ValueError(f"modulus mismatch: {self.q} vs {other.q}")
            return other
        if isinstance(other, (int, np.integer)):
            return LaurentPoly.const(int(other), self.q)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        out = dict(self._c)
        for e, c in other._c.items():
            out[e] = out.get(e, 0) + c
        return LaurentPoly(out, self.q)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly({e: -c for e, c in self._c.items()}, self.q)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if not self._c or not other._c:
            return LaurentPoly({}, self.q)
        if len(self._c) == 1 or len(other._c) == 1:
            out: dict[int, int] = {}
            for e1, c1 in self._c.items():
                for e2, c2 in other._c.items():
                    out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
            return LaurentPoly(out, self.q)
        lo1, a1 = self.to_dense()
        lo2, a2 = other.to_dense()
        # int64 convolution is exact while len * q^2 stays below 2^62
        if min(len(a1), len(a2)) * self.q * self.q < 2**62:
            prod = np.convolve(a1, a2) % self.q
            return LaurentPoly.from_dense(lo1 + lo2, prod.tolist(), self.q)
        out = {}
        for e1, c1 in self._c.items():
            for e2, c2 in other._c.items():
                out[e1 + e2] = out.get(e1 + e2, 0) + c1 * c2
        return LaurentPoly(out, self.q)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "LaurentPoly":
        if n < 0:
            raise ValueError("negative powers are not supported")
        result = LaurentPoly.const(1, self.q)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale_exponents(self, k: int) -> "LaurentPoly":
        """Substitute u -> u^k."""
        return LaurentPoly({k * e: c for e, c in self._c.items()}, self.q)

    def shift(self, n: int) -> "LaurentPoly":
        return LaurentPoly({e + n: c for e, c in self._c.items()}, self.q)

    def reduce(self, q: int) -> "LaurentPoly":
        """Image under Z/self.q -> Z/q (q must divide self.q)."""
        if self.q % q:
            raise ValueError(f"{q} does not divide {self.q}")
        return LaurentPoly(self._c, q)

    # -- comparison / display ---------------------------------------------
    def __eq__(self, other):
        if isinstance(other, (int, np.integer)):
            other = LaurentPoly.const(int(other), self.q)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.q == other.q and self._c == other._c

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.q, frozenset(self._c.items())))
        return self._hash

    def __str__(self):
        if not self._c:
            return "0"
        parts = []
        for e, c in self.terms():
            if e == 0:
                parts.append(str(c))
                continue
            mono = "u" if e == 1 else f"u^{e}"
            parts.append(mono if c == 1 else f"{c}*{mono}")
        return " + ".join(parts)

    def __repr__(self):
        return f"LaurentPoly({self}, q={self.q})"


def _zero(q: int) -> LaurentPoly:
    return LaurentPoly({}, q)


class PolyMatrix:
    """Square matrix over (Z/q)[u, u^-1]; the automaton itself."""

    __slots__ = ("rows", "q", "d")

    def __init__(self, rows: Sequence[Sequence[LaurentPoly | int]], q: int):
        d = len(rows)
        if d < 1 or any(len(r) != d for r in rows):
            raise ValueError("PolyMatrix must be square with dimension >= 1")
        self.q = q
        self.d = d
        self.rows = tuple(
            tuple(e if isinstance(e, LaurentPoly) else LaurentPoly.const(int(e), q) for e in r)
            for r in rows
        )
        for r in self.rows:
            for e in r:
                if e.q != q:
                    raise ValueError("entry modulus mismatch")

    @classmethod
    def identity(cls, d: int, q: int) -> "PolyMatrix":
        return cls([[1 if i == j else 0 for j in range(d)] for i in range(d)], q)

    @classmethod
    def zero(cls, d: int, q: int) -> "PolyMatrix":
        return cls([[0] * d for _ in range(d)], q)

    @classmethod
    def scalar(cls, p: LaurentPoly, d: int) -> "PolyMatrix":
        z = _zero(p.q)
        return cls([[p if i == j else z for j in range(d)] for i in range(d)], p.q)

    @classmethod
    def from_coefficients(cls, coeffs: Mapping[int, np.ndarray], q: int) -> "PolyMatrix":
        """Build from ``{exponent: d x d integer array}``."""
        mats = {e: np.asarray(m) for e, m in coeffs.items()}
        d = next(iter(mats.values())).shape[0]
        rows = [
            [LaurentPoly({e: int(m[i, j]) for e, m in mats.items()}, q) for j in range(d)]
            for i in range(d)
        ]
        return cls(rows, q)

    def __getitem__(self, ij: tuple[int, int]) -> LaurentPoly:
        i, j = ij
        return self.rows[i][j]

    def entries(self) -> Iterable[LaurentPoly]:
        for r in self.rows:
            yield from r

    def support(self) -> tuple[int, int] | None:
        sup = [s for s in (e.support() for e in self.entries()) if s is not None]
        if not sup:
            return None
        return min(s[0] for s in sup), max(s[1] for s in sup)

    def coefficients(self) -> dict[int, np.ndarray]:
        """``{i: T_i}`` with T_i the d x d integer coefficient of u^i."""
        out: dict[int, np.ndarray] = {}
        for a, row in enumerate(self.rows):
            for b, p in enumerate(row):
                for e, c in p.terms():
                    if e not in out:
                        out[e] = np.zeros((self.d, self.d), dtype=np.int64)
                    out[e][a, b] = c
        return dict(sorted(out.items()))

    def coefficient(self, e: int) -> np.ndarray:
        return np.array([[p[e] for p in r] for r in self.rows], dtype=np.int64)

    def _check(self, other: "PolyMatrix"):
        if not isinstance(other, PolyMatrix):
            raise TypeError("expected PolyMatrix")
        if other.q != self.q or other.d != self.d:
            raise ValueError("ring or dimension mismatch")

    def __add__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check(other)
        return PolyMatrix(
            [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)], self.q
        )

    def __sub__(self, other: "PolyMatrix") -> "PolyMatrix":
        self._check(other)
        return PolyMatrix(
            [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(self.rows, other.rows)], self.q
        )

    def __neg__(self):
        return PolyMatrix([[-a for a in r] for r in self.rows], self.q)

    def __mul__(self, other):
        if isinstance(other, (LaurentPoly, int, np.integer)):
            return PolyMatrix([[a * other for a in r] for r in self.rows], self.q)
        self._check(other)
        d = self.d
        cols = list(zip(*other.rows))
        out = []
        for r in self.rows:
            row = []
            for c in cols:
                acc = _zero(self.q)
                for a, b in zip(r, c):
                    if not a.is_zero() and not b.is_zero():
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        assert len(out) == d
        return PolyMatrix(out, self.q)

    def __rmul__(self, other):
        if isinstance(other, (LaurentPoly, int, np.integer)):
            return self * other
        return NotImplemented

    def __pow__(self, n: int) -> "PolyMatrix":
        return mat_pow(self, n)

    def __eq__(self, other):
        if not isinstance(other, PolyMatrix):
            return NotImplemented
        return self.q == other.q and self.rows == other.rows

    def __hash__(self):
        return hash((self.q, self.rows))

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries())

    def reduce(self, q: int) -> "PolyMatrix":
        return PolyMatrix([[e.reduce(q) for e in r] for r in self.rows], q)

    def scale_exponents(self, k: int) -> "PolyMatrix":
        return PolyMatrix([[e.scale_exponents(k) for e in r] for r in self.rows], self.q)

    def __str__(self):
        return "[" + "; ".join(", ".join(str(e) for e in r) for r in self.rows) + "]"

    def __repr__(self):
        return f"PolyMatrix({self}, q={self.q})"


@dataclass(frozen=True)
class MonicPoly:
    """Pi(X) = X^m - sum_j lambdas[j] X^j with Laurent-polynomial lambdas."""

    lambdas: tuple[LaurentPoly, ...]

    def __post_init__(self):
        if len(self.lambdas) < 1:
            raise ValueError("degree must be >= 1")
        if len({lam.q for lam in self.lambdas}) != 1:
            raise ValueError("coefficients over different moduli")

    @property
    def degree(self) -> int:
        return len(self.lambdas)

    @property
    def q(self) -> int:
        return self.lambdas[0].q

    @classmethod
    def from_coefficients(cls, coeffs: Sequence[LaurentPoly]) -> "MonicPoly":
        """From ``[c_0, ..., c_{m-1}]`` of X^m + sum c_j X^j."""
        return cls(tuple(-c for c in coeffs))

    def coefficients(self) -> list[LaurentPoly]:
        """``[c_0, ..., c_{m-1}, 1]`` so that Pi(X) = sum c_j X^j."""
        q = self.q
        return [-lam for lam in self.lambdas] + [LaurentPoly.const(1, q)]

    def exponent_set(self) -> set[int]:
        out: set[int] = set()
        for lam in self.lambdas:
            out |= set(lam.coeffs)
        return out

    def __str__(self):
        parts = [f"X^{self.degree}"]
        for j in range(self.degree - 1, -1, -1):
            c = -self.lambdas[j]
            if c.is_zero():
                continue
            mono = "" if j == 0 else ("X" if j == 1 else f"X^{j}")
            parts.append(f"({c}){mono}")
        return " + ".join(parts)


# -- polynomials in X with Laurent coefficients (lists, index = power of X) --

def _xadd(a: list[LaurentPoly], b: list[LaurentPoly], q: int) -> list[LaurentPoly]:
    n = max(len(a), len(b))
    z = _zero(q)
    return [(a[i] if i < len(a) else z) + (b[i] if i < len(b) else z) for i in range(n)]


def _xmul(a: list[LaurentPoly], b: list[LaurentPoly], q: int) -> list[LaurentPoly]:
    if not a or not b:
        return []
    out = [_zero(q) for _ in range(len(a) + len(b) - 1)]
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j, y in enumerate(b):
            if not y.is_zero():
                out[i + j] = out[i + j] + x * y
    return out


def _cofactor_det(m: list[list[list[LaurentPoly]]], q: int) -> list[LaurentPoly]:
    """Laplace expansion along the first row; entries are X-polynomials."""
    n = len(m)
    if n == 1:
        return m[0][0]
    total: list[LaurentPoly] = []
    for j in range(n):
        entry = m[0][j]
        if all(c.is_zero() for c in entry):
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = _xmul(entry, _cofactor_det(minor, q), q)
        if j % 2:
            term = [-c for c in term]
        total = _xadd(total, term, q)
    return total


def berkowitz(T: PolyMatrix) -> list[LaurentPoly]:
    """Division-free characteristic polynomial, ``[1, c_1, ..., c_d]`` with
    det(X I - T) = X^d + c_1 X^(d-1) + ... + c_d."""
    q, d = T.q, T.d
    A = [list(r) for r in T.rows]
    one = LaurentPoly.const(1, q)
    poly = [one]
    for r in range(d):
        a = A[r][r]
        R = A[r][:r]
        C = [A[i][r] for i in range(r)]
        toeplitz = [one, -a]
        vec = C
        for _ in range(r):
            dot = _zero(q)
            for x, y in zip(R, vec):
                dot = dot + x * y
            toeplitz.append(-dot)
            vec = [sum((A[i][j] * vec[j] for j in range(r)), _zero(q)) for i in range(r)]
        new = []
        for i in range(r + 2):
            acc = _zero(q)
            for j in range(min(i, r) + 1):
                acc = acc + toeplitz[i - j] * poly[j]
            new.append(acc)
        poly = new
    return poly


def char_poly(T: PolyMatrix, method: str = "auto") -> MonicPoly:
    """det(X I - T) as a MonicPoly.

    Cofactor expansion is used up to dimension 4, Berkowitz above; both are
    division-free, which matters because Z/p^l has zero divisors.
    """
    q, d = T.q, T.d
    if method == "auto":
        method = "cofactor" if d <= 4 else "berkowitz"
    if method == "cofactor":
        one = LaurentPoly.const(1, q)
        m = [
            [[-T[i, j], one] if i == j else [-T[i, j]] for j in range(d)]
            for i in range(d)
        ]
        coeffs = _cofactor_det(m, q)
        coeffs = coeffs + [_zero(q)] * (d + 1 - len(coeffs))
        return MonicPoly.from_coefficients(coeffs[:d])
    if method == "berkowitz":
        high_first = berkowitz(T)
        return MonicPoly.from_coefficients(list(reversed(high_first))[:d])
    raise ValueError(f"unknown method {method!r}")


def det(T: PolyMatrix) -> LaurentPoly:
    d = T.d
    if d <= 4:
        m = [[[T[i, j]] for j in range(d)] for i in range(d)]
        res = _cofactor_det(m, T.q)
        return res[0] if res else _zero(T.q)
    c_d = berkowitz(T)[-1]
    return c_d if d % 2 == 0 else -c_d


def trace(T: PolyMatrix) -> LaurentPoly:
    return sum((T[i, i] for i in range(T.d)), _zero(T.q))


def dual(T: PolyMatrix) -> PolyMatrix:
    """det(T) T^-1, i.e. the adjugate; only 2 x 2 is supported."""
    if T.d != 2:
        raise NotImplementedError(f"dual is only defined for d = 2, got d = {T.d}")
    return PolyMatrix([[T[1, 1], -T[0, 1]], [-T[1, 0], T[0, 0]]], T.q)


def poly_eval(pi: MonicPoly, T: PolyMatrix) -> PolyMatrix:
    """Pi(T) by Horner's rule."""
    if pi.q != T.q:
        raise ValueError("modulus mismatch")
    coeffs = pi.coefficients()
    eye = PolyMatrix.identity(T.d, T.q)
    acc = eye
    for c in reversed(coeffs[:-1]):
        acc = acc * T + PolyMatrix.scalar(c, T.d)
    return acc


def mat_pow(T: PolyMatrix, n: int) -> PolyMatrix:
    if n < 0:
        raise ValueError("n must be >= 0")
    result = PolyMatrix.identity(T.d, T.q)
    base = T
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result
