"""Direct simulation of linear cellular automata on finitely supported words."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .ring import PolyMatrix, det, dual, mat_pow, trace


@dataclass(frozen=True)
class Configuration:
    """Finitely supported configuration: position -> vector in (Z/q)^d."""

    cells: Mapping[int, tuple[int, ...]]
    q: int
    d: int

    def __post_init__(self):
        clean = {}
        for x, v in self.cells.items():
            v = tuple(int(c) % self.q for c in v)
            if len(v) != self.d:
                raise ValueError(f"cell {x} has dimension {len(v)}, expected {self.d}")
            if any(v):
                clean[int(x)] = v
        object.__setattr__(self, "cells", dict(sorted(clean.items())))

    @classmethod
    def delta(cls, xi: Sequence[int], q: int, at: int = 0) -> "Configuration":
        return cls({at: tuple(xi)}, q, len(xi))

    def __getitem__(self, x: int) -> tuple[int, ...]:
        return self.cells.get(x, (0,) * self.d)

    def __add__(self, other: "Configuration") -> "Configuration":
        out = dict(self.cells)
        for x, v in other.cells.items():
            out[x] = tuple(a + b for a, b in zip(self[x], v))
        return Configuration(out, self.q, self.d)

    def shift(self, n: int = 1) -> "Configuration":
        """Right shift: sigma(r)_x = r_(x-1)."""
        return Configuration({x + n: v for x, v in self.cells.items()}, self.q, self.d)

    def is_empty(self) -> bool:
        return not self.cells

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return (self.q, self.d, self.cells) == (other.q, other.d, other.cells)


def step(c: Configuration, T: PolyMatrix) -> Configuration:
    """One application of T: out(x) = sum_i T_i c(x - i)."""
    if c.q != T.q or c.d != T.d:
        raise ValueError("configuration and automaton disagree on ring or dimension")
    out: dict[int, np.ndarray] = {}
    coeffs = T.coefficients()
    for x, v in c.cells.items():
        vec = np.array(v, dtype=np.int64)
        for i, Ti in coeffs.items():
            acc = out.setdefault(x + i, np.zeros(c.d, dtype=np.int64))
            acc += Ti @ vec
    return Configuration({x: tuple(int(a) for a in v % c.q) for x, v in out.items()}, c.q, c.d)


@dataclass(frozen=True)
class Diagram:
    """Spacetime diagram; ``cells[y, x - x0]`` is the cell vector at row y."""

    cells: np.ndarray = field(repr=False)
    x0: int
    q: int

    @property
    def steps(self) -> int:
        return self.cells.shape[0] - 1

    @property
    def d(self) -> int:
        return self.cells.shape[2]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def positions(self) -> np.ndarray:
        return np.arange(self.x0, self.x0 + self.width)

    def row(self, y: int) -> Configuration:
        r = self.cells[y]
        nz = np.nonzero(r.any(axis=1))[0]
        return Configuration({int(self.x0 + i): tuple(int(a) for a in r[i]) for i in nz}, self.q, self.d)

    def value(self, x: int, y: int) -> tuple[int, ...]:
        i = x - self.x0
        if 0 <= i < self.width:
            return tuple(int(a) for a in self.cells[y, i])
        return (0,) * self.d

    def nonzero(self) -> np.ndarray:
        return self.cells.any(axis=2)

    def reduce(self, q: int) -> "Diagram":
        if self.q % q:
            raise ValueError(f"{q} does not divide {self.q}")
        return Diagram(self.cells % q, self.x0, q)


def spacetime(T: PolyMatrix, xi: Sequence[int], steps: int) -> Diagram:
    """Rows 0..steps of T^y applied to xi placed at cell 0.

    Storage is dense over the light cone [a*steps, b*steps] where [a, b] is the
    exponent range of T.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    q, d = T.q, T.d
    if len(xi) != d:
        raise ValueError(f"initial vector has length {len(xi)}, expected {d}")
    sup = T.support() or (0, 0)
    a, b = min(sup[0], 0), max(sup[1], 0)
    x0 = a * steps
    width = (b - a) * steps + 1
    cells = np.zeros((steps + 1, width, d), dtype=np.int64)
    cells[0, -x0] = np.array(xi, dtype=np.int64) % q
    coeffs = T.coefficients()
    for y in range(1, steps + 1):
        prev = cells[y - 1]
        cur = cells[y]
        for i, Ti in coeffs.items():
            # cur[x] += Ti @ prev[x - i]
            if i >= 0:
                cur[i:] += prev[: width - i] @ Ti.T
            else:
                cur[:i] += prev[-i:] @ Ti.T
        cur %= q
    return Diagram(cells, x0, q)


def spacetime_by_powers(T: PolyMatrix, xi: Sequence[int], steps: int) -> list[Configuration]:
    """Rows computed independently as mat_pow(T, y) xi; slow, used as a cross-check."""
    xi_vec = np.array(xi, dtype=np.int64)
    rows = []
    for y in range(steps + 1):
        P = mat_pow(T, y)
        cells = {e: tuple(int(v) for v in (M @ xi_vec) % T.q) for e, M in P.coefficients().items()}
        rows.append(Configuration(cells, T.q, T.d))
    return rows


@dataclass(frozen=True)
class DualIdentityReport:
    supported: bool
    reason: str = ""
    per_n: tuple[bool, ...] = ()
    trace_equal: bool = False

    @property
    def ok(self) -> bool:
        return self.supported and self.trace_equal and all(self.per_n)


def check_dual_identity(T: PolyMatrix, n_max: int) -> DualIdentityReport:
    """Check T^(2^n) = dual(T)^(2^n) + tr(T)^(2^n) I exactly for n <= n_max.

    Only meaningful in characteristic 2 for 2 x 2 automata whose determinant
    is a unit monomial.
    """
    if T.q != 2:
        return DualIdentityReport(False, f"ring Z/{T.q} is not of characteristic 2")
    if T.d != 2:
        return DualIdentityReport(False, f"dimension {T.d} != 2")
    if not det(T).is_unit_monomial():
        return DualIdentityReport(False, f"det {det(T)} is not a unit monomial")
    Td = dual(T)
    tr = trace(T)
    eye = PolyMatrix.identity(2, 2)
    results = []
    A, B, t = T, Td, tr
    for n in range(n_max + 1):
        results.append(A == B + eye * t)
        A, B, t = A * A, B * B, t * t
    return DualIdentityReport(True, "", tuple(results), trace(Td) == tr)


@dataclass(frozen=True)
class FermatVerdict:
    violation: tuple[tuple[int, ...], int, int] | None
    horizon: int

    @property
    def holds_within_horizon(self) -> bool:
        return self.violation is None

    def __str__(self):
        if self.violation is None:
            return f"no violation within horizon {self.horizon}"
        s, n, x = self.violation
        return f"violation: s={s} n={n} x={x}"


def is_weakly_p_fermat(T: PolyMatrix, s: Sequence[int], p: int, horizon: int) -> FermatVerdict:
    """Search for x, n with T^(np)(s)_x = 0 XOR (pi_p T^n(s))_x = 0, n p <= horizon."""
    if horizon < p:
        raise ValueError("horizon must be >= p")
    diag = spacetime(T, s, horizon)
    nz = diag.nonzero()
    pos = diag.positions()
    for n in range(horizon // p + 1):
        big = nz[n * p]
        small = np.zeros_like(big)
        # pi_p moves cell y to p*y
        for idx in np.nonzero(nz[n])[0]:
            target = p * int(pos[idx]) - diag.x0
            if 0 <= target < diag.width:
                small[target] = True
            else:
                return FermatVerdict((tuple(s), n, p * int(pos[idx])), horizon)
        bad = np.nonzero(big != small)[0]
        if len(bad):
            return FermatVerdict((tuple(s), n, int(pos[bad[0]])), horizon)
    return FermatVerdict(None, horizon)

