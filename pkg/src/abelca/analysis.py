"""Spectral and geometric measurements of substitution systems, plus the
simulation-vs-substitution verifier."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .engine import spacetime
from .ring import PolyMatrix
from .substitution import Grid, SubstSystem, expand, graph_analysis, seed_grid


# -- transition matrix ---------------------------------------------------------

@dataclass(frozen=True)
class TransitionMatrix:
    """``matrix[a, b]`` = number of children of state ids[b] equal to ids[a]."""

    ids: tuple[int, ...]
    matrix: sp.csr_matrix = field(repr=False)
    k: int
    blank: int

    @property
    def size(self) -> int:
        return len(self.ids)

    def column_sums(self) -> np.ndarray:
        return np.asarray(self.matrix.sum(axis=0)).ravel()

    def nonblank(self) -> "TransitionMatrix":
        keep = [i for i, sid in enumerate(self.ids) if sid != self.blank]
        sub = self.matrix[keep][:, keep].tocsr()
        return TransitionMatrix(tuple(self.ids[i] for i in keep), sub, self.k, self.blank)

    def power(self, n: int) -> "TransitionMatrix":
        P = sp.identity(self.size, dtype=np.int64, format="csr")
        for _ in range(n):
            P = (self.matrix @ P).tocsr()
        return TransitionMatrix(self.ids, P, self.k**n, self.blank)


def transition_matrix(sys_: SubstSystem, ids: Sequence[int] | None = None) -> TransitionMatrix:
    if ids is None:
        sys_.ensure_children(range(len(sys_.states)))
        ids = sys_.sorted_ids()
    ids = tuple(ids)
    pos = {sid: i for i, sid in enumerate(ids)}
    rows, cols = [], []
    for b, sid in enumerate(ids):
        for c in sys_.trans[sid]:
            if c not in pos:
                raise ValueError(f"child {c} of state {sid} is outside the index set")
            rows.append(pos[c])
            cols.append(b)
    n = len(ids)
    M = sp.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n, n))
    M.sum_duplicates()
    return TransitionMatrix(ids, M, sys_.k, sys_.blank)


# -- coloring ------------------------------------------------------------------

class Coloring:
    """Cell value -> color id: zero is 0, otherwise the vector read base q."""

    def __init__(self, q: int, d: int):
        self.q = q
        self.d = d

    def color_of(self, value: Sequence[int]) -> int:
        cid = 0
        for c in value:
            cid = cid * self.q + int(c) % self.q
        return cid

    def colors_of(self, values: np.ndarray) -> np.ndarray:
        """(..., d) array of values -> (...) color ids."""
        weights = self.q ** np.arange(self.d - 1, -1, -1, dtype=np.int64)
        return (np.asarray(values, dtype=np.int64) % self.q) @ weights

    def vector(self, cid: int) -> tuple[int, ...]:
        out = []
        for _ in range(self.d):
            cid, r = divmod(cid, self.q)
            out.append(r)
        return tuple(reversed(out))

    @property
    def n_colors(self) -> int:
        return self.q**self.d


class RenderingError(ValueError):
    pass


def cell_value_matrix(sys_: SubstSystem, T: PolyMatrix, xi: Sequence[int]) -> np.ndarray:
    """(d, N) matrix V with V @ state = cell value; column (j, o) is T^j_(-o) xi."""
    if T.q != sys_.q:
        raise RenderingError(f"automaton is over Z/{T.q}, system over Z/{sys_.q}")
    xi_v = np.array(xi, dtype=np.int64) % T.q
    V = np.zeros((T.d, sys_.N), dtype=np.int64)
    P = PolyMatrix.identity(T.d, T.q)
    for j in range(sys_.m_prime):
        if j:
            P = P * T
        for e, C in P.coefficients().items():
            o = -e
            col = C @ xi_v % T.q
            if not col.any():
                continue
            if not sys_.lo <= o <= sys_.hi:
                raise RenderingError(
                    f"T^{j} has support at {e}; window [{sys_.lo},{sys_.hi}] must contain {o}"
                )
            V[:, j * sys_.W + (o - sys_.lo)] = col
    return V


def state_to_cell_value(sys_: SubstSystem, sid: int, T: PolyMatrix, xi: Sequence[int]) -> tuple[int, ...]:
    V = cell_value_matrix(sys_, T, xi)
    return tuple(int(v) for v in (V @ sys_.states[sid].astype(np.int64)) % sys_.q)


def state_values(sys_: SubstSystem, V: np.ndarray) -> np.ndarray:
    """Cell values of every interned state, shape (n_states, d)."""
    S = np.stack(sys_.states).astype(np.int64)
    return (S @ V.T) % sys_.q


def grid_values(sys_: SubstSystem, g: Grid, V: np.ndarray) -> np.ndarray:
    vals = state_values(sys_, V)
    return vals[g.ids]


# -- fractal dimension ---------------------------------------------------------

@dataclass(frozen=True)
class DimensionResult:
    dimension: float
    spectral_radius: float
    iterations: int
    converged: bool
    kappa: int
    growth_estimate: float | None

    @property
    def growth_agrees(self) -> bool:
        return self.growth_estimate is not None and abs(self.growth_estimate - self.dimension) < 1e-3


def perron(
    M: sp.csr_matrix, tol: float = 1e-10, max_iter: int = 100_000, power: int = 1
) -> tuple[float, np.ndarray, int, bool]:
    """Spectral radius and right eigenvector of M^power (M nonnegative) by power iteration.

    Iterates with M^power + I so that periodic components still converge;
    M^power is applied as repeated products and never formed.  The start
    vector is all ones.
    """
    n = M.shape[0]
    if n == 0:
        return 0.0, np.zeros(0), 0, True
    A = M.astype(np.float64).tocsr()

    def apply(v):
        w = v
        for _ in range(power):
            w = A @ w
        return w + v

    v = np.ones(n) / n
    lam = 0.0
    for it in range(1, max_iter + 1):
        w = apply(v)
        s = w.sum()
        w /= s
        lam = s - 1.0
        if np.abs(w - v).max() <= tol and np.abs(apply(w) - s * w).max() <= tol * s:
            return lam, w, it, True
        v = w
    return lam, v, max_iter, False


def count_logs(sys_: SubstSystem, depths: Sequence[int]) -> dict[int, float]:
    """log_k of the non-blank count of the level-n expansion, from the transition matrix."""
    tm = transition_matrix(sys_).nonblank()
    pos = {sid: i for i, sid in enumerate(tm.ids)}
    h = np.zeros(tm.size)
    for _, sid in sys_.seed:
        if sid in pos:
            h[pos[sid]] += 1
    out: dict[int, float] = {}
    if not h.any():
        return out
    M = tm.matrix.astype(np.float64).tocsr()
    scale = 0.0  # rescaled so that large depths do not overflow
    cur = h
    for n in range(max(depths) + 1):
        total = cur.sum()
        if total <= 0:
            break
        if n in depths:
            out[n] = (scale + math.log(total)) / math.log(sys_.k)
        scale += math.log(total)
        cur = M @ (cur / total)
    return out


def growth_dimension(
    sys_: SubstSystem, depths: tuple[int, int, int] = (100, 200, 400), kappa: int = 1
) -> float | None:
    """Growth exponent of non-blank counts, fitted as c(n) ~ C n^r k^(D n).

    Depths are rounded up to multiples of kappa so periodic oscillations cancel.
    """
    ns = [kappa * -(-n // kappa) for n in depths]
    logs = count_logs(sys_, ns)
    if len(logs) < 3:
        return None
    A = np.array([[n, math.log(n), 1.0] for n in ns])
    D, _, _ = np.linalg.solve(A, np.array([logs[n] for n in ns]))
    return float(D)


def scc_spectral_radius(
    tm: TransitionMatrix, components: Sequence[Sequence[int]], power: int = 1,
    tol: float = 1e-10, max_iter: int = 100_000,
) -> tuple[float, int, bool, int]:
    """max over irreducible diagonal blocks of rho(block^power).

    Returns (radius, iterations, converged, number of blocks attaining it).
    """
    pos = {sid: i for i, sid in enumerate(tm.ids)}
    radii = []
    its_total, ok_all = 0, True
    for comp in components:
        idx = [pos[v] for v in comp if v in pos]
        if not idx:
            continue
        sub = tm.matrix[idx][:, idx]
        if sub.nnz == 0:
            continue
        lam, _, its, ok = perron(sub, tol, max_iter, power)
        radii.append(lam)
        its_total += its
        ok_all &= ok
    if not radii:
        return 0.0, its_total, ok_all, 0
    top = max(radii)
    ties = sum(1 for r in radii if abs(r - top) <= 1e-8 * max(1.0, top))
    return top, its_total, ok_all, ties


def fractal_dimension(sys_: SubstSystem, tol: float = 1e-10, max_iter: int = 100_000) -> DimensionResult:
    """log_k of the spectral radius of the non-blank transition block.

    The radius is the largest Perron root among strongly connected components,
    each found by power iteration on M^kappa.
    """
    tm = transition_matrix(sys_).nonblank()
    graph = graph_analysis(sys_)
    kappa = graph.kappa
    cyclic = [c for c, per in zip(graph.components, graph.periods) if per is not None]
    lam_k, its, ok, _ = scc_spectral_radius(tm, cyclic, kappa, tol, max_iter)
    growth = growth_dimension(sys_, kappa=kappa)
    if lam_k <= 0:
        dim = 0.0
    else:
        dim = math.log(lam_k, sys_.k) / kappa
    if not ok and growth is not None:
        dim = growth
    return DimensionResult(dim, lam_k ** (1 / kappa) if lam_k > 0 else 0.0, its, ok, kappa, growth)


# -- average hue ---------------------------------------------------------------

@dataclass(frozen=True)
class HueResult:
    raw: dict[int, float]
    normalized: dict[int, float]
    spectral_radius: float
    reliable: bool


def average_hue(
    sys_: SubstSystem, T: PolyMatrix, xi: Sequence[int], tol: float = 1e-10
) -> HueResult:
    """Perron-vector weight summed per color of the states' own cell values.

    Flagged unreliable when the dominant root is shared by several components
    or the eigen-residual is not small.
    """
    tm = transition_matrix(sys_).nonblank()
    lam, vec, _, ok = perron(tm.matrix, tol)
    graph = graph_analysis(sys_)
    cyclic = [c for c, per in zip(graph.components, graph.periods) if per is not None]
    _, _, _, ties = scc_spectral_radius(tm, cyclic, 1, tol)
    vals = state_values(sys_, cell_value_matrix(sys_, T, xi))[list(tm.ids)]
    cids = Coloring(T.q, T.d).colors_of(vals)
    raw: dict[int, float] = {}
    for cid, weight in zip(cids.tolist(), vec.tolist()):
        if cid:
            raw[cid] = raw.get(cid, 0.0) + weight
    total = sum(raw.values())
    norm = {c: w / total for c, w in sorted(raw.items())} if total else {}
    resid = float(np.abs(tm.matrix @ vec - lam * vec).max()) if len(vec) else 0.0
    return HueResult(dict(sorted(raw.items())), norm, lam, ok and resid < 1e-6 and ties == 1)


# -- patterns and Hausdorff distance -------------------------------------------

@dataclass(frozen=True)
class Pattern:
    """Filled unit squares of order n; ``bitmaps[c][y, x - x0]``."""

    n: int
    x0: int
    bitmaps: dict[int, np.ndarray] = field(repr=False)

    def points(self, color: int) -> np.ndarray:
        bm = self.bitmaps.get(color)
        if bm is None or not bm.any():
            return np.zeros((0, 2))
        ys, xs = np.nonzero(bm)
        return np.column_stack([(xs + self.x0) / self.n, ys / self.n])


def pattern_from_values(values: np.ndarray, x0: int, q: int, n: int | None = None) -> Pattern:
    """Pattern of a (rows, width, d) value array; order defaults to the row count."""
    coloring = Coloring(q, values.shape[2])
    cids = coloring.colors_of(values)
    bitmaps = {int(c): cids == c for c in np.unique(cids) if c != 0}
    return Pattern(n if n is not None else values.shape[0], x0, bitmaps)


@dataclass(frozen=True)
class HausdorffResult:
    distance: float
    one_sided_empty: bool = False


def hausdorff(P1: Pattern, P2: Pattern, color: int) -> HausdorffResult:
    """Hausdorff distance between the unions of closed squares S_{n,i,j}.

    Computed on centers, corrected by the difference of half-diagonals.
    """
    A, B = P1.points(color), P2.points(color)
    if len(A) == 0 and len(B) == 0:
        return HausdorffResult(0.0)
    if len(A) == 0 or len(B) == 0:
        return HausdorffResult(1.0, True)
    dab = cKDTree(B).query(A)[0].max()
    dba = cKDTree(A).query(B)[0].max()
    corr = abs(1 / P1.n - 1 / P2.n) * math.sqrt(2) / 2
    return HausdorffResult(float(max(dab, dba) + corr))


def substitution_pattern(sys_: SubstSystem, T: PolyMatrix, xi: Sequence[int], n: int) -> Pattern:
    g = expand(sys_, n)
    V = cell_value_matrix(sys_, T, xi)
    return pattern_from_values(grid_values(sys_, g, V), g.x0, sys_.q)


def simulation_pattern(T: PolyMatrix, xi: Sequence[int], rows: int) -> Pattern:
    d = spacetime(T, xi, rows - 1)
    return pattern_from_values(d.cells, d.x0, T.q)


# -- verification --------------------------------------------------------------

@dataclass(frozen=True)
class VerifyReport:
    ok: bool
    rows: int
    cells: int
    nonzero: int
    mismatch: tuple[int, int, tuple[int, ...], tuple[int, ...]] | None = None

    def lines(self) -> list[str]:
        out = [f"status={'ok' if self.ok else 'mismatch'}", f"rows={self.rows}",
               f"cells={self.cells}", f"nonzero={self.nonzero}"]
        if self.mismatch:
            x, y, got, want = self.mismatch
            out.append(f"first_mismatch=x:{x},y:{y},substitution:{list(got)},simulation:{list(want)}")
        return out


def verify(T: PolyMatrix, xi: Sequence[int], sys_: SubstSystem, n: int) -> VerifyReport:
    """Compare the level-n expansion with rows 0..k^n - 1 of the direct simulation."""
    rows = sys_.k**n
    V = cell_value_matrix(sys_, T, xi)
    g = expand(sys_, n)
    sub = grid_values(sys_, g, V)  # (rows, width, d)
    sim = spacetime(T, xi, rows - 1)
    x_lo = min(g.x0, sim.x0)
    x_hi = max(g.x0 + g.width, sim.x0 + sim.width)
    width = x_hi - x_lo
    A = np.zeros((rows, width, T.d), dtype=np.int64)
    B = np.zeros_like(A)
    A[:, g.x0 - x_lo : g.x0 - x_lo + g.width] = sub
    B[:, sim.x0 - x_lo : sim.x0 - x_lo + sim.width] = sim.cells
    diff = np.nonzero((A != B).any(axis=2))
    nonzero = int(B.any(axis=2).sum())
    if len(diff[0]):
        y, i = int(diff[0][0]), int(diff[1][0])
        return VerifyReport(
            False, rows, rows * width, nonzero,
            (i + x_lo, y, tuple(int(v) for v in A[y, i]), tuple(int(v) for v in B[y, i])),
        )
    return VerifyReport(True, rows, rows * width, nonzero)


def cell_count_growth(sys_: SubstSystem, depths: Sequence[int]) -> dict[int, int]:
    """Non-blank state counts of the expansion at each depth."""
    out = {}
    g = seed_grid(sys_)
    for n in range(max(depths) + 1):
        if n in depths:
            out[n] = int((g.ids != g.blank).sum())
        if n < max(depths):
            g = expand(sys_, 1, g)
    return out

