"""Colored matrix substitution systems built from leaf tables.

A state is the block ``block[j, o] = alpha_j(x + o, y)`` for j < m' and o in
the window; it is stored as a flat digit vector (j-major, o ascending).
Child (s, t) of the state at (x, y) is the state at (k x + s, k y + t).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .recursion import LeafTables, Window, closes
from .ring import ResidueRing


class WindowTooSmall(ValueError):
    pass


class AlphabetTooLarge(RuntimeError):
    pass


def _digit_dtype(q: int):
    return np.uint8 if q <= 256 else np.uint32


class SubstitutionRule:
    """The k^2 linear maps block(x, y) -> block(k x + s, k y + t).

    Maps are compiled to sparse integer matrices when the block has at most
    ``compile_limit`` digits; larger blocks are rewritten term by term.
    """

    def __init__(self, tables: LeafTables, window: Window, compile_limit: int = 4096):
        self.tables = tables
        self.window = window
        self.k = tables.k
        self.m_prime = tables.m_prime
        self.q = tables.rel.q
        self.W = window.size
        self.N = self.m_prime * self.W
        d_min, d_max = tables.offset_bounds()
        if not closes(window.lo, window.hi, d_min, d_max, self.k):
            raise WindowTooSmall(
                f"window [{window.lo},{window.hi}] does not close under offsets [{d_min},{d_max}]"
            )
        self.mats: list[sp.csr_matrix] | None = None
        if self.N <= compile_limit:
            self.mats = [self._compile(s, t) for t in range(self.k) for s in range(self.k)]

    def index(self, j: int, o: int) -> int:
        return j * self.W + (o - self.window.lo)

    def _compile(self, s: int, t: int) -> sp.csr_matrix:
        k, lo, hi = self.k, self.window.lo, self.window.hi
        rows, cols, vals = [], [], []
        for j in range(self.m_prime):
            for delta, j2, c in self.tables.entries(j, t):
                for o in range(lo, hi + 1):
                    a = o + s + delta
                    if a % k:
                        continue
                    src = a // k
                    if not lo <= src <= hi:
                        raise WindowTooSmall(
                            f"child offset {o} at (s,t)=({s},{t}) needs parent offset {src} "
                            f"outside [{lo},{hi}]"
                        )
                    rows.append(self.index(j2, o))
                    cols.append(self.index(j, src))
                    vals.append(c)
        M = sp.csr_matrix(
            (np.array(vals, dtype=np.int64), (rows, cols)), shape=(self.N, self.N), dtype=np.int64
        )
        M.sum_duplicates()
        M.data %= self.q
        M.eliminate_zeros()
        return M

    def children(self, V: np.ndarray) -> np.ndarray:
        """(B, N) digit rows -> (B, k*k, N) children, (s, t) in t-major order."""
        V = np.asarray(V)
        B = V.shape[0]
        out = np.zeros((B, self.k * self.k, self.N), dtype=_digit_dtype(self.q))
        if B == 0:
            return out
        if self.mats is not None:
            X = V.astype(np.int64).T
            for idx, M in enumerate(self.mats):
                out[:, idx, :] = ((M @ X) % self.q).T
            return out
        for b in range(B):
            out[b] = self._push(V[b])
        return out

    def _push(self, v: np.ndarray) -> np.ndarray:
        k, lo, hi, W = self.k, self.window.lo, self.window.hi, self.W
        acc = np.zeros((self.k * self.k, self.N), dtype=np.int64)
        for flat in np.nonzero(v)[0]:
            j, p = divmod(int(flat), W)
            p += lo
            val = int(v[flat])
            for t in range(k):
                for delta, j2, c in self.tables.entries(j, t):
                    for s in range(k):
                        o = k * p - s - delta
                        if lo <= o <= hi:
                            acc[t * k + s, j2 * W + o - lo] += c * val
        return acc % self.q


def seed_word(tables: LeafTables, window: Window) -> list[tuple[int, np.ndarray]]:
    """Row 0: alpha_j(z, 0) = [j == 0 and z == 0], grouped over the window."""
    W = window.size
    N = tables.m_prime * W
    out = []
    for x in range(-window.hi, -window.lo + 1):
        v = np.zeros(N, dtype=_digit_dtype(tables.rel.q))
        v[-x - window.lo] = 1
        out.append((x, v))
    return out


class SubstSystem:
    """Interned alphabet, transitions and seed; state 0 is always blank."""

    def __init__(
        self,
        k: int,
        ring: ResidueRing,
        m_prime: int,
        window: tuple[int, int],
        rule: SubstitutionRule | None = None,
    ):
        self.k = k
        self.ring = ring
        self.q = ring.modulus
        self.m_prime = m_prime
        self.lo, self.hi = window
        self.W = self.hi - self.lo + 1
        self.N = m_prime * self.W
        self.rule = rule
        self.states: list[np.ndarray] = []
        self._index: dict[bytes, int] = {}
        self.trans: dict[int, tuple[int, ...]] = {}
        self.seed: list[tuple[int, int]] = []
        self.blank = self.intern(np.zeros(self.N, dtype=_digit_dtype(self.q)))

    def __len__(self) -> int:
        return len(self.states)

    def intern(self, v: np.ndarray) -> int:
        v = np.ascontiguousarray(v, dtype=_digit_dtype(self.q))
        key = v.tobytes()
        sid = self._index.get(key)
        if sid is None:
            sid = len(self.states)
            self._index[key] = sid
            self.states.append(v)
        return sid

    def lookup(self, v: np.ndarray) -> int | None:
        return self._index.get(np.ascontiguousarray(v, dtype=_digit_dtype(self.q)).tobytes())

    def block(self, sid: int) -> np.ndarray:
        """State as an (m', W) array indexed [j, o - lo]."""
        return self.states[sid].reshape(self.m_prime, self.W)

    def ensure_children(self, ids: Iterable[int]) -> list[int]:
        """Compute missing transitions; returns ids of newly interned states."""
        todo = sorted({i for i in ids if i not in self.trans})
        if not todo:
            return []
        if self.rule is None:
            raise KeyError(f"no transition for state(s) {todo[:5]} and no rule to derive them")
        before = len(self.states)
        for start in range(0, len(todo), 1024):
            chunk = todo[start : start + 1024]
            kids = self.rule.children(np.stack([self.states[i] for i in chunk]))
            for sid, row in zip(chunk, kids):
                self.trans[sid] = tuple(self.intern(c) for c in row)
        return list(range(before, len(self.states)))

    def child(self, sid: int, s: int, t: int) -> int:
        self.ensure_children([sid])
        return self.trans[sid][t * self.k + s]

    def close(self, max_states: int | None = None) -> None:
        """Breadth-first closure of the alphabet from the seed."""
        frontier = sorted({sid for _, sid in self.seed} | {self.blank})
        while frontier:
            frontier = self.ensure_children(frontier)
            if max_states is not None and len(self.states) > max_states:
                raise AlphabetTooLarge(
                    f"alphabet exceeds {max_states} states (m'={self.m_prime}, window "
                    f"[{self.lo},{self.hi}]); raise the budget or shrink the system"
                )

    @property
    def is_closed(self) -> bool:
        return len(self.trans) == len(self.states)

    def child_table(self) -> np.ndarray:
        """(n_states, k, k) array indexed [state, t, s]; requires closure."""
        n = len(self.states)
        tab = np.zeros((n, self.k, self.k), dtype=np.int64)
        for sid in range(n):
            tab[sid] = np.array(self.trans[sid]).reshape(self.k, self.k)
        return tab

    def sorted_ids(self) -> list[int]:
        return sorted(range(len(self.states)), key=lambda i: self.states[i].tobytes())

    # -- encoding ------------------------------------------------------------
    @property
    def hex_width(self) -> int:
        return max(1, len(format(self.q**self.N - 1, "x")))

    def encode(self, sid: int) -> str:
        return digits_to_hex(self.states[sid], self.q, self.hex_width)

    def decode(self, text: str) -> np.ndarray:
        return hex_to_digits(text, self.q, self.N)


def digits_to_hex(v: Sequence[int], q: int, width: int) -> str:
    if q <= 36:
        s = "".join(np.base_repr(int(d), q) for d in v) or "0"
        n = int(s, q)
    else:
        n = 0
        for d in v:
            n = n * q + int(d)
    return format(n, "x").rjust(width, "0")


def hex_to_digits(text: str, q: int, N: int) -> np.ndarray:
    n = int(text, 16)
    if n >= q**N:
        raise ValueError(f"state {text} exceeds {N} digits base {q}")
    out = np.zeros(N, dtype=_digit_dtype(q))
    for i in range(N - 1, -1, -1):
        n, out[i] = divmod(n, q)
    return out


def build_substitution(
    tables: LeafTables,
    window: Window,
    *,
    full_space: bool = False,
    max_states: int | None = 500_000,
    compile_limit: int = 4096,
) -> SubstSystem:
    """Rule, seed and alphabet closure (or every q^N block with ``full_space``)."""
    rel = tables.rel
    rule = SubstitutionRule(tables, window, compile_limit=compile_limit)
    sys_ = SubstSystem(rel.k, rel.ring, rel.m_prime, (window.lo, window.hi), rule)
    sys_.seed = [(x, sys_.intern(v)) for x, v in seed_word(tables, window)]
    if full_space:
        total = rel.q**rule.N
        if max_states is not None and total > max_states:
            raise AlphabetTooLarge(f"full space has {total} states, budget {max_states}")
        for n in range(total):
            sys_.intern(hex_to_digits(format(n, "x"), rel.q, rule.N))
        sys_.ensure_children(range(len(sys_.states)))
    else:
        sys_.close(max_states)
    return sys_


def lazy_system(tables: LeafTables, window: Window, compile_limit: int = 4096) -> SubstSystem:
    """Seeded system whose transitions are computed on demand."""
    rel = tables.rel
    rule = SubstitutionRule(tables, window, compile_limit=compile_limit)
    sys_ = SubstSystem(rel.k, rel.ring, rel.m_prime, (window.lo, window.hi), rule)
    sys_.seed = [(x, sys_.intern(v)) for x, v in seed_word(tables, window)]
    return sys_


# -- expansion -----------------------------------------------------------------

@dataclass(frozen=True)
class Grid:
    """State ids, ``ids[y, x - x0]``; everything outside is blank."""

    ids: np.ndarray
    x0: int
    blank: int

    @property
    def rows(self) -> int:
        return self.ids.shape[0]

    @property
    def width(self) -> int:
        return self.ids.shape[1]


def seed_grid(sys_: SubstSystem) -> Grid:
    xs = [x for x, _ in sys_.seed]
    x0, x1 = min(xs), max(xs)
    ids = np.full((1, x1 - x0 + 1), sys_.blank, dtype=np.int64)
    for x, sid in sys_.seed:
        ids[0, x - x0] = sid
    return Grid(ids, x0, sys_.blank)


def expand_once(sys_: SubstSystem, g: Grid) -> Grid:
    k = sys_.k
    uniq = np.unique(g.ids)
    sys_.ensure_children(uniq.tolist())
    lut = np.zeros((int(uniq.max()) + 1, k, k), dtype=np.int64)
    for sid in uniq:
        lut[sid] = np.array(sys_.trans[int(sid)]).reshape(k, k)
    kids = lut[g.ids]  # (R, C, t, s)
    R, C = g.ids.shape
    out = kids.transpose(0, 2, 1, 3).reshape(R * k, C * k)
    return Grid(out, g.x0 * k, g.blank)


def expand(sys_: SubstSystem, n: int, start: Grid | None = None) -> Grid:
    if n < 0:
        raise ValueError("n must be >= 0")
    g = start if start is not None else seed_grid(sys_)
    for _ in range(n):
        g = expand_once(sys_, g)
    return g


# -- graph analysis ------------------------------------------------------------

def tarjan_scc(n: int, adj: Sequence[Sequence[int]]) -> list[list[int]]:
    """Iterative Tarjan; components in reverse topological order."""
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, i = work[-1]
            if i < len(adj[v]):
                work[-1] = (v, i + 1)
                w = adj[v][i]
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, 0))
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
            else:
                work.pop()
                if work:
                    u = work[-1][0]
                    low[u] = min(low[u], low[v])
                if low[v] == index[v]:
                    comp = []
                    while True:
                        w = stack.pop()
                        on_stack[w] = False
                        comp.append(w)
                        if w == v:
                            break
                    comps.append(sorted(comp))
    return comps


def scc_period(comp: Sequence[int], adj: Sequence[Sequence[int]]) -> int | None:
    """gcd of cycle lengths inside ``comp``; None for a single node without loop."""
    members = set(comp)
    root = comp[0]
    level = {root: 0}
    queue = deque([root])
    g = 0
    while queue:
        v = queue.popleft()
        for w in adj[v]:
            if w not in members:
                continue
            if w not in level:
                level[w] = level[v] + 1
                queue.append(w)
            else:
                g = math.gcd(g, level[v] + 1 - level[w])
    return g or None


@dataclass(frozen=True)
class SubstGraph:
    nodes: tuple[int, ...]
    components: tuple[tuple[int, ...], ...]
    periods: tuple[int | None, ...]
    kappa: int

    @property
    def aperiodic(self) -> bool:
        return all(p in (None, 1) for p in self.periods)


def _adjacency(n: int, edges: dict[int, list[int]]) -> list[list[int]]:
    return [sorted(set(edges.get(v, ()))) for v in range(n)]


def _analyze(n: int, adj: list[list[int]]):
    comps = tarjan_scc(n, adj)
    comps.sort(key=lambda c: c[0])
    return comps, [scc_period(c, adj) for c in comps]


def graph_analysis(sys_: SubstSystem, nodes: Sequence[int] | None = None) -> SubstGraph:
    """SCCs, periods and aperiodic power of the graph on non-blank states."""
    if nodes is None:
        nodes = [i for i in range(len(sys_.states)) if i != sys_.blank]
    nodes = sorted(nodes)
    pos = {v: i for i, v in enumerate(nodes)}
    edges: dict[int, list[int]] = {}
    for v in nodes:
        sys_.ensure_children([v])
        edges[pos[v]] = [pos[w] for w in sys_.trans[v] if w in pos]
    n = len(nodes)
    adj = _adjacency(n, edges)
    comps, periods = _analyze(n, adj)
    return SubstGraph(
        tuple(nodes),
        tuple(tuple(nodes[i] for i in c) for c in comps),
        tuple(periods),
        aperiodic_power(periods),
    )


def aperiodic_power(periods: Sequence[int | None]) -> int:
    """Smallest kappa whose power graph has only aperiodic components."""
    # an SCC of period p splits in the k0-th power graph into gcd(p, k0)
    # classes of period p / gcd(p, k0)
    kappa = 1
    cur = [p for p in periods if p is not None]
    for _ in range(64):
        k0 = reduce(math.lcm, cur, 1)
        if k0 == 1:
            return kappa
        kappa *= k0
        cur = [p // math.gcd(p, k0) for p in cur]
    raise AssertionError("aperiodic power iteration did not reach a fixed point")


def blank_filter(sys_: SubstSystem) -> SubstSystem:
    """Replace by blank every state from which blank cannot be reached."""
    n = len(sys_.states)
    sys_.ensure_children(range(n))
    rev: list[list[int]] = [[] for _ in range(n)]
    for v in range(n):
        for w in sys_.trans[v]:
            rev[w].append(v)
    reach = {sys_.blank}
    queue = deque([sys_.blank])
    while queue:
        w = queue.popleft()
        for v in rev[w]:
            if v not in reach:
                reach.add(v)
                queue.append(v)
    out = SubstSystem(sys_.k, sys_.ring, sys_.m_prime, (sys_.lo, sys_.hi))
    remap = {}
    for v in sorted(reach, key=lambda i: sys_.states[i].tobytes()):
        remap[v] = out.intern(sys_.states[v])
    for v in range(n):
        if v not in reach:
            remap[v] = out.blank
    for v in reach:
        out.trans[remap[v]] = tuple(remap[w] for w in sys_.trans[v])
    out.seed = [(x, remap[sid]) for x, sid in sys_.seed]
    return out


# -- serialization -------------------------------------------------------------

_HEX = np.frombuffer(b"0123456789abcdef", dtype=np.uint8)


def encode_all(sys_: SubstSystem) -> list[str]:
    """Hex encoding of every state; vectorized when q is a power of two."""
    n = len(sys_.states)
    width = sys_.hex_width
    b = sys_.q.bit_length() - 1
    if sys_.q != 1 << b:
        return [sys_.encode(i) for i in range(n)]
    D = np.stack(sys_.states).astype(np.uint32)
    shifts = np.arange(b - 1, -1, -1, dtype=np.uint32)
    bits = ((D[:, :, None] >> shifts) & 1).reshape(n, -1).astype(np.uint8)
    pad = width * 4 - bits.shape[1]
    if pad:
        bits = np.concatenate([np.zeros((n, pad), dtype=np.uint8), bits], axis=1)
    nibbles = bits.reshape(n, width, 4) @ np.array([8, 4, 2, 1], dtype=np.uint8)
    chars = _HEX[nibbles]
    return [row.tobytes().decode("ascii") for row in chars]


def iter_lines(sys_: SubstSystem):
    if not sys_.is_closed:
        raise ValueError("only closed systems can be serialized")
    r = sys_.ring
    yield f"SUBST k={sys_.k} m'={sys_.m_prime} window=[{sys_.lo},{sys_.hi}] ring=Z{r.p}^{r.l}\n"
    enc = encode_all(sys_)
    for x, sid in sorted(sys_.seed):
        yield f"SEED {x} {enc[sid]}\n"
    for sid in sorted(range(len(enc)), key=enc.__getitem__):
        yield f"S {enc[sid]} -> " + " ".join(enc[c] for c in sys_.trans[sid]) + "\n"


def dump(sys_: SubstSystem, fh) -> None:
    for line in iter_lines(sys_):
        fh.write(line)


def dumps(sys_: SubstSystem) -> str:
    return "".join(iter_lines(sys_))


def loads(text: str) -> SubstSystem:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("SUBST "):
        raise ValueError("missing SUBST header")
    fields = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    try:
        k = int(fields["k"])
        m_prime = int(fields["m'"])
        lo, hi = (int(v) for v in fields["window"].strip("[]").split(","))
        p, l = (int(v) for v in fields["ring"].lstrip("Z").split("^"))
    except (KeyError, ValueError) as exc:
        raise ValueError(f"malformed SUBST header: {lines[0]!r}") from exc
    sys_ = SubstSystem(k, ResidueRing(p, l), m_prime, (lo, hi))
    pending = []
    for lineno, ln in enumerate(lines[1:], start=2):
        parts = ln.split()
        if parts[0] == "SEED" and len(parts) == 3:
            sys_.seed.append((int(parts[1]), sys_.intern(sys_.decode(parts[2]))))
        elif parts[0] == "S" and len(parts) == 3 + k * k and parts[2] == "->":
            pending.append((parts[1], parts[3:]))
        else:
            raise ValueError(f"line {lineno}: cannot parse {ln!r}")
    for src, kids in pending:
        sid = sys_.intern(sys_.decode(src))
        sys_.trans[sid] = tuple(sys_.intern(sys_.decode(c)) for c in kids)
    if not sys_.is_closed:
        raise ValueError("transition table is not closed")
    return sys_
