"""Command line interface; reports are ``key=value`` lines on stdout.

Exit codes: 0 success, 1 usage, 2 unreadable or malformed input, 3 verification mismatch.
"""

from __future__ import annotations

import argparse
import math
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from . import analysis, engine, substitution
from .pipeline import derive
from .ppm import Palette, atomic_write, write_ppm
from .specfile import CaSpecFile, SpecError, load_spec
from .substitution import AlphabetTooLarge, WindowTooSmall

EXIT_USAGE, EXIT_PARSE, EXIT_MISMATCH = 1, 2, 3


class CliError(Exception):
    def __init__(self, msg: str, code: int):
        super().__init__(msg)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _report(**kv) -> None:
    for k, v in kv.items():
        if isinstance(v, float):
            v = repr(v)
        print(f"{k}={v}")


def _load_spec(path: str, prime: int | None = None) -> CaSpecFile:
    try:
        return load_spec(path, prime=prime)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_PARSE) from exc
    except SpecError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc


def _load_system(path: str) -> substitution.SubstSystem:
    try:
        text = Path(path).read_text(encoding="ascii")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}", EXIT_PARSE) from exc
    except UnicodeDecodeError as exc:
        raise CliError(f"{path}: not a text file", EXIT_PARSE) from exc
    try:
        return substitution.loads(text)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc


def _palette(spec: CaSpecFile | None, q: int, palette_path: str | None) -> Palette:
    colors = dict(spec.colors) if spec is not None else {}
    if palette_path:
        try:
            text = Path(palette_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read {palette_path}: {exc.strerror}", EXIT_PARSE) from exc
        colors.update(_parse_palette(text, palette_path))
    return Palette.from_vectors(colors, q)


def _parse_palette(text: str, name: str) -> dict[tuple[int, ...], tuple[int, int, int]]:
    """Palette files hold ``color v... = r g b`` lines."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            kw, rest = line.split(None, 1)
            lhs, rhs = rest.split("=", 1)
            if kw != "color":
                raise ValueError
            vec = tuple(int(v) for v in lhs.split())
            rgb = tuple(int(v) for v in rhs.split())
            if len(rgb) != 3 or not all(0 <= c <= 255 for c in rgb):
                raise ValueError
        except ValueError as exc:
            raise CliError(f"{name}, line {lineno}: expected 'color v... = r g b'", EXIT_PARSE) from exc
        out[vec] = rgb
    return out


def _window_arg(text: str | None) -> tuple[int, int] | None:
    if text is None:
        return None
    try:
        a, b = (int(v) for v in text.split(","))
    except ValueError as exc:
        raise CliError(f"--window expects a,b, got {text!r}", EXIT_USAGE) from exc
    if a > b:
        raise CliError(f"--window lower bound {a} exceeds upper bound {b}", EXIT_USAGE)
    return a, b


def _derive(spec: CaSpecFile, args, closed: bool):
    try:
        return derive(
            spec.automaton(),
            window=_window_arg(getattr(args, "window", None)),
            rule=getattr(args, "window_rule", "exact"),
            closed=closed,
            full_space=getattr(args, "full_space", False),
            max_states=getattr(args, "max_states", 500_000),
        )
    except (ValueError, WindowTooSmall) as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    except AlphabetTooLarge as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc


# -- commands ------------------------------------------------------------------

def cmd_simulate(args) -> int:
    if args.steps < 0:
        raise CliError("--steps must be >= 0", EXIT_USAGE)
    spec = _load_spec(args.spec, args.prime)
    T = spec.automaton()
    diag = engine.spacetime(T, spec.initial(), args.steps)
    cids = analysis.Coloring(T.q, T.d).colors_of(diag.cells)
    pal = _palette(spec, T.q, args.palette)
    write_ppm(args.out, cids, pal)
    if args.figure:
        from .plotting import diagram_figure

        diagram_figure(cids, diag.x0, pal, args.figure, f"{args.steps} steps")
    _report(steps=args.steps, width=diag.width, x0=diag.x0,
            nonzero=int(diag.nonzero().sum()), out=args.out)
    return 0


def cmd_derive(args) -> int:
    spec = _load_spec(args.spec, args.prime)
    d = _derive(spec, args, closed=True)
    graph = substitution.graph_analysis(d.system)
    atomic_write(args.out, substitution.dumps(d.system))
    rel = d.relation
    _report(
        k=rel.k, m=rel.m, m_prime=rel.m_prime, frobenius=f"{rel.period.M},{rel.period.N}",
        relation_terms=len(rel.mu), offsets=f"{d.window.d_min},{d.window.d_max}",
        window=f"[{d.window.lo},{d.window.hi}]", window_rule=d.window.rule,
        alphabet=len(d.system), kappa=graph.kappa, out=args.out,
    )
    return 0


def cmd_render(args) -> int:
    if args.depth < 0:
        raise CliError("--depth must be >= 0", EXIT_USAGE)
    sys_ = _load_system(args.system)
    g = substitution.expand(sys_, args.depth)
    if args.spec:
        spec = _load_spec(args.spec, args.prime)
        T = spec.automaton()
        try:
            V = analysis.cell_value_matrix(sys_, T, spec.initial())
        except analysis.RenderingError as exc:
            raise CliError(str(exc), EXIT_USAGE) from exc
        cids = analysis.Coloring(T.q, T.d).colors_of(analysis.grid_values(sys_, g, V))
        pal = _palette(spec, T.q, args.palette)
    else:
        cids = (g.ids != g.blank).astype(np.int64)
        pal = _palette(None, sys_.q, args.palette)
    write_ppm(args.out, cids, pal)
    if args.figure:
        from .plotting import diagram_figure

        diagram_figure(cids, g.x0, pal, args.figure, f"level {args.depth}")
    _report(depth=args.depth, rows=g.rows, width=g.width, x0=g.x0,
            nonblank=int((g.ids != g.blank).sum()), out=args.out)
    return 0


def cmd_dimension(args) -> int:
    sys_ = _load_system(args.system)
    res = analysis.fractal_dimension(sys_)
    _report(
        dimension=res.dimension, spectral_radius=float(res.spectral_radius), kappa=res.kappa,
        iterations=res.iterations, converged=str(res.converged).lower(),
        growth_estimate=res.growth_estimate if res.growth_estimate is not None else "none",
        growth_agrees=str(res.growth_agrees).lower(),
    )
    if args.figure:
        from .plotting import growth_figure

        depths = list(range(0, 13))
        logs = analysis.count_logs(sys_, depths)
        ds = [n for n in depths if n in logs]
        growth_figure(ds, [logs[n] for n in ds], res.dimension, sys_.k, args.figure)
    return 0


def cmd_hue(args) -> int:
    sys_ = _load_system(args.system)
    spec = _load_spec(args.spec, args.prime)
    T = spec.automaton()
    try:
        res = analysis.average_hue(sys_, T, spec.initial())
    except analysis.RenderingError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    coloring = analysis.Coloring(T.q, T.d)
    labels = {c: "".join(map(str, coloring.vector(c))) for c in res.normalized}
    for c, w in res.normalized.items():
        print(f"weight_{labels[c]}={w!r}")
    for c, w in res.raw.items():
        print(f"raw_{labels[c]}={w!r}")
    _report(spectral_radius=float(res.spectral_radius), reliable=str(res.reliable).lower())
    if args.figure:
        from .plotting import hue_figure

        hue_figure(res.normalized, _palette(spec, T.q, None), labels, args.figure)
    return 0


def cmd_verify(args) -> int:
    spec = _load_spec(args.spec, args.prime)
    d = _derive(spec, args, closed=False)
    bits = args.depth * math.log2(d.relation.k)
    if args.depth < 0 or bits > 12 + 1e-9:
        raise CliError(f"depth {args.depth} gives k^n = 2^{bits:g} rows; at most 2^12 allowed", EXIT_USAGE)
    rep = analysis.verify(d.T, spec.initial(), d.system, args.depth)
    for line in rep.lines():
        print(line)
    _report(k=d.relation.k, m_prime=d.relation.m_prime, window=f"[{d.window.lo},{d.window.hi}]",
            states_touched=len(d.system))
    return 0 if rep.ok else EXIT_MISMATCH


def cmd_graph(args) -> int:
    sys_ = _load_system(args.system)
    g = substitution.graph_analysis(sys_)
    cyclic = [(c, p) for c, p in zip(g.components, g.periods) if p is not None]
    if args.dot:
        atomic_write(args.dot, _dot(sys_, g))
    hist = Counter(p for _, p in cyclic)
    _report(
        states=len(sys_), nonblank=len(g.nodes), components=len(g.components),
        cyclic_components=len(cyclic),
        periods=",".join(f"{p}:{n}" for p, n in sorted(hist.items())) or "none",
        kappa=g.kappa, aperiodic=str(g.aperiodic).lower(),
    )
    return 0


def _dot(sys_: substitution.SubstSystem, g: substitution.SubstGraph) -> str:
    enc = substitution.encode_all(sys_)
    lines = ["digraph substitution {"]
    for n, (comp, per) in enumerate(zip(g.components, g.periods)):
        lines.append(f'  subgraph cluster_{n} {{ label="scc {n} period {per if per else "-"}";')
        for v in comp:
            lines.append(f'    "{enc[v]}";')
        lines.append("  }")
    nodes = set(g.nodes)
    for v in g.nodes:
        for w, mult in sorted(Counter(sys_.trans[v]).items()):
            if w in nodes:
                lab = f' [label="{mult}"]' if mult > 1 else ""
                lines.append(f'  "{enc[v]}" -> "{enc[w]}"{lab};')
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_fermat(args) -> int:
    spec = _load_spec(args.spec, args.prime)
    T = spec.automaton()
    p = args.p
    if p is None:
        from .ring import ResidueRing

        p = ResidueRing.from_modulus(T.q).p
    if args.horizon < p:
        raise CliError("--horizon must be at least p", EXIT_USAGE)
    v = engine.is_weakly_p_fermat(T, spec.initial(), p, args.horizon)
    if v.violation is None:
        _report(fermat="no_violation", p=p, horizon=args.horizon)
    else:
        _, n, x = v.violation
        _report(fermat="violation", p=p, horizon=args.horizon, n=n, x=x)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="abelca", description="Linear cellular automata and their substitution systems.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def spec_opts(p, required=True):
        p.add_argument("--spec", required=required, help="automaton description (.ca)")
        p.add_argument("--prime", type=int, help="prime component for groups of mixed order")

    p = sub.add_parser("simulate", help="direct spacetime diagram")
    spec_opts(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--palette")
    p.add_argument("--figure", help="also save a matplotlib figure")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("derive", help="build and save the substitution system")
    spec_opts(p)
    p.add_argument("--out", required=True)
    p.add_argument("--window", help="override grouping window as lo,hi (write --window=-2,3)")
    p.add_argument("--window-rule", choices=("exact", "inequality"), default="exact")
    p.add_argument("--max-states", type=int, default=500_000)
    p.add_argument("--full-space", action="store_true", help="use every block, not only reachable ones")
    p.set_defaults(func=cmd_derive)

    p = sub.add_parser("render", help="image of a substitution expansion")
    p.add_argument("--system", required=True)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--out", required=True)
    spec_opts(p, required=False)
    p.add_argument("--palette")
    p.add_argument("--figure")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("dimension", help="fractal dimension of a system")
    p.add_argument("--system", required=True)
    p.add_argument("--figure")
    p.set_defaults(func=cmd_dimension)

    p = sub.add_parser("hue", help="average hue of a system")
    p.add_argument("--system", required=True)
    spec_opts(p)
    p.add_argument("--figure")
    p.set_defaults(func=cmd_hue)

    p = sub.add_parser("verify", help="compare substitution expansion with simulation")
    spec_opts(p)
    p.add_argument("--depth", type=int, required=True)
    p.add_argument("--window")
    p.add_argument("--window-rule", choices=("exact", "inequality"), default="exact")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("graph", help="SCCs and periods; optional GraphViz export")
    p.add_argument("--system", required=True)
    p.add_argument("--dot")
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser("fermat", help="search for a weak p-Fermat violation")
    spec_opts(p)
    p.add_argument("--p", type=int)
    p.add_argument("--horizon", type=int, required=True)
    p.set_defaults(func=cmd_fermat)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"abelca {args.command}: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    raise SystemExit(main())
