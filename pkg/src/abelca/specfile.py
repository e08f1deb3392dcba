"""Parser and printer for ``.ca`` automaton descriptions.

Three ways to give the automaton:

    ring P L / dim D / entry I J : poly          matrix over Z/p^l[u, u^-1]
    group N1 N2 ... / image J [@ OFF] : v1 v2 ...  endomorphisms of a finite abelian group
    field P E : wpoly / fentry I J : fpoly        matrix over F_{p^e}[u, u^-1]

plus optional ``init v...`` and ``color v... = r g b`` lines.  Indices are 1-based.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .groups import EndoSpec, FiniteField, GroupSpec, crt_split, embed, embed_automaton, flatten_field
from .ring import LaurentPoly, PolyMatrix, ResidueRing, is_prime


class SpecError(ValueError):
    pass


class SpecSyntaxError(SpecError):
    def __init__(self, msg: str, line: int, col: int):
        super().__init__(f"line {line}, column {col}: {msg}")
        self.line = line
        self.col = col


class SpecSemanticError(SpecError):
    pass


_TOKEN = re.compile(r"\s*(?:(\d+)|(u|w)|([-+*^()]))")


class _Lexer:
    def __init__(self, text: str, line: int, col0: int):
        self.toks: list[tuple[str, str, int]] = []
        pos = 0
        text = text.rstrip()
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                bad = pos + len(text[pos:]) - len(text[pos:].lstrip())
                raise SpecSyntaxError(f"unexpected character {text[bad]!r}", line, col0 + bad + 1)
            col = col0 + m.start(m.lastindex) + 1
            if m.group(1):
                self.toks.append(("int", m.group(1), col))
            elif m.group(2):
                self.toks.append((m.group(2), m.group(2), col))
            else:
                self.toks.append((m.group(3), m.group(3), col))
            pos = m.end()
        self.i = 0
        self.line = line
        self.end_col = col0 + len(text) + 1

    def peek(self) -> str | None:
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def take(self, kind: str | None = None) -> tuple[str, str, int]:
        if self.i >= len(self.toks):
            raise SpecSyntaxError(f"expected {kind or 'token'}, found end of line", self.line, self.end_col)
        tok = self.toks[self.i]
        if kind is not None and tok[0] != kind:
            raise SpecSyntaxError(f"expected {kind!r}, found {tok[1]!r}", self.line, tok[2])
        self.i += 1
        return tok

    def done(self) -> None:
        if self.i < len(self.toks):
            tok = self.toks[self.i]
            raise SpecSyntaxError(f"unexpected {tok[1]!r}", self.line, tok[2])


def _sint(lx: _Lexer) -> int:
    sign = 1
    if lx.peek() == "-":
        lx.take()
        sign = -1
    return sign * int(lx.take("int")[1])


def _mono(lx: _Lexer, var: str) -> int:
    lx.take(var)
    if lx.peek() == "^":
        lx.take()
        return _sint(lx)
    return 1


def _poly_terms(lx: _Lexer, coef, var: str = "u"):
    """poly := ["-"] term (("+"|"-") term)* ; term := coef ["*" mono] | mono."""
    out = []
    sign = 1
    if lx.peek() == "-":
        lx.take()
        sign = -1
    while True:
        if lx.peek() == var:
            c, e = None, _mono(lx, var)
        else:
            c = coef(lx)
            e = 0
            if lx.peek() == "*":
                lx.take()
                e = _mono(lx, var)
        out.append((sign, c, e))
        nxt = lx.peek()
        if nxt not in ("+", "-"):
            break
        sign = 1 if lx.take()[0] == "+" else -1
    return out


def parse_poly(text: str, q: int, line: int = 1, col0: int = 0) -> LaurentPoly:
    lx = _Lexer(text, line, col0)
    acc: dict[int, int] = {}
    for sign, c, e in _poly_terms(lx, lambda lx_: int(lx_.take("int")[1])):
        acc[e] = acc.get(e, 0) + sign * (1 if c is None else c)
    lx.done()
    return LaurentPoly(acc, q)


def _wpoly(lx: _Lexer, p: int) -> list[int]:
    acc: dict[int, int] = {}
    for sign, c, e in _poly_terms(lx, lambda lx_: int(lx_.take("int")[1]), var="w"):
        if e < 0:
            raise SpecSemanticError(f"line {lx.line}: negative power of w")
        acc[e] = acc.get(e, 0) + sign * (1 if c is None else c)
    n = max(acc, default=0) + 1
    return [acc.get(i, 0) % p for i in range(n)]


def _field_coef(lx: _Lexer, p: int) -> list[int]:
    if lx.peek() == "(":
        lx.take()
        v = _wpoly(lx, p)
        lx.take(")")
        return v
    if lx.peek() == "w":
        e = _mono(lx, "w")
        if e < 0:
            raise SpecSemanticError(f"line {lx.line}: negative power of w")
        return [0] * e + [1]
    return [int(lx.take("int")[1]) % p]


def parse_field_poly(text: str, F: FiniteField, line: int = 1, col0: int = 0) -> dict[int, tuple[int, ...]]:
    """u-polynomial with coefficients in F; returns {exponent: field element}."""
    lx = _Lexer(text, line, col0)
    acc: dict[int, tuple[int, ...]] = {}
    for sign, c, e in _poly_terms(lx, lambda lx_: _field_coef(lx_, F.p)):
        el = F.one() if c is None else F.elem(c)
        if sign < 0:
            el = tuple((-x) % F.p for x in el)
        acc[e] = F.add(acc.get(e, F.zero()), el)
    lx.done()
    return {e: v for e, v in sorted(acc.items()) if any(v)}


@dataclass
class GroupBlock:
    orders: tuple[int, ...]
    images: dict[int, list[tuple[int, ...] | None]]  # offset -> per-generator images


@dataclass
class FieldBlock:
    p: int
    modulus: tuple[int, ...]  # low -> high, monic
    entries: dict[tuple[int, int], dict[int, tuple[int, ...]]]

    @property
    def e(self) -> int:
        return len(self.modulus) - 1


@dataclass
class CaSpecFile:
    ring: tuple[int, int] | None = None
    dim: int | None = None
    entries: dict[tuple[int, int], LaurentPoly] = field(default_factory=dict)
    init: tuple[int, ...] | None = None
    colors: dict[tuple[int, ...], tuple[int, int, int]] = field(default_factory=dict)
    group: GroupBlock | None = None
    field_: FieldBlock | None = None
    prime: int | None = None

    # -- derived objects -----------------------------------------------------
    def residue_ring(self) -> ResidueRing:
        return ResidueRing.from_modulus(self.automaton().q)

    def automaton(self) -> PolyMatrix:
        if self.group is not None:
            return self._group_automaton()[1]
        if self.field_ is not None:
            fb = self.field_
            F = FiniteField(fb.p, fb.modulus)
            d = self.dim
            ents = [[fb.entries.get((i, j), {}) for j in range(d)] for i in range(d)]
            return flatten_field(ents, F)
        q = self.ring[0] ** self.ring[1]
        rows = [[self.entries.get((i, j), LaurentPoly({}, q)) for j in range(self.dim)] for i in range(self.dim)]
        return PolyMatrix(rows, q)

    def _group_parts(self):
        gb = self.group
        group = GroupSpec(gb.orders)
        maps = {off: EndoSpec(tuple(imgs)) for off, imgs in sorted(gb.images.items())}
        primes = group.primes()
        if len(primes) == 1:
            return group, maps
        if self.prime is None:
            raise SpecSemanticError(
                f"group of order {group.size} has primes {primes}; choose one with a prime selection"
            )
        if self.prime not in primes:
            raise SpecSemanticError(f"prime {self.prime} does not divide the group order")
        sub_maps = {}
        sub_group = None
        for off, alpha in maps.items():
            for p, sub, endo in crt_split(group, alpha):
                if p == self.prime:
                    sub_group, sub_maps[off] = sub, endo
        return sub_group, sub_maps

    def _group_automaton(self):
        group, maps = self._group_parts()
        return embed_automaton(group, maps)

    def initial(self) -> tuple[int, ...]:
        T = self.automaton()
        if self.init is None:
            return (1,) + (0,) * (T.d - 1)
        if self.group is not None:
            group, maps = self._group_parts()
            emb = embed(group, next(iter(maps.values())))
            g = self.init
            if len(self.group.orders) != len(group.orders):
                keep = [a for a, n in enumerate(self.group.orders) if n % self.prime == 0]
                g = tuple(self.init[a] for a in keep)
            return emb.s(tuple(v % n for v, n in zip(g, group.orders)))
        return tuple(v % T.q for v in self.init)

    def palette(self) -> dict[tuple[int, ...], tuple[int, int, int]]:
        return dict(self.colors)


def _split_colon(body: str, line: int, what: str, col0: int) -> tuple[str, str, int]:
    if ":" not in body:
        raise SpecSyntaxError(f"{what} needs ':'", line, col0 + len(body) + 1)
    head, tail = body.split(":", 1)
    return head, tail, col0 + len(head) + 1


def _ints(text: str, line: int, col0: int, what: str) -> list[int]:
    out = []
    for m in re.finditer(r"\S+", text):
        if not re.fullmatch(r"-?\d+", m.group()):
            raise SpecSyntaxError(f"{what}: expected integer, found {m.group()!r}", line, col0 + m.start() + 1)
        out.append(int(m.group()))
    return out


def parse_spec(text: str, prime: int | None = None) -> CaSpecFile:
    spec = CaSpecFile(prime=prime)
    pending_entries: list[tuple[int, int, str, int, int]] = []
    pending_fentries: list[tuple[int, int, str, int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        stripped = line.lstrip()
        if not stripped:
            continue
        col0 = len(line) - len(stripped)
        kw, _, rest = stripped.partition(" ")
        rcol = col0 + len(kw) + 1
        if kw == "ring":
            vals = _ints(rest, lineno, rcol, "ring")
            if len(vals) != 2:
                raise SpecSyntaxError("ring takes P L", lineno, rcol)
            if not is_prime(vals[0]) or vals[1] < 1:
                raise SpecSemanticError(f"line {lineno}: ring Z/{vals[0]}^{vals[1]} is not a prime power ring")
            spec.ring = (vals[0], vals[1])
        elif kw == "dim":
            vals = _ints(rest, lineno, rcol, "dim")
            if len(vals) != 1 or vals[0] < 1:
                raise SpecSyntaxError("dim takes one positive integer", lineno, rcol)
            spec.dim = vals[0]
        elif kw in ("entry", "fentry"):
            head, tail, tcol = _split_colon(rest, lineno, kw, rcol)
            ij = _ints(head, lineno, rcol, kw)
            if len(ij) != 2:
                raise SpecSyntaxError(f"{kw} takes I J before ':'", lineno, rcol)
            target = pending_entries if kw == "entry" else pending_fentries
            target.append((ij[0], ij[1], tail, lineno, tcol))
        elif kw == "init":
            spec.init = tuple(_ints(rest, lineno, rcol, "init"))
        elif kw == "color":
            if "=" not in rest:
                raise SpecSyntaxError("color needs '='", lineno, rcol + len(rest) + 1)
            lhs, rhs = rest.split("=", 1)
            vec = tuple(_ints(lhs, lineno, rcol, "color"))
            rgb = _ints(rhs, lineno, rcol + len(lhs) + 1, "color")
            if len(rgb) != 3 or any(not 0 <= c <= 255 for c in rgb):
                raise SpecSemanticError(f"line {lineno}: color needs three values in 0..255")
            spec.colors[vec] = (rgb[0], rgb[1], rgb[2])
        elif kw == "group":
            orders = _ints(rest, lineno, rcol, "group")
            if not orders or any(n < 2 for n in orders):
                raise SpecSemanticError(f"line {lineno}: cyclic orders must be >= 2")
            spec.group = GroupBlock(tuple(orders), {})
        elif kw == "image":
            if spec.group is None:
                raise SpecSemanticError(f"line {lineno}: image before group")
            head, tail, tcol = _split_colon(rest, lineno, "image", rcol)
            off = 0
            if "@" in head:
                head, offtxt = head.split("@", 1)
                o = _ints(offtxt, lineno, rcol + len(head) + 1, "image offset")
                if len(o) != 1:
                    raise SpecSyntaxError("image offset must be one integer", lineno, rcol + len(head) + 1)
                off = o[0]
            j = _ints(head, lineno, rcol, "image")
            if len(j) != 1:
                raise SpecSyntaxError("image takes one generator index", lineno, rcol)
            r = len(spec.group.orders)
            if not 1 <= j[0] <= r:
                raise SpecSemanticError(f"line {lineno}: generator {j[0]} out of range 1..{r}")
            img = tuple(_ints(tail, lineno, tcol, "image"))
            if len(img) != r:
                raise SpecSemanticError(f"line {lineno}: image needs {r} components, got {len(img)}")
            slots = spec.group.images.setdefault(off, [None] * r)
            slots[j[0] - 1] = tuple(v % n for v, n in zip(img, spec.group.orders))
        elif kw == "field":
            head, tail, tcol = _split_colon(rest, lineno, "field", rcol)
            pe = _ints(head, lineno, rcol, "field")
            if len(pe) != 2 or not is_prime(pe[0]) or pe[1] < 1:
                raise SpecSemanticError(f"line {lineno}: field takes a prime P and degree E")
            lx = _Lexer(tail, lineno, tcol)
            mod = _wpoly(lx, pe[0])
            lx.done()
            if len(mod) - 1 != pe[1] or mod[-1] % pe[0] != 1:
                raise SpecSemanticError(f"line {lineno}: modulus must be monic of degree {pe[1]}")
            spec.field_ = FieldBlock(pe[0], tuple(mod), {})
        else:
            raise SpecSyntaxError(f"unknown keyword {kw!r}", lineno, col0 + 1)

    if (spec.group is not None) + (spec.field_ is not None) + bool(pending_entries) > 1:
        raise SpecSemanticError("give exactly one of: entry lines, a group block, a field block")

    if spec.group is not None:
        gb = spec.group
        if not gb.images:
            raise SpecSemanticError("group block has no image lines")
        for off, slots in gb.images.items():
            missing = [j + 1 for j, s in enumerate(slots) if s is None]
            if missing:
                raise SpecSemanticError(f"offset {off}: missing images for generators {missing}")
        try:
            T = spec.automaton()
        except ValueError as exc:
            raise SpecSemanticError(str(exc)) from exc
        if spec.ring is not None and spec.ring[0] ** spec.ring[1] != T.q:
            raise SpecSemanticError(f"ring line disagrees with group modulus {T.q}")
        if spec.dim is not None:
            raise SpecSemanticError("a group block fixes the dimension; drop the dim line")
    elif spec.field_ is not None:
        fb = spec.field_
        try:
            F = FiniteField(fb.p, fb.modulus)
        except ValueError as exc:
            raise SpecSemanticError(str(exc)) from exc
        if spec.dim is None:
            raise SpecSemanticError("field block needs a dim line")
        for i, j, txt, ln, col in pending_fentries:
            _check_index(i, j, spec.dim, ln)
            fb.entries[(i - 1, j - 1)] = parse_field_poly(txt, F, ln, col)
    else:
        if spec.ring is None or spec.dim is None:
            raise SpecSemanticError("matrix description needs ring and dim lines")
        q = spec.ring[0] ** spec.ring[1]
        for i, j, txt, ln, col in pending_entries:
            _check_index(i, j, spec.dim, ln)
            spec.entries[(i - 1, j - 1)] = parse_poly(txt, q, ln, col)
    if pending_fentries and spec.field_ is None:
        raise SpecSemanticError("fentry lines need a field block")

    d = spec.automaton().d
    if spec.init is not None and spec.group is None and len(spec.init) != d:
        raise SpecSemanticError(f"init has {len(spec.init)} components, automaton dimension is {d}")
    if spec.group is not None and spec.init is not None and len(spec.init) != len(spec.group.orders):
        raise SpecSemanticError(f"init needs {len(spec.group.orders)} group coordinates")
    for vec in spec.colors:
        if len(vec) != d:
            raise SpecSemanticError(f"color vector {vec} has wrong length, expected {d}")
    return spec


def _check_index(i: int, j: int, d: int, line: int) -> None:
    if not (1 <= i <= d and 1 <= j <= d):
        raise SpecSemanticError(f"line {line}: entry ({i},{j}) out of range for dim {d}")


# -- printing ------------------------------------------------------------------

def format_poly(p: LaurentPoly) -> str:
    if p.is_zero():
        return "0"
    parts = []
    for e, c in p.terms():
        if e == 0:
            parts.append(str(c))
        else:
            mono = "u" if e == 1 else f"u^{e}"
            parts.append(mono if c == 1 else f"{c}*{mono}")
    return " + ".join(parts)


def _format_welem(v: tuple[int, ...]) -> str:
    parts = []
    for i, c in enumerate(v):
        if not c:
            continue
        mono = "" if i == 0 else ("w" if i == 1 else f"w^{i}")
        if not mono:
            parts.append(str(c))
        else:
            parts.append(mono if c == 1 else f"{c}*{mono}")
    return " + ".join(parts) or "0"


def _format_field_poly(entry: dict[int, tuple[int, ...]]) -> str:
    if not entry:
        return "0"
    parts = []
    for e, v in sorted(entry.items()):
        coef = f"({_format_welem(v)})"
        parts.append(coef if e == 0 else f"{coef}*u^{e}")
    return " + ".join(parts)


def format_spec(spec: CaSpecFile) -> str:
    out = []
    if spec.group is not None:
        if spec.ring is not None:
            out.append(f"ring {spec.ring[0]} {spec.ring[1]}")
        out.append("group " + " ".join(map(str, spec.group.orders)))
        for off, slots in sorted(spec.group.images.items()):
            for j, img in enumerate(slots):
                at = f" @ {off}" if off else ""
                out.append(f"image {j + 1}{at} : " + " ".join(map(str, img)))
    elif spec.field_ is not None:
        fb = spec.field_
        out.append(f"field {fb.p} {fb.e} : " + " + ".join(
            ("1" if i == 0 else ("w" if i == 1 else f"w^{i}")) if c == 1 else
            (str(c) if i == 0 else f"{c}*" + ("w" if i == 1 else f"w^{i}"))
            for i, c in enumerate(fb.modulus) if c
        ))
        out.append(f"dim {spec.dim}")
        for (i, j), ent in sorted(fb.entries.items()):
            out.append(f"fentry {i + 1} {j + 1} : {_format_field_poly(ent)}")
    else:
        out.append(f"ring {spec.ring[0]} {spec.ring[1]}")
        out.append(f"dim {spec.dim}")
        for (i, j), p in sorted(spec.entries.items()):
            out.append(f"entry {i + 1} {j + 1} : {format_poly(p)}")
    if spec.init is not None:
        out.append("init " + " ".join(map(str, spec.init)))
    for vec, rgb in sorted(spec.colors.items()):
        out.append("color " + " ".join(map(str, vec)) + " = " + " ".join(map(str, rgb)))
    return "\n".join(out) + "\n"


def load_spec(path, prime: int | None = None) -> CaSpecFile:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read(), prime=prime)


def spec_from_matrix(T: PolyMatrix, init=None) -> CaSpecFile:
    R = ResidueRing.from_modulus(T.q)
    ents = {(i, j): T[i, j] for i in range(T.d) for j in range(T.d) if not T[i, j].is_zero()}
    return CaSpecFile(ring=(R.p, R.l), dim=T.d, entries=ents, init=None if init is None else tuple(init))

