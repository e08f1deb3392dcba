"""Automaton -> relation -> leaf tables -> window -> substitution system."""

from __future__ import annotations

from dataclasses import dataclass

from .recursion import LeafTables, Relation, Window, compute_window, derive_relation, leaf_tables, rendering_cover
from .ring import MonicPoly, PolyMatrix, ResidueRing, char_poly, poly_eval
from .substitution import SubstSystem, build_substitution, lazy_system


@dataclass
class Derivation:
    T: PolyMatrix
    relation: Relation
    tables: LeafTables
    window: Window
    system: SubstSystem


def derive(
    T: PolyMatrix,
    *,
    pi: MonicPoly | None = None,
    window: tuple[int, int] | None = None,
    rule: str = "exact",
    closed: bool = True,
    full_space: bool = False,
    max_states: int | None = 500_000,
) -> Derivation:
    """Build the substitution system of T.

    With ``closed=False`` transitions are left to be computed on demand, which
    is enough for expansion to a fixed depth.
    """
    R = ResidueRing.from_modulus(T.q)
    if pi is None:
        pi = char_poly(T)
    elif not poly_eval(pi, T).is_zero():
        raise ValueError(f"{pi} does not annihilate the automaton")
    rel = derive_relation(pi, R)
    tables = leaf_tables(rel)
    cover = rendering_cover(T, rel.m_prime)
    win = compute_window(tables, rel.k, rule=rule, cover=cover, override=window)
    if closed:
        sys_ = build_substitution(tables, win, full_space=full_space, max_states=max_states)
    else:
        sys_ = lazy_system(tables, win)
    return Derivation(T, rel, tables, win, sys_)
