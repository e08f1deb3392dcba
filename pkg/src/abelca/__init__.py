"""Linear cellular automata over Laurent polynomial matrices and their substitution systems."""

from .analysis import average_hue, fractal_dimension, hausdorff, transition_matrix, verify
from .engine import check_dual_identity, is_weakly_p_fermat, spacetime, step
from .groups import Embedding, EndoSpec, GroupSpec, embed, embed_automaton
from .pipeline import Derivation, derive
from .recursion import compute_window, derive_relation, frobenius_period, leaf_tables
from .ring import LaurentPoly, MonicPoly, PolyMatrix, ResidueRing, char_poly
from .specfile import load_spec, parse_spec
from .substitution import SubstSystem, build_substitution, dumps, expand, graph_analysis, loads

__all__ = [
    "average_hue", "fractal_dimension", "hausdorff", "transition_matrix", "verify",
    "check_dual_identity", "is_weakly_p_fermat", "spacetime", "step",
    "Embedding", "EndoSpec", "GroupSpec", "embed", "embed_automaton",
    "Derivation", "derive",
    "compute_window", "derive_relation", "frobenius_period", "leaf_tables",
    "LaurentPoly", "MonicPoly", "PolyMatrix", "ResidueRing", "char_poly",
    "load_spec", "parse_spec",
    "SubstSystem", "build_substitution", "dumps", "expand", "graph_analysis", "loads",
]
__version__ = "0.1.0"
