"""Closed-form and numerical overlap integrals of spherical Bessel functions."""
from .dist_algebra import DistExpr, apply_D, canonicalize, eval_regular, singular_part, smear
from .double_sbf import DoubleSpec, base_expr, closed_form, evaluate
from .multi_sbf import MultiSpec, evaluate_multi, plan
from .oracle import QuadratureConfig, TestFunction, oscillatory_integral, smeared_double
from .triple_sbf import TripleSpec, choose_L, mehrem_even_k2, reduce_triple, reference_001_n2

__all__ = [
    "DistExpr", "apply_D", "canonicalize", "eval_regular", "singular_part", "smear",
    "DoubleSpec", "base_expr", "closed_form", "evaluate",
    "MultiSpec", "evaluate_multi", "plan",
    "QuadratureConfig", "TestFunction", "oscillatory_integral", "smeared_double",
    "TripleSpec", "choose_L", "mehrem_even_k2", "reduce_triple", "reference_001_n2",
]
__version__ = "0.1.0"
