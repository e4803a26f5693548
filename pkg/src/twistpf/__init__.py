"""Exact differential equations for twisted Feynman parametric integrals."""

__version__ = "0.1.0"

from .graph import Edge, FeynmanGraph, KinematicTable, SymanzikPolys, matrix_tree_U, spanning_2forests, spanning_trees, symanzik
from .operator import equal_up_to_unit, normalize, render, singular_locus
from .pfdriver import DiffOperator, OrderBoundExceeded, minimal_operator, specialize, verify_operator
from .reduce import ReductionCertificate, build_level, build_tower, normal_form, reduce_once
from .ring import HomogeneousPoly, LinearSystem, ParamField, ParamRing, partial_derivative, poly_arith, solve_linear
from .twist import TwistedForm, TwistSpec, log_gradient_residual, make_form, t_derivative

__all__ = [
    "Edge", "FeynmanGraph", "KinematicTable", "SymanzikPolys", "matrix_tree_U", "spanning_2forests",
    "spanning_trees", "symanzik", "equal_up_to_unit", "normalize", "render", "singular_locus",
    "DiffOperator", "OrderBoundExceeded", "minimal_operator", "specialize", "verify_operator",
    "ReductionCertificate", "build_level", "build_tower", "normal_form", "reduce_once",
    "HomogeneousPoly", "LinearSystem", "ParamField", "ParamRing", "partial_derivative", "poly_arith",
    "solve_linear", "TwistedForm", "TwistSpec", "log_gradient_residual", "make_form", "t_derivative",
]
