"""Sparse polynomial approximation of elliptic PDEs with log-gamma or log-normal inputs."""
from .measures import MeasureSpec
from .multiindex import MultiIndex, WeightFamily, build_lambda
from .orthopoly import gauss_rule, lagrange_basis, lebesgue_constant, orthonormal_values
from .pde import ParametricProblem, SpatialMesh, solve, v_norm
from .gpc import GpcExpansion, oracle_expansion
from .sparsegrid import build_operator, interpolate, quadrature
from .lsq import design, fit_bochner, fit_scalar, lsq_quadrature

__version__ = "0.1.0"

__all__ = [
    "GpcExpansion", "MeasureSpec", "MultiIndex", "ParametricProblem", "SpatialMesh",
    "WeightFamily", "build_lambda", "build_operator", "design", "fit_bochner", "fit_scalar",
    "gauss_rule", "interpolate", "lagrange_basis", "lebesgue_constant", "lsq_quadrature",
    "oracle_expansion", "orthonormal_values", "quadrature", "solve", "v_norm",
]
