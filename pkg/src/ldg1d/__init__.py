"""Local discontinuous Galerkin methods for 1D fully nonlinear elliptic and parabolic equations."""

from .boundary import BoundaryData
from .dgspace import DGFunction, DGSpace, error_norms, l2_project
from .elliptic import NonconvergenceError, SolverConfig, solve_newton, solve_splitting
from .ldg_ops import assemble
from .mesh import Mesh, uniform_mesh
from .numop import NumericalOperator, PointwiseOperator
from .parabolic import TimeGrid, evolve
from .problems import Problem, get_problem

__all__ = [
    "BoundaryData", "DGFunction", "DGSpace", "Mesh", "NonconvergenceError", "NumericalOperator",
    "PointwiseOperator", "Problem", "SolverConfig", "TimeGrid", "assemble", "error_norms",
    "evolve", "get_problem", "l2_project", "solve_newton", "solve_splitting", "uniform_mesh",
]

__version__ = "0.1.0"
