"""Maximum-likelihood estimation of Kronecker-factored precision matrices.

The main entry points are re-exported here; see the submodules for the
full surface.
"""
from .data import Dataset, Seed, load, sample_model, save, whiten
from .errors import (
    DegenerateInput,
    FormatError,
    InvalidInput,
    KronMLEError,
    NotPositiveDefinite,
    NumericalFailure,
    SingularMarginal,
    TooLarge,
)
from .likelihood import ObjectiveConfig, f_alpha_value, f_value, gradient, hessian_apply
from .manifold import DimVector, KronPoint, TangentVec, balance, exp_at, geodesic_distance
from .metrics import factor_errors, kl_gaussian, rel_frob, rel_op
from .solvers import Estimate, SolverConfig, SolverReport, Termination, fit, flip_flop, shrink_flop

__version__ = "0.1.0"
