"""Backward errors, condition numbers and pseudospectra of rectangular
multiparameter eigenvalue problems."""

from .backward import (
    attaining_perturbations,
    eigenpair_backward_error,
    eigenvalue_backward_error,
)
from .conditioning import (
    eigenvalue_condition,
    eigenvector_condition,
    intersection_angles,
    verify_jacobian_factorization,
)
from .errors import ConvergenceError, DimensionError, MpspecError, NotSimpleError
from .pencil import (
    Eigenpair,
    MultiParamPencil,
    PerturbationModel,
    evaluate,
    gamma,
    left_nullspace,
    normal_rank,
)
from .pseudospectrum import GridSpec, field, membership, right_definiteness
from .solver import refine, solve_all, verify_spectrum

__version__ = "0.1.0"
