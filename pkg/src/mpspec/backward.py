"""Norm-wise backward errors of approximate eigenpairs and eigenvalues.

Norms are spectral for matrices and Euclidean for vectors.
"""

from __future__ import annotations

import math

import numpy as np

from .pencil import (
    MultiParamPencil,
    PerturbationModel,
    complex_sign,
    evaluate,
    gamma,
)

__all__ = [
    "eigenpair_backward_error",
    "eigenvalue_backward_error",
    "attaining_perturbations",
    "smallest_singular_triplet",
]


def _ratio(num: float, den: float) -> float:
    if num == 0:
        return 0.0
    if den == 0:
        return math.inf
    return num / den


def eigenpair_backward_error(
    pencil: MultiParamPencil, model: PerturbationModel, lam, x
) -> float:
    """||M(lam) x|| / (gamma(lam) ||x||).

    An exact pair has error 0 even if gamma vanishes; a nonzero residual
    with gamma = 0 gives ``inf`` (perturbations are forbidden).
    """
    x = np.asarray(x, dtype=complex)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("the approximate eigenvector must be nonzero")
    r = evaluate(pencil, lam) @ x
    return _ratio(float(np.linalg.norm(r)), gamma(model, lam, pencil) * nx)


def smallest_singular_triplet(a: np.ndarray):
    """(sigma_min, left vector, right vector) of a tall or square matrix."""
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    return float(s[-1]), u[:, -1], vh[-1].conj()


def eigenvalue_backward_error(
    pencil: MultiParamPencil, model: PerturbationModel, lam
) -> float:
    """sigma_min(M(lam)) / gamma(lam), the error minimized over unit vectors."""
    smin = np.linalg.svd(evaluate(pencil, lam), compute_uv=False)[-1]
    return _ratio(float(smin), gamma(model, lam, pencil))


def attaining_perturbations(
    pencil: MultiParamPencil, model: PerturbationModel, lam, x
) -> np.ndarray:
    """Rank-one coefficient perturbations of minimal size making (lam, x) exact.

    Term t receives -sign(lam**exp_t) ||E_t|| / gamma * r w^H, where
    r = M(lam) x and w = x / ||x||^2 is the dual vector of x.  Returns a
    (T, k, l) array in term order.
    """
    x = np.asarray(x, dtype=complex)
    nx = np.linalg.norm(x)
    if nx == 0:
        raise ValueError("the approximate eigenvector must be nonzero")
    g = gamma(model, lam, pencil)
    if g == 0:
        raise ValueError("gamma vanishes: no admissible perturbation exists")
    r = evaluate(pencil, lam) @ x
    rw = np.outer(r, (x / nx**2).conj())
    mono = pencil.monomials(lam)
    return np.stack(
        [-complex_sign(mu) * w / g * rw for mu, w in zip(mono, model.weights)]
    )
