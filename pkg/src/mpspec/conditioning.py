"""Eigenvalue and eigenvector condition numbers.

The eigenvalue condition number rests on the auxiliary m x m matrix
B_ij = y_i^H (dM/dlam_j) x built from an orthonormal left null basis
Y = [y_1 ... y_m] of M(lam*).  Its inverse maps first-order coefficient
perturbations onto eigenvalue perturbations, so

    kappa(lam*) = ||B^{-1}|| gamma* / ||lam*||      (relative)
    kappa(lam*) = ||B^{-1}|| gamma*                 (absolute)

The secular Jacobian and the intersection angles of the secular curves
give a geometric reading of the same quantity for m = 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.linalg import null_space

from .backward import eigenvalue_backward_error
from .errors import DimensionError, NotSimpleError
from .pencil import (
    MultiParamPencil,
    NullSpaceBasis,
    PerturbationModel,
    complex_sign,
    enumerate_selections,
    evaluate,
    gamma,
    partial_derivative,
    secular_gradient,
    secular_value,
)

__all__ = [
    "ConditionReport",
    "SIMPLE_NULL_TOL",
    "MAX_COND_B",
    "eigen_left_basis",
    "auxiliary_matrix",
    "eigenvalue_condition",
    "eigenvalue_attaining_perturbations",
    "eigenvector_condition",
    "eigenvector_condition_bordered",
    "secular_jacobian",
    "verify_jacobian_factorization",
    "intersection_angles",
]

SIMPLE_NULL_TOL = 1e-10
MAX_COND_B = 1e12
MAX_BACKWARD_ERROR = 1e-8


@dataclass(frozen=True)
class ConditionReport:
    kappa: float
    mode: str
    b_inverse_norm: float
    gamma_star: float
    left_null_dim: int
    lam_norm: float
    switched_to_absolute: bool = False
    eta: float = 0.0

    def as_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "mode": self.mode,
            "b_inverse_norm": self.b_inverse_norm,
            "gamma_star": self.gamma_star,
            "left_null_dim": self.left_null_dim,
            "lambda_norm": self.lam_norm,
            "switched_to_absolute": self.switched_to_absolute,
            "eta_lambda": self.eta,
        }


def _derivative_columns(pencil: MultiParamPencil, lam, x) -> np.ndarray:
    """k x m matrix whose columns are (dM/dlam_j) x."""
    return np.column_stack([partial_derivative(pencil, lam, j) @ x for j in range(pencil.m)])


def eigen_left_basis(pencil: MultiParamPencil, lam, tol: float = SIMPLE_NULL_TOL):
    """Left null basis of M(lam) and its right null vector, certified simple.

    The dimension is taken as k - l + 1 (one rank drop) and the
    certificate checks that exactly one singular value lies at or below
    ``tol * sigma_max``.  Returns ``(NullSpaceBasis, x)``.
    """
    a = evaluate(pencil, lam)
    k, l = a.shape  # noqa: E741
    if l > k:
        raise DimensionError("pencil must be tall or square")
    u, s, vh = np.linalg.svd(a, full_matrices=True)
    smax = s[0] if s[0] > 0 else 1.0
    small = int((s <= tol * smax).sum())
    if small != 1:
        raise NotSimpleError(
            f"left null space of dimension {k - l + small} at lambda, "
            f"expected {k - l + 1} (singular values {s})"
        )
    return NullSpaceBasis(u[:, l - 1:], tol, s), vh[-1].conj()


def auxiliary_matrix(pencil: MultiParamPencil, lam, x, Y) -> np.ndarray:
    """B_ij = y_i^H (dM/dlam_j) x for the columns y_i of ``Y``."""
    basis = Y.basis if isinstance(Y, NullSpaceBasis) else np.asarray(Y, dtype=complex)
    if basis.shape[1] != pencil.m:
        raise DimensionError(f"need {pencil.m} left null vectors, got {basis.shape[1]}")
    x = np.asarray(x, dtype=complex)
    return basis.conj().T @ _derivative_columns(pencil, lam, x)


def _prepare_pair(pencil, lam, x, check):
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    Y, xs = eigen_left_basis(pencil, lam)
    if x is None:
        x = xs
    else:
        x = np.asarray(x, dtype=complex)
        x = x / np.linalg.norm(x)
    if Y.dim != pencil.m:
        raise NotSimpleError(
            f"left null dimension {Y.dim} differs from m={pencil.m}; "
            "the pencil is not of standard shape at this point"
        )
    return lam, x, Y


def eigenvalue_condition(
    pencil: MultiParamPencil,
    model: PerturbationModel,
    lam,
    x=None,
    mode: str = "relative",
    check: bool = True,
) -> ConditionReport:
    """Norm-wise eigenvalue condition number at a simple eigenvalue.

    ``x`` defaults to the right singular vector of sigma_min.  With
    ``mode='relative'`` and lam = 0 the absolute number is returned and
    flagged.  Refuses (``NotSimpleError``) when the left null space does
    not have dimension m or B is numerically singular.
    """
    if mode not in ("relative", "absolute"):
        raise ValueError("mode must be 'relative' or 'absolute'")
    lam, x, Y = _prepare_pair(pencil, lam, x, check)
    eta = eigenvalue_backward_error(pencil, model, lam)
    if check and eta > MAX_BACKWARD_ERROR:
        raise NotSimpleError(f"backward error {eta:.2e} too large for an eigenvalue")
    B = auxiliary_matrix(pencil, lam, x, Y)
    sb = np.linalg.svd(B, compute_uv=False)
    if sb[-1] == 0 or sb[0] / sb[-1] > MAX_COND_B:
        raise NotSimpleError("auxiliary matrix is numerically singular")
    binv = 1.0 / sb[-1]
    g = gamma(model, lam, pencil)
    lam_norm = float(np.linalg.norm(lam))
    switched = False
    if mode == "relative" and lam_norm == 0:
        mode, switched = "absolute", True
    kappa = binv * g / lam_norm if mode == "relative" else binv * g
    return ConditionReport(
        kappa=float(kappa),
        mode=mode,
        b_inverse_norm=float(binv),
        gamma_star=g,
        left_null_dim=Y.dim,
        lam_norm=lam_norm,
        switched_to_absolute=switched,
        eta=eta,
    )


def eigenvalue_attaining_perturbations(
    pencil: MultiParamPencil, model: PerturbationModel, lam, x, eps: float
) -> np.ndarray:
    """Coefficient perturbations of size eps * ||E_t|| driving the worst first-order shift.

    Every term gets -eps sign(lam**exp_t) ||E_t|| y x^H, where y = Y u and
    u is the right singular vector of B^{-1} for its largest singular
    value, so that the first-order eigenvalue change has norm
    eps * gamma * ||B^{-1}||.
    """
    lam, x, Y = _prepare_pair(pencil, lam, x, True)
    B = auxiliary_matrix(pencil, lam, x, Y)
    _, _, vh = np.linalg.svd(np.linalg.inv(B))
    y = Y.basis @ vh[0].conj()
    yx = np.outer(y, x.conj())
    mono = pencil.monomials(lam)
    return np.stack([-eps * complex_sign(mu) * w * yx for mu, w in zip(mono, model.weights)])


def _projectors(pencil, lam, x, g):
    g = np.asarray(g, dtype=complex)
    c = np.vdot(g, x)
    if abs(c) < 1e-14 * np.linalg.norm(g):
        raise ValueError("normalization vector is orthogonal to the eigenvector")
    g = g / np.conj(c)  # g^H x = 1
    V = null_space(g.conj()[None, :])
    D = _derivative_columns(pencil, lam, x)
    W = null_space(D.conj().T)
    return g, V, W


def eigenvector_condition(
    pencil: MultiParamPencil,
    model: PerturbationModel,
    lam,
    x=None,
    g=None,
    check: bool = True,
) -> float:
    """||V (W^H M(lam) V)^{-1} W^H|| * gamma for the normalization g^H x = 1.

    V spans the complement of g, W the complement of span{(dM/dlam_i) x}.
    ``g`` defaults to x itself.
    """
    lam, x, _ = _prepare_pair(pencil, lam, x, check)
    if pencil.l == 1:
        return 0.0
    g, V, W = _projectors(pencil, lam, x, x if g is None else g)
    if W.shape[1] != V.shape[1]:
        raise NotSimpleError("derivative directions (dM/dlam_i) x are linearly dependent")
    P = W.conj().T @ evaluate(pencil, lam) @ V
    sp = np.linalg.svd(P, compute_uv=False)
    if sp[-1] == 0 or sp[0] / sp[-1] > MAX_COND_B:
        raise NotSimpleError("projected pencil W^H M V is numerically singular")
    K = V @ np.linalg.solve(P, W.conj().T)
    return float(np.linalg.norm(K, 2) * gamma(model, lam, pencil))


def eigenvector_condition_bordered(
    pencil: MultiParamPencil, model: PerturbationModel, lam, x, g=None
) -> float:
    """Same quantity through the bordered first-order system.

    Solves [[M, (dM/dlam) x], [g^H, 0]] [dx; dlam] = [-dM x; 0] and
    takes the norm of the dx block of the inverse.  Serves as an
    independent check of :func:`eigenvector_condition`.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    x = np.asarray(x, dtype=complex)
    x = x / np.linalg.norm(x)
    g = x if g is None else np.asarray(g, dtype=complex)
    g = g / np.conj(np.vdot(g, x))
    k, l, m = pencil.k, pencil.l, pencil.m  # noqa: E741
    top = np.hstack([evaluate(pencil, lam), _derivative_columns(pencil, lam, x)])
    bottom = np.concatenate([g.conj(), np.zeros(m)])[None, :]
    J = np.vstack([top, bottom])
    if J.shape[0] != J.shape[1]:
        raise DimensionError("bordered system is square only for standard-shape pencils")
    Jinv = np.linalg.inv(J)
    return float(np.linalg.norm(Jinv[:l, :k], 2) * gamma(model, lam, pencil))


def secular_jacobian(pencil: MultiParamPencil, lam) -> np.ndarray:
    """L x m matrix of secular gradients, rows in lexicographic selection order."""
    return np.array(
        [secular_gradient(pencil, sel, lam) for sel in enumerate_selections(pencil.k, pencil.l)]
    )


def _selection_left_vector(pencil, sel, lam) -> np.ndarray:
    """Left null vector of the selected square block, embedded in C^k."""
    c = evaluate(pencil, lam)[list(sel), :]
    u, _, _ = np.linalg.svd(c)
    w = np.zeros(pencil.k, dtype=complex)
    w[list(sel)] = u[:, -1]
    return w


def verify_jacobian_factorization(pencil: MultiParamPencil, lam, x=None):
    """Write the secular Jacobian as D B with D = [[a, 0], [0, b], [c, d]].

    Only for 3 x 2 pencils in two parameters.  The left null basis is the
    pair of embedded left null vectors of the first two selected blocks.
    Returns ``(D, relative residual ||J - D B|| / ||J||, B, J)``.
    """
    if not (pencil.m == 2 and pencil.k == 3 and pencil.l == 2):
        raise DimensionError("factorization is stated for 3 x 2 two-parameter pencils")
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if x is None:
        _, x = eigen_left_basis(pencil, lam)
    x = np.asarray(x, dtype=complex) / np.linalg.norm(x)
    sels = enumerate_selections(3, 2)
    Wb = np.column_stack([_selection_left_vector(pencil, s, lam) for s in sels[:2]])
    B = auxiliary_matrix(pencil, lam, x, Wb)
    J = secular_jacobian(pencil, lam)
    D = np.zeros((3, 2), dtype=complex)
    for i in range(2):
        D[i, i] = np.vdot(B[i], J[i]) / np.vdot(B[i], B[i])
    D[2] = np.linalg.solve(B.T, J[2])
    res = np.linalg.norm(J - D @ B) / np.linalg.norm(J)
    return D, float(res), B, J


def _acute_angle(a: np.ndarray, b: np.ndarray) -> float:
    c = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    return float(math.acos(min(1.0, c)))


def intersection_angles(pencil: MultiParamPencil, lam, tol: float = 1e-8):
    """Pairwise acute angles between the real secular curves through ``lam``.

    A curve passes through ``lam`` when its secular value is at most
    ``tol`` times the Hadamard bound of the selected rows.  The angle
    between two curves equals the angle between their real gradients.
    Curves with a vanishing gradient (singular points, e.g. a selection
    whose block is identically zero) have no tangent and are skipped.
    Returns ``(angles, mean)``.
    """
    if pencil.m != 2:
        raise DimensionError("intersection angles are defined for two parameters")
    if not pencil.is_real:
        raise ValueError("intersection angles need a real pencil")
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if np.any(lam.imag != 0):
        raise ValueError("intersection angles need a real point")
    a = evaluate(pencil, lam)
    grads = []
    for sel in enumerate_selections(pencil.k, pencil.l):
        scale = np.prod(np.linalg.norm(a[list(sel)], axis=1))
        if abs(secular_value(pencil, sel, lam)) <= tol * max(scale, 1e-300):
            g = secular_gradient(pencil, sel, lam).real
            if np.linalg.norm(g) > tol * max(scale, 1e-300):
                grads.append(g)
    if len(grads) < 2:
        raise ValueError("fewer than two secular curves pass through this point")
    angles = [_acute_angle(g1, g2) for g1, g2 in combinations(grads, 2)]
    return angles, float(np.mean(angles))
