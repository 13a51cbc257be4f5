"""Least-squares realization: stationary points of the model misfit.

Given data y in R^N and an order n, find yhat and alpha minimizing
1/2 ||yhat - y||^2 subject to the difference equation

    yhat_k + alpha_1 yhat_{k-1} + ... + alpha_n yhat_{k-n} = 0,   k = n+1..N,

written as T(alpha) yhat = 0 with a banded Toeplitz T.  Stationary points
solve the KKT system of the Lagrangian 1/2 ||yhat - y||^2 + v^T T(alpha) yhat
and are found by multistart Newton.  They are classified through the
Hessian of the reduced cost phi(alpha) = min {1/2 ||yhat - y||^2 : T yhat = 0}.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DimensionError

log = logging.getLogger(__name__)

__all__ = [
    "RealizationProblem",
    "StationaryPoint",
    "constraint_matrix",
    "constraint_derivatives",
    "kkt_system",
    "initial_state",
    "newton_kkt",
    "find_stationary_points",
    "reduced_hessian",
    "classify",
    "classify_hessian",
    "conditioning_probe",
]

KKT_TOL = 1e-10
DEGENERATE_TOL = 1e-8


@dataclass(frozen=True)
class RealizationProblem:
    y: np.ndarray
    n: int

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        if not np.all(np.isfinite(y)):
            raise ValueError("data must be finite")
        if self.n < 1:
            raise DimensionError("model order must be positive")
        if not y.size > 2 * self.n:
            raise DimensionError(f"need more than {2 * self.n} samples for order {self.n}")
        object.__setattr__(self, "y", y)

    @property
    def N(self) -> int:
        return self.y.size

    @property
    def size(self) -> int:
        """Number of KKT unknowns (yhat, v, alpha)."""
        return self.N + (self.N - self.n) + self.n


@dataclass
class StationaryPoint:
    alpha: np.ndarray
    y_hat: np.ndarray
    v: np.ndarray
    cost: float
    misfit: float
    type: str
    hessian_eigenvalues: np.ndarray = field(repr=False, default=None)
    degenerate: bool = False
    kkt_residual: float = 0.0
    iterations: int = 0

    def as_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "cost": self.cost,
            "misfit": self.misfit,
            "type": self.type,
            "degenerate": self.degenerate,
            "hessian_eigenvalues": np.asarray(self.hessian_eigenvalues).tolist(),
            "kkt_residual": self.kkt_residual,
            "y_hat": self.y_hat.tolist(),
            "v": self.v.tolist(),
        }


def constraint_matrix(alpha, N: int) -> np.ndarray:
    """(N - n) x N banded Toeplitz T(alpha); row k holds (alpha_n, ..., alpha_1, 1)."""
    alpha = np.asarray(alpha)
    n = alpha.size
    if not N > n:
        raise DimensionError(f"need N > n, got N={N}, n={n}")
    row = np.concatenate([alpha[::-1], [1.0]])
    T = np.zeros((N - n, N), dtype=np.result_type(alpha, float))
    for r in range(N - n):
        T[r, r:r + n + 1] = row
    return T


def constraint_derivatives(n: int, N: int) -> list[np.ndarray]:
    """dT/dalpha_i, i = 1..n (T is affine in alpha)."""
    out = []
    for i in range(1, n + 1):
        D = np.zeros((N - n, N))
        for r in range(N - n):
            D[r, r + n - i] = 1.0
        out.append(D)
    return out


def _split(problem: RealizationProblem, z):
    N, n = problem.N, problem.n
    return z[:N], z[N:2 * N - n], z[2 * N - n:]


def kkt_system(problem: RealizationProblem, alpha, y_hat, v):
    """KKT residual and its (symmetric) Jacobian in z = (yhat, v, alpha).

    Blocks: yhat - y + T^T v;  T yhat;  v^T (dT/dalpha_i) yhat.
    """
    N, n = problem.N, problem.n
    alpha = np.asarray(alpha)
    y_hat = np.asarray(y_hat)
    v = np.asarray(v)
    T = constraint_matrix(alpha, N)
    dT = constraint_derivatives(n, N)
    ra = y_hat - problem.y + T.T @ v
    rb = T @ y_hat
    rc = np.array([v @ D @ y_hat for D in dT])
    F = np.concatenate([ra, rb, rc])

    dtype = np.result_type(alpha, y_hat, v, float)
    J = np.zeros((problem.size, problem.size), dtype=dtype)
    iy, iv, ia = slice(0, N), slice(N, 2 * N - n), slice(2 * N - n, None)
    J[iy, iy] = np.eye(N)
    J[iy, iv] = T.T
    J[iv, iy] = T
    Ca = np.column_stack([D.T @ v for D in dT])
    Cb = np.column_stack([D @ y_hat for D in dT])
    J[iy, ia] = Ca
    J[iv, ia] = Cb
    J[ia, iy] = Ca.T
    J[ia, iv] = Cb.T
    return F, J


def _kkt_matrix(T):
    N = T.shape[1]
    p = T.shape[0]
    K = np.zeros((N + p, N + p), dtype=T.dtype)
    K[:N, :N] = np.eye(N)
    K[:N, N:] = T.T
    K[N:, :N] = T
    return K


def initial_state(problem: RealizationProblem, alpha):
    """(yhat, v) solving the first two KKT blocks at fixed alpha.

    This is the projection of y onto the null space of T(alpha).
    """
    T = constraint_matrix(alpha, problem.N)
    K = _kkt_matrix(T)
    rhs = np.concatenate([problem.y, np.zeros(T.shape[0])]).astype(K.dtype)
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:problem.N], sol[problem.N:]


def newton_kkt(problem: RealizationProblem, alpha0, max_iter: int = 60, tol: float | None = None):
    """Newton on the KKT system from alpha0.

    Returns ``(alpha, yhat, v, ||F||, iterations, converged)``.
    """
    if tol is None:
        tol = 1e-12 * (1.0 + np.linalg.norm(problem.y))
    alpha = np.asarray(alpha0).copy()
    y_hat, v = initial_state(problem, alpha)
    z = np.concatenate([y_hat, v, alpha])
    nf = math.inf
    for it in range(max_iter + 1):
        y_hat, v, alpha = _split(problem, z)
        F, J = kkt_system(problem, alpha, y_hat, v)
        nf = float(np.linalg.norm(F))
        if not np.isfinite(nf):
            return alpha, y_hat, v, nf, it, False
        if nf <= tol:
            return alpha, y_hat, v, nf, it, True
        if it == max_iter:
            break
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(J, -F, rcond=None)[0]
        z = z + step
        if np.max(np.abs(z[-problem.n:])) > 1e8:
            return alpha, y_hat, v, nf, it, False
    return alpha, y_hat, v, nf, max_iter, False


def reduced_hessian(problem: RealizationProblem, alpha, y_hat, v) -> np.ndarray:
    """Hessian of phi(alpha) at a stationary point: -C^T K^{-1} C.

    K = [[I, T^T], [T, 0]] is the KKT matrix in (yhat, v) and column i of
    C is the derivative of the first two KKT blocks with respect to
    alpha_i.  phi is 1/2 the squared misfit.
    """
    T = constraint_matrix(alpha, problem.N)
    K = _kkt_matrix(T)
    dT = constraint_derivatives(problem.n, problem.N)
    C = np.vstack([
        np.column_stack([D.T @ v for D in dT]),
        np.column_stack([D @ y_hat for D in dT]),
    ])
    H = -C.T @ np.linalg.solve(K, C)
    return 0.5 * (H + H.T)


def classify_hessian(H, scale: float = 1.0, tol: float = DEGENERATE_TOL):
    """('minimum' | 'maximum' | 'saddle', eigenvalues, degenerate flag)."""
    ev = np.linalg.eigvalsh(np.atleast_2d(H))
    degenerate = bool(np.any(np.abs(ev) <= tol * max(scale, np.abs(ev).max(initial=0.0))))
    if np.all(ev > 0):
        kind = "minimum"
    elif np.all(ev < 0):
        kind = "maximum"
    else:
        kind = "saddle"
    return kind, ev, degenerate


def classify(problem: RealizationProblem, point: StationaryPoint) -> str:
    """Type of a stationary point from the reduced cost Hessian.

    Sets ``point.hessian_eigenvalues`` and ``point.degenerate`` as a side
    effect; a degenerate point keeps the sign pattern of its eigenvalues
    but should not be trusted.
    """
    H = reduced_hessian(problem, point.alpha, point.y_hat, point.v)
    kind, ev, deg = classify_hessian(H, scale=1.0 + problem.y @ problem.y)
    point.hessian_eigenvalues = ev
    point.degenerate = deg
    point.type = kind
    return kind


def _seeds(box, n, grid: int, random: int, rng):
    pairs = [(box[2 * i], box[2 * i + 1]) for i in range(n)]
    axes = [np.linspace(a, b, grid) for a, b in pairs]
    mesh = np.meshgrid(*axes, indexing="ij")
    seeds = np.stack([g.ravel() for g in mesh], axis=1)
    lo = np.array([a for a, _ in pairs])
    hi = np.array([b for _, b in pairs])
    extra = lo + (hi - lo) * rng.uniform(size=(random, n))
    return pairs, np.vstack([seeds, extra])


def find_stationary_points(
    problem: RealizationProblem,
    box: Sequence[float] | None = None,
    grid: int = 21,
    random: int = 100,
    rng=0,
    dedup_tol: float = 1e-6,
    complex_mode: bool = False,
) -> list[StationaryPoint]:
    """All stationary points reachable by multistart Newton inside ``box``.

    ``box`` is flat (a1, b1, a2, b2, ...), default [-10, 10]^n.  Seeds are
    a ``grid``^n tensor grid plus ``random`` uniform draws.  With
    ``complex_mode`` the seeds get small imaginary parts and complex
    stationary points are kept (real parts must lie in the box).
    Results are sorted by cost, then alpha.
    """
    n = problem.n
    if box is None:
        box = [-10.0, 10.0] * n
    box = [float(b) for b in box]
    if len(box) != 2 * n:
        raise DimensionError(f"box needs {2 * n} bounds")
    gen = np.random.default_rng(rng)
    pairs, seeds = _seeds(box, n, grid, random, gen)
    if complex_mode:
        seeds = seeds + 1j * gen.uniform(-1, 1, size=seeds.shape)
    tol = KKT_TOL * (1.0 + np.linalg.norm(problem.y))
    found: list[StationaryPoint] = []
    for s in seeds:
        alpha, y_hat, v, res, its, ok = newton_kkt(problem, s)
        if not ok or res > tol:
            continue
        if not complex_mode:
            alpha, y_hat, v = alpha.real, y_hat.real, v.real
        inside = all(a <= z.real <= b for (a, b), z in zip(pairs, alpha))
        if not inside:
            continue
        if any(np.max(np.abs(alpha - p.alpha)) <= dedup_tol for p in found):
            continue
        misfit = float(np.linalg.norm(y_hat - problem.y))
        pt = StationaryPoint(
            alpha=alpha, y_hat=y_hat, v=v,
            cost=misfit**2, misfit=misfit, type="",
            kkt_residual=res, iterations=its,
        )
        if complex_mode and np.any(np.abs(alpha.imag) > dedup_tol):
            pt.type = "complex"
        else:
            if complex_mode:
                pt.alpha, pt.y_hat, pt.v = alpha.real, y_hat.real, v.real
            classify(problem, pt)
        found.append(pt)
    found.sort(key=lambda p: (round(p.cost, 9), tuple(np.round(p.alpha.real, 9))))
    return found


def conditioning_probe(
    points: Sequence[StationaryPoint],
    pencil,
    model=None,
    to_lambda: Callable | None = None,
) -> list[dict]:
    """Backward error and condition number of each point's alpha in ``pencil``.

    ``to_lambda`` maps alpha to the pencil's eigenvalue tuple (identity by
    default).  Points where the pencil refuses (not an eigenvalue, not
    simple) are reported with ``kappa = None`` and the reason.
    """
    from .backward import eigenvalue_backward_error
    from .conditioning import eigenvalue_condition
    from .errors import MpspecError
    from .pencil import PerturbationModel

    if model is None:
        model = PerturbationModel.relative(pencil)
    rows = []
    for p in points:
        lam = p.alpha if to_lambda is None else to_lambda(p.alpha)
        row = {"alpha": np.asarray(p.alpha).tolist(), "type": p.type}
        try:
            row["eta"] = eigenvalue_backward_error(pencil, model, lam)
        except MpspecError as exc:
            row["eta"] = None
            row["reason"] = str(exc)
        try:
            row["kappa"] = eigenvalue_condition(pencil, model, lam).kappa
        except (MpspecError, np.linalg.LinAlgError) as exc:
            row["kappa"] = None
            row["reason"] = str(exc)
        rows.append(row)
    return rows
