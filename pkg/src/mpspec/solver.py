"""Grid seeding plus Gauss-Newton refinement for small rMEPs.

Seeds are strict local minima of the backward eigenvalue error on a grid;
each is polished by Gauss-Newton on the square-plus-one system

    F(lam, x) = [ M(lam) x ; c^H x - 1 ] = 0

in the unknowns (lam, x), with c frozen at the seed.  Survivors are
deduplicated and must pass both spectrum oracles: all secular
determinants vanish, and sigma_min(M(lam)) vanishes.
"""

from __future__ import annotations

import logging
import math
from typing import Sequence

import numpy as np

from .backward import smallest_singular_triplet
from .conditioning import eigen_left_basis
from .errors import ConvergenceError, DimensionError, NotSimpleError
from .pencil import (
    Eigenpair,
    MultiParamPencil,
    PerturbationModel,
    enumerate_selections,
    evaluate,
    partial_derivative,
    secular_value,
)
from .pseudospectrum import Axis, GridSpec, PseudospectrumField, field

log = logging.getLogger(__name__)

__all__ = [
    "seed_candidates",
    "refine",
    "solve_all",
    "verify_spectrum",
    "secular_test",
    "sigma_test",
    "parse_box",
]

MAX_ITER = 100
SPECTRUM_TOL = 1e-8


def seed_candidates(fld: PseudospectrumField, top: int | None = None) -> list[np.ndarray]:
    """Strict local minima of the field, lowest eta first.

    A node qualifies when its value is strictly below every neighbour in
    the full 3^d stencil (edges compare only with existing neighbours).
    """
    vals = np.asarray(fld.values, dtype=float)
    d = vals.ndim
    padded = np.pad(vals, 1, mode="constant", constant_values=np.inf)
    strict = np.ones(vals.shape, dtype=bool)
    for off in np.ndindex(*([3] * d)):
        if all(o == 1 for o in off):
            continue
        sl = tuple(slice(o, o + n) for o, n in zip(off, vals.shape))
        strict &= vals < padded[sl]
    idx = np.argwhere(strict)
    order = np.argsort(vals[strict], kind="stable")
    nodes = fld.nodes().reshape(*fld.grid.flat_shape, fld.grid.m)
    nodes = nodes.reshape(*vals.shape, fld.grid.m)
    seeds = [nodes[tuple(idx[i])] for i in order]
    if top is not None:
        seeds = seeds[:top]
    return seeds


def _jacobian(pencil, lam, x, c):
    k, l = pencil.shape  # noqa: E741
    a = evaluate(pencil, lam)
    cols = [partial_derivative(pencil, lam, j) @ x for j in range(pencil.m)]
    top = np.hstack([a, np.column_stack(cols)])
    bottom = np.concatenate([c.conj(), np.zeros(pencil.m)])[None, :]
    return np.vstack([top, bottom]), a


def refine(
    pencil: MultiParamPencil,
    seed,
    x0=None,
    c=None,
    max_iter: int = MAX_ITER,
    tol: float | None = None,
) -> Eigenpair:
    """Gauss-Newton polish of an approximate eigenvalue ``seed``.

    The normalization vector c defaults to the right singular vector of
    M(seed) for sigma_min and is kept fixed.  Iterates are accepted once
    ||F|| <= 1e-12 (1 + ||pencil||); two further steps are taken if they
    keep decreasing the residual.  ``history`` holds (lam, ||F||) pairs.
    """
    if not pencil.is_standard_shape:
        raise DimensionError("refinement needs a pencil with k = l + m - 1")
    lam = np.atleast_1d(np.asarray(seed, dtype=complex)).copy()
    if lam.shape != (pencil.m,):
        raise DimensionError(f"seed needs {pencil.m} entries")
    if x0 is None or c is None:
        _, _, v = smallest_singular_triplet(evaluate(pencil, lam))
        x0 = v if x0 is None else x0
        c = v if c is None else c
    c = np.asarray(c, dtype=complex)
    x = np.asarray(x0, dtype=complex)
    x = x / (c.conj() @ x)
    if tol is None:
        tol = 1e-12 * (1.0 + pencil.scale())
    real = pencil.is_real and np.all(lam.imag == 0) and np.all(c.imag == 0)

    def resid(lam_, x_):
        return np.concatenate([evaluate(pencil, lam_) @ x_, [c.conj() @ x_ - 1.0]])

    F = resid(lam, x)
    history = [(lam.copy(), float(np.linalg.norm(F)))]
    for it in range(1, max_iter + 1):
        if history[-1][1] <= tol:
            # exact start or converged: a couple of cheap polishing steps
            break
        J, _ = _jacobian(pencil, lam, x, c)
        s = np.linalg.svd(J, compute_uv=False)
        if s[-1] <= 1e-14 * s[0]:
            raise NotSimpleError(
                f"Gauss-Newton Jacobian is rank deficient at iterate {it} (lambda={lam})"
            )
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        x = x + step[: pencil.l]
        lam = lam + step[pencil.l:]
        if real:
            x, lam = x.real.astype(complex), lam.real.astype(complex)
        F = resid(lam, x)
        history.append((lam.copy(), float(np.linalg.norm(F))))
        if not np.all(np.isfinite(F)):
            raise ConvergenceError("Gauss-Newton diverged", it, math.inf)
    else:
        raise ConvergenceError(
            f"no convergence in {max_iter} Gauss-Newton steps", max_iter, history[-1][1]
        )
    iterations = len(history) - 1
    # polishing: keep stepping while the residual decreases
    for _ in range(2):
        J, _ = _jacobian(pencil, lam, x, c)
        step = np.linalg.lstsq(J, -F, rcond=None)[0]
        x2, lam2 = x + step[: pencil.l], lam + step[pencil.l:]
        if real:
            x2, lam2 = x2.real.astype(complex), lam2.real.astype(complex)
        F2 = resid(lam2, x2)
        if not np.linalg.norm(F2) < np.linalg.norm(F):
            break
        x, lam, F = x2, lam2, F2
    return Eigenpair.normalized(lam, x, iterations=iterations, history=tuple(history))


def secular_test(pencil: MultiParamPencil, lam, tol: float = SPECTRUM_TOL) -> bool:
    """All secular determinants vanish, each relative to its Hadamard bound.

    The bound prod_i ||row_i|| of a selection is the local scale of its
    determinant, so the test is invariant under row scaling.
    """
    a = evaluate(pencil, lam)
    rn = np.linalg.norm(a, axis=1)
    for sel in enumerate_selections(pencil.k, pencil.l):
        scale = float(np.prod(rn[list(sel)]))
        if scale == 0:
            continue
        if abs(secular_value(pencil, sel, lam)) > tol * scale:
            return False
    return True


def sigma_test(pencil: MultiParamPencil, lam, tol: float = SPECTRUM_TOL) -> bool:
    """sigma_min(M(lam)) <= tol * ||M(lam)||."""
    s = np.linalg.svd(evaluate(pencil, lam), compute_uv=False)
    return bool(s[-1] <= tol * max(s[0], np.finfo(float).tiny))


def verify_spectrum(pencil: MultiParamPencil, lam, tol: float = SPECTRUM_TOL) -> bool:
    """Is ``lam`` an eigenvalue?  Both oracles must agree to say yes."""
    return secular_test(pencil, lam, tol) and sigma_test(pencil, lam, tol)


def parse_box(box) -> list[tuple[float, float]]:
    """'a1,b1,a2,b2,...' or a flat sequence into (a, b) pairs."""
    if isinstance(box, str):
        box = [float(t) for t in box.split(",")]
    box = list(box)
    if len(box) % 2:
        raise ValueError("box needs an even number of bounds")
    return [(float(box[i]), float(box[i + 1])) for i in range(0, len(box), 2)]


def _grid_for(pencil: MultiParamPencil, box, resolution, imag_box=None) -> GridSpec:
    pairs = parse_box(box)
    if len(pairs) != pencil.m:
        raise DimensionError(f"box has {len(pairs)} intervals, pencil has {pencil.m} parameters")
    res = [resolution] * pencil.m if np.isscalar(resolution) else list(resolution)
    axes = []
    for j, (a, b) in enumerate(pairs):
        if imag_box is None:
            axes.append(Axis.real(a, b, res[j]))
        else:
            c, d = parse_box(imag_box)[j]
            axes.append(Axis.complex_box(a, b, c, d, res[j], res[j]))
    return GridSpec(tuple(axes))


def solve_all(
    pencil: MultiParamPencil,
    box,
    resolution=101,
    imag_box=None,
    dedup_tol: float = 1e-8,
    top: int | None = None,
    method: str = "naive",
    threads: int = 1,
) -> list[Eigenpair]:
    """All eigenvalues reachable from grid seeds inside ``box``.

    Seeds that fail to refine, land outside the box (with one grid cell
    of slack) or fail an oracle are dropped with a log message.  Results
    are sorted lexicographically by (Re, Im) of lam.
    """
    if not pencil.is_standard_shape:
        raise DimensionError("solve_all needs a pencil with k = l + m - 1")
    grid = _grid_for(pencil, box, resolution, imag_box)
    fld = field(pencil, PerturbationModel.relative(pencil), grid, method=method, threads=threads)
    seeds = seed_candidates(fld, top)
    pairs = parse_box(box)
    res = [resolution] * pencil.m if np.isscalar(resolution) else list(resolution)
    slack = [(b - a) / (n - 1) for (a, b), n in zip(pairs, res)]
    found: list[Eigenpair] = []
    for seed in seeds:
        try:
            ep = refine(pencil, seed)
        except (ConvergenceError, NotSimpleError) as exc:
            log.info("seed %s dropped: %s", seed, exc)
            continue
        lam = ep.lam
        inside = all(
            a - s <= z.real <= b + s for (a, b), s, z in zip(pairs, slack, lam)
        )
        if not inside:
            log.info("seed %s converged outside the box to %s", seed, lam)
            continue
        if any(np.max(np.abs(lam - f.lam)) <= dedup_tol for f in found):
            continue
        if not verify_spectrum(pencil, lam):
            log.info("candidate %s rejected by the spectrum oracles", lam)
            continue
        try:
            eigen_left_basis(pencil, lam)
        except NotSimpleError as exc:
            log.info("candidate %s is not simple: %s", lam, exc)
            continue
        found.append(ep)
    found.sort(key=lambda e: tuple(v for z in e.lam for v in (round(z.real, 12), round(z.imag, 12))))
    return found


def eigenvalues_only(pairs: Sequence[Eigenpair]) -> np.ndarray:
    return np.array([p.lam for p in pairs])
