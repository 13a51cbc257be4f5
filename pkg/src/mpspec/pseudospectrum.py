"""Pseudospectrum fields of rectangular multiparameter pencils.

A point lam belongs to the eps-pseudospectrum iff sigma_min(M(lam)) <= eps
gamma(lam), i.e. iff its backward eigenvalue error is at most eps.  Fields
are computed on tensor grids, either by a dense SVD per node (``naive``)
or slice by slice: all parameters but one are fixed, the resulting
one-parameter pencil S0 + mu S1 is reduced once by unitary transformations
and each node then only needs a cheap structured QR followed by inverse
iteration on R^H R.

* slightly tall (k < 2l): the lower l x l blocks of S0 and S1 are brought
  to Hessenberg-triangular form, leaving a matrix with lower bandwidth
  k - l + 1 whose QR costs O((k - l) l^2).
* very tall (k >= 2l): S1 is QR-factorized once, and per slice the lower
  rows of Q^H S0 are QR-factorized, giving a 2l x l pencil.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations, product
from typing import Sequence

import numpy as np

from .backward import attaining_perturbations, smallest_singular_triplet
from .errors import DimensionError
from .pencil import (
    MultiParamPencil,
    PerturbationModel,
    enumerate_selections,
    evaluate,
    gamma,
)

log = logging.getLogger(__name__)

__all__ = [
    "Axis",
    "GridSpec",
    "Telemetry",
    "PseudospectrumField",
    "ReducedSlice",
    "field",
    "membership",
    "membership_tests",
    "preprocess_very_tall",
    "preprocess_slightly_tall",
    "sigma_min_point",
    "submatrix_bound_check",
    "right_definiteness",
    "delta0",
    "hessenberg_triangular",
    "banded_qr_r",
]


# --------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Axis:
    """One parameter axis: a fixed value, a real interval or a complex box."""

    kind: str
    values: tuple

    @classmethod
    def fixed(cls, value) -> "Axis":
        return cls("fixed", (complex(value),))

    @classmethod
    def real(cls, a: float, b: float, n: int) -> "Axis":
        return cls("real", (float(a), float(b), int(n)))

    @classmethod
    def complex_box(cls, a, b, c, d, nre: int, nim: int) -> "Axis":
        return cls("complex", (float(a), float(b), float(c), float(d), int(nre), int(nim)))

    def validate(self):
        if self.kind == "fixed":
            return
        if self.kind == "real":
            a, b, n = self.values
            if not a < b or n < 2:
                raise ValueError(f"invalid real axis {self.values}")
        elif self.kind == "complex":
            a, b, c, d, nre, nim = self.values
            if not (a < b and c < d) or nre < 2 or nim < 2:
                raise ValueError(f"invalid complex axis {self.values}")
        else:
            raise ValueError(f"unknown axis kind {self.kind!r}")

    @property
    def swept(self) -> bool:
        return self.kind != "fixed"

    @property
    def dims(self) -> tuple[int, ...]:
        """Array dimensions this axis contributes to the field."""
        if self.kind == "fixed":
            return (1,)
        if self.kind == "real":
            return (self.values[2],)
        return (self.values[4], self.values[5])

    def points(self) -> np.ndarray:
        """Flattened complex node values (real part major for boxes)."""
        if self.kind == "fixed":
            return np.array(self.values, dtype=complex)
        if self.kind == "real":
            a, b, n = self.values
            return np.linspace(a, b, n).astype(complex)
        a, b, c, d, nre, nim = self.values
        re, im = np.meshgrid(np.linspace(a, b, nre), np.linspace(c, d, nim), indexing="ij")
        return (re + 1j * im).ravel()

    def to_dict(self) -> dict:
        if self.kind == "fixed":
            z = self.values[0]
            return {"fixed": [z.real, z.imag]}
        if self.kind == "real":
            return {"real": list(self.values)}
        return {"complex": list(self.values)}

    @classmethod
    def from_dict(cls, d: dict) -> "Axis":
        if "fixed" in d:
            v = d["fixed"]
            z = complex(v[0], v[1]) if isinstance(v, list) else complex(v)
            return cls.fixed(z)
        if "real" in d:
            return cls.real(*d["real"])
        if "complex" in d:
            return cls.complex_box(*d["complex"])
        raise ValueError(f"unknown axis description {d!r}")


@dataclass(frozen=True)
class GridSpec:
    axes: tuple

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        for ax in self.axes:
            ax.validate()
        if not any(ax.swept for ax in self.axes):
            raise ValueError("grid needs at least one swept axis")

    @classmethod
    def real_box(cls, bounds: Sequence[float], n) -> "GridSpec":
        """Real tensor grid from flat bounds (a1, b1, a2, b2, ...)."""
        bounds = list(bounds)
        m = len(bounds) // 2
        ns = [n] * m if np.isscalar(n) else list(n)
        return cls(tuple(Axis.real(bounds[2 * i], bounds[2 * i + 1], ns[i]) for i in range(m)))

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(tuple(Axis.from_dict(a) for a in d["axes"]))

    def to_dict(self) -> dict:
        return {"axes": [a.to_dict() for a in self.axes]}

    @property
    def m(self) -> int:
        return len(self.axes)

    @property
    def points(self) -> list[np.ndarray]:
        return [a.points() for a in self.axes]

    @property
    def flat_shape(self) -> tuple[int, ...]:
        return tuple(len(p) for p in self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        """Field array shape; fixed axes are squeezed out."""
        dims = []
        for a in self.axes:
            if a.swept:
                dims.extend(a.dims)
        return tuple(dims)

    @property
    def free_axis(self) -> int:
        """Index of the parameter swept inside each slice (last swept axis)."""
        return max(i for i, a in enumerate(self.axes) if a.swept)

    def real_plane(self):
        """(x, y, transpose) coordinates when the field is 2-D and real-valued.

        Either two real axes, or one complex box (real part vs imaginary
        part) with every other axis fixed.
        """
        swept = [i for i, a in enumerate(self.axes) if a.swept]
        if len(swept) == 2 and all(self.axes[i].kind == "real" for i in swept):
            return self.axes[swept[0]].points().real, self.axes[swept[1]].points().real, swept
        if len(swept) == 1 and self.axes[swept[0]].kind == "complex":
            a, b, c, d, nre, nim = self.axes[swept[0]].values
            return np.linspace(a, b, nre), np.linspace(c, d, nim), swept
        raise DimensionError("field is not two-dimensional in real coordinates")


# --------------------------------------------------------------------------
# telemetry and reduced slices


@dataclass
class Telemetry:
    """Operation counters for the pseudospectrum sweeps.

    ``*_flops`` are operation counts of the structured kernels as they
    are executed (dense LAPACK calls are charged with textbook counts),
    rounded to integers so that totals do not depend on summation order.
    """

    slices: int = 0
    global_reductions: int = 0
    reductions: int = 0
    point_qr: int = 0
    inverse_iterations: int = 0
    fallbacks: int = 0
    dense_svds: int = 0
    reduction_flops: int = 0
    point_qr_flops: int = 0
    iteration_flops: int = 0

    @property
    def point_flops(self) -> int:
        return self.point_qr_flops + self.iteration_flops

    def merge(self, other: "Telemetry"):
        for name in self.__dataclass_fields__:
            setattr(self, name, getattr(self, name) + getattr(other, name))

    def as_dict(self) -> dict:
        out = {name: getattr(self, name) for name in self.__dataclass_fields__}
        out["point_flops"] = self.point_flops
        return out


def dense_svd_flops(k: int, l: int) -> float:  # noqa: E741
    """Golub-Kahan bidiagonalization count for singular values only."""
    return 4.0 * k * l * l - 4.0 * l**3 / 3.0


@dataclass
class ReducedSlice:
    """One-parameter pencil ``A + mu B`` after unitary reduction.

    ``lower_bw`` is the lower bandwidth of ``A + mu B`` (entries (i, j)
    with i - j > lower_bw vanish); ``None`` means dense.
    """

    A: np.ndarray
    B: np.ndarray
    lower_bw: int | None
    kind: str

    def matrix(self, mu) -> np.ndarray:
        return self.A + mu * self.B


def _slice_pencil(pencil: MultiParamPencil, fixed, free: int):
    """Split M(lam) = S0 + mu S1 in the free parameter at the fixed values.

    Built term by term, so S1 of a linear pencil is exactly the free
    coefficient whatever the fixed values are.
    """
    if pencil.degree_in(free) > 1:
        raise DimensionError("slicing needs a pencil affine in the free parameter")
    lam = np.array(fixed, dtype=complex)
    parts = [np.zeros(pencil.shape, dtype=complex), np.zeros(pencil.shape, dtype=complex)]
    for e, c in zip(pencil.exponents, pencil.coeffs):
        others = np.delete(lam, free) ** np.delete(e, free)
        parts[e[free]] = parts[e[free]] + np.prod(others) * c
    return parts[0], parts[1]


def _full_fixed(pencil, fixed, free):
    fixed = list(np.atleast_1d(np.asarray(fixed, dtype=complex)))
    if len(fixed) == pencil.m - 1:
        fixed.insert(free, 0.0)
    if len(fixed) != pencil.m:
        raise DimensionError("need values for the m - 1 fixed parameters")
    return fixed


def _givens(a: complex, b: complex):
    """Unitary G (2x2) with G @ [a, b] = [r, 0]."""
    r = math.hypot(abs(a), abs(b))
    if r == 0:
        return np.eye(2, dtype=complex)
    c, s = a / r, b / r
    return np.array([[np.conj(c), np.conj(s)], [-s, c]])


def hessenberg_triangular(a: np.ndarray, b: np.ndarray):
    """Unitary Q, Z with Q^H a Z upper Hessenberg and Q^H b Z upper triangular.

    Finite Givens-based reduction (no QZ iterations).  Returns
    ``(H, T, Q, Z)``.
    """
    a = np.array(a, dtype=complex)
    b = np.array(b, dtype=complex)
    n = a.shape[0]
    q, r = np.linalg.qr(b)
    b = r
    a = q.conj().T @ a
    Q = q
    Z = np.eye(n, dtype=complex)
    for j in range(n - 2):
        for i in range(n - 1, j + 1, -1):
            # zero a[i, j] with a row rotation on rows i-1, i
            G = _givens(a[i - 1, j], a[i, j])
            a[i - 1:i + 1, :] = G @ a[i - 1:i + 1, :]
            b[i - 1:i + 1, :] = G @ b[i - 1:i + 1, :]
            Q[:, i - 1:i + 1] = Q[:, i - 1:i + 1] @ G.conj().T
            # restore triangularity of b with a column rotation on i-1, i
            H = _givens(b[i, i], b[i, i - 1])
            Hc = H.T  # right multiplication acting on columns (i, i-1)
            cols = [i, i - 1]
            a[:, cols] = a[:, cols] @ Hc
            b[:, cols] = b[:, cols] @ Hc
            Z[:, cols] = Z[:, cols] @ Hc
            b[i, i - 1] = 0.0
    return a, b, Q, Z


def hessenberg_triangular_flops(n: int) -> float:
    """Operation count of :func:`hessenberg_triangular` (QR of b plus rotations).

    Each of the (n-1)(n-2)/2 rotation pairs updates two rows of a and b,
    two columns of a and b, and two columns of Q and Z: 6 flops per
    entry pair and 6 matrix strips of length n.
    """
    return 4.0 * n**3 / 3.0 + 2.0 * n**3 + (n - 1) * (n - 2) / 2.0 * 2 * 6 * 6.0 * n


def preprocess_slightly_tall(
    pencil: MultiParamPencil, fixed, free: int, telemetry: Telemetry | None = None
) -> ReducedSlice:
    """Reduce a slice with k < 2l to a pencil of lower bandwidth k - l + 1.

    The lower l x l blocks of S0 and S1 go to Hessenberg-triangular form
    by Q^H (.) Z; the top k - l rows are only multiplied by Z.
    """
    k, l = pencil.shape  # noqa: E741
    if not k < 2 * l:
        raise DimensionError("slightly tall reduction needs k < 2l")
    fixed = _full_fixed(pencil, fixed, free)
    s0, s1 = _slice_pencil(pencil, fixed, free)
    d = k - l
    H, T, Q, Z = hessenberg_triangular(s0[d:], s1[d:])
    A = np.vstack([s0[:d] @ Z, H])
    B = np.vstack([s1[:d] @ Z, T])
    if telemetry is not None:
        telemetry.reductions += 1
        telemetry.reduction_flops += round(hessenberg_triangular_flops(l) + 4.0 * d * l * l)
    return ReducedSlice(A, B, d + 1, "slightly_tall")


@dataclass
class _GlobalQR:
    q: np.ndarray  # k x l, orthonormal columns
    r: np.ndarray  # l x l upper triangular


def _free_qr(pencil, fixed, free, telemetry, cache):
    _, s1 = _slice_pencil(pencil, fixed, free)
    key = s1.tobytes()
    if cache is not None and cache.get("key") == key:
        return cache["qr"]
    q, r = np.linalg.qr(s1)
    out = _GlobalQR(q, r)
    if telemetry is not None:
        k, l = s1.shape  # noqa: E741
        telemetry.global_reductions += 1
        telemetry.reduction_flops += round(2.0 * k * l * l - 2.0 * l**3 / 3.0)
    if cache is not None:
        cache["key"] = key
        cache["qr"] = out
    return out


def preprocess_very_tall(
    pencil: MultiParamPencil,
    fixed,
    free: int,
    telemetry: Telemetry | None = None,
    cache: dict | None = None,
) -> ReducedSlice:
    """Reduce a slice with k >= 2l to an equivalent 2l x l pencil.

    S1 = Q R is factorized once (reused through ``cache`` while S1 stays
    the same).  Per slice, the top block is Q^H S0 and the lower rows of
    the full transformation are replaced by the R factor of
    (I - Q Q^H) S0, which has the same Gram matrix; the result is
    [[T0 + mu R1], [R2]] with R1, R2 upper triangular.
    """
    k, l = pencil.shape  # noqa: E741
    if k < 2 * l:
        raise DimensionError("very tall reduction needs k >= 2l")
    fixed = _full_fixed(pencil, fixed, free)
    s0, _ = _slice_pencil(pencil, fixed, free)
    g = _free_qr(pencil, fixed, free, telemetry, cache)
    top = g.q.conj().T @ s0
    r2 = np.linalg.qr(s0 - g.q @ top, mode="r")
    A = np.vstack([top, r2])
    B = np.vstack([g.r, np.zeros((l, l), dtype=complex)])
    if telemetry is not None:
        telemetry.reductions += 1
        telemetry.reduction_flops += round(4.0 * k * l * l + 2.0 * k * l * l - 2.0 * l**3 / 3.0)
    return ReducedSlice(A, B, None, "very_tall")


def banded_qr_r(a: np.ndarray, lower_bw: int | None):
    """R factor of a k x l matrix with the given lower bandwidth.

    Householder reflections touch only the rows inside the band.  Returns
    ``(R, flops)`` where R is l x l upper triangular.
    """
    a = np.array(a, dtype=complex)
    k, l = a.shape  # noqa: E741
    bw = k if lower_bw is None else lower_bw
    flops = 0.0
    for j in range(l):
        hi = min(k, j + bw + 1)
        v = a[j:hi, j].copy()
        alpha = np.linalg.norm(v)
        if alpha == 0:
            continue
        phase = v[0] / abs(v[0]) if v[0] != 0 else 1.0
        v[0] += phase * alpha
        v /= np.linalg.norm(v)
        blk = a[j:hi, j:]
        blk -= 2.0 * np.outer(v, v.conj() @ blk)
        a[j:hi, j:] = blk
        flops += 4.0 * (hi - j) * (l - j)
    return np.triu(a[:l]), flops


def _tri_solve(r, b, lower):
    from scipy.linalg import solve_triangular

    return solve_triangular(r, b, lower=lower, check_finite=False)


@lru_cache(maxsize=64)
def _start_vector_cached(l: int) -> bytes:  # noqa: E741
    # fixed generic vector: a structured start such as ones(l) can be
    # exactly orthogonal to the wanted singular vector
    g = np.random.default_rng(20240917 + l)
    x = g.standard_normal(l) + 1j * g.standard_normal(l)
    return (x / np.linalg.norm(x)).tobytes()


def _start_vector(l: int) -> np.ndarray:  # noqa: E741
    return np.frombuffer(_start_vector_cached(l), dtype=complex).copy()


def _inverse_iteration(r: np.ndarray, maxit: int = 200, rtol: float = 1e-13):
    """Smallest singular value of triangular ``r`` by inverse iteration on R^H R.

    Returns ``(sigma, iterations, converged)``.
    """
    l = r.shape[0]  # noqa: E741
    diag = np.abs(np.diag(r))
    if diag.min() == 0:
        return 0.0, 0, True
    x = _start_vector(l)
    sigma_old = None
    stable = 0
    for it in range(1, maxit + 1):
        y = _tri_solve(r.conj().T, x, lower=True)
        z = _tri_solve(r, y, lower=False)
        nz = np.linalg.norm(z)
        if not np.isfinite(nz) or nz == 0:
            return 0.0, it, True
        x = z / nz
        sigma = float(np.linalg.norm(r @ x))
        if sigma_old is not None and abs(sigma - sigma_old) <= rtol * sigma:
            stable += 1
            if stable >= 2:
                return sigma, it, True
        else:
            stable = 0
        sigma_old = sigma
    return sigma_old, maxit, False


def sigma_min_point(
    reduced: ReducedSlice, mu, telemetry: Telemetry | None = None
) -> float:
    """sigma_min of the reduced slice pencil at ``mu``.

    Structured QR, then inverse iteration on R^H R; falls back to a dense
    SVD when the iteration stagnates.
    """
    a = reduced.matrix(mu)
    k, l = a.shape  # noqa: E741
    if not np.any(a):
        return 0.0
    r, flops = banded_qr_r(a, reduced.lower_bw)
    sigma, its, ok = _inverse_iteration(r)
    if telemetry is not None:
        telemetry.point_qr += 1
        telemetry.inverse_iterations += its
        telemetry.point_qr_flops += round(flops)
        telemetry.iteration_flops += round(its * 4.0 * l * l)
    if not ok:
        if telemetry is not None:
            telemetry.fallbacks += 1
            telemetry.dense_svds += 1
        log.debug("inverse iteration stagnated at mu=%s; dense SVD fallback", mu)
        sigma = float(np.linalg.svd(a, compute_uv=False)[-1])
    return sigma


# --------------------------------------------------------------------------
# fields


@dataclass
class PseudospectrumField:
    grid: GridSpec
    values: np.ndarray
    method: str
    model: PerturbationModel
    sigma_min: np.ndarray = field(repr=False, default=None)
    telemetry: Telemetry = field(default_factory=Telemetry)

    def member(self, eps: float) -> np.ndarray:
        return self.values <= eps

    def nodes(self) -> np.ndarray:
        """(n_nodes, m) complex array of grid nodes in field order."""
        pts = self.grid.points
        mesh = np.meshgrid(*pts, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=1)


def _choose_method(pencil: MultiParamPencil, method: str) -> str:
    if method in ("naive", "slightly_tall", "very_tall"):
        return method
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if not pencil.is_linear:
        return "naive"
    return "very_tall" if pencil.k >= 2 * pencil.l else "slightly_tall"


def _slice_values(pencil, model, grid, method, idx, tel, cache):
    """sigma_min and eta along the free axis for one slice multi-index."""
    pts = grid.points
    free = grid.free_axis
    fixed = [pts[i][j] if i != free else 0.0 for i, j in enumerate(idx)]
    mus = pts[free]
    sig = np.empty(len(mus))
    eta = np.empty(len(mus))
    tel.slices += 1
    if method == "naive":
        for n, mu in enumerate(mus):
            lam = np.array(fixed, dtype=complex)
            lam[free] = mu
            sig[n] = np.linalg.svd(evaluate(pencil, lam), compute_uv=False)[-1]
            tel.dense_svds += 1
            tel.point_qr_flops += round(dense_svd_flops(pencil.k, pencil.l))
    else:
        if method == "slightly_tall":
            red = preprocess_slightly_tall(pencil, fixed, free, tel)
        else:
            red = preprocess_very_tall(pencil, fixed, free, tel, cache)
        for n, mu in enumerate(mus):
            sig[n] = sigma_min_point(red, mu, tel)
    for n, mu in enumerate(mus):
        lam = np.array(fixed, dtype=complex)
        lam[free] = mu
        g = gamma(model, lam, pencil)
        eta[n] = 0.0 if sig[n] == 0 else (math.inf if g == 0 else sig[n] / g)
    return sig, eta


def field(
    pencil: MultiParamPencil,
    model: PerturbationModel,
    grid: GridSpec,
    method: str = "naive",
    threads: int = 1,
) -> PseudospectrumField:
    """eta(lam) = sigma_min(M(lam)) / gamma(lam) on every grid node.

    Slices are distributed over ``threads`` workers; each worker writes
    its own rows and keeps its own counters, so the result does not depend
    on the schedule.
    """
    if grid.m != pencil.m:
        raise DimensionError(f"grid has {grid.m} axes, pencil has {pencil.m} parameters")
    model.check(pencil)
    method = _choose_method(pencil, method)
    flat = grid.flat_shape
    free = grid.free_axis
    outer = [range(n) if i != free else range(1) for i, n in enumerate(flat)]
    slice_ids = list(product(*outer))
    sig = np.empty(flat)
    eta = np.empty(flat)

    # the free-parameter QR is shared read-only by all workers; a worker
    # only refactorizes (into its own copy) if S1 depends on the slice
    telemetry = Telemetry()
    shared: dict = {}
    if method == "very_tall":
        idx0 = slice_ids[0]
        pts = grid.points
        fixed0 = [pts[i][j] if i != free else 0.0 for i, j in enumerate(idx0)]
        _free_qr(pencil, fixed0, free, telemetry, shared)

    def work(chunk):
        tel = Telemetry()
        cache = dict(shared)
        out = []
        for idx in chunk:
            out.append((idx, *_slice_values(pencil, model, grid, method, idx, tel, cache)))
        return tel, out

    threads = max(1, int(threads))
    chunks = [slice_ids[i::threads] for i in range(threads)]
    if threads == 1:
        results = [work(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, chunks))
    for tel, out in results:
        telemetry.merge(tel)
        for idx, s, e in out:
            sl = tuple(slice(None) if i == free else j for i, j in enumerate(idx))
            sig[sl] = s
            eta[sl] = e
    return PseudospectrumField(
        grid=grid,
        values=eta.reshape(grid.shape),
        method=method,
        model=model,
        sigma_min=sig.reshape(grid.shape),
        telemetry=telemetry,
    )


# --------------------------------------------------------------------------
# membership


def membership(pencil: MultiParamPencil, model: PerturbationModel, lam, eps: float) -> bool:
    """Is ``lam`` in the eps-pseudospectrum (backward eigenvalue error <= eps)?"""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    smin = np.linalg.svd(evaluate(pencil, lam), compute_uv=False)[-1]
    return bool(smin <= eps * gamma(model, lam, pencil))


def membership_tests(pencil: MultiParamPencil, model: PerturbationModel, lam, eps: float):
    """The three equivalent membership tests, evaluated by separate routes.

    * witness: build the rank-one perturbations that make the minimizing
      vector exact and compare their weighted norms with eps;
    * sigma: sigma_min(M(lam)) <= eps gamma;
    * pinv: ||M(lam)^+|| >= 1 / (eps gamma).
    Returns ``(witness, sigma, pinv)``.
    """
    a = evaluate(pencil, lam)
    g = gamma(model, lam, pencil)
    smin, _, x = smallest_singular_triplet(a)
    sigma_test = bool(smin <= eps * g)

    deltas = attaining_perturbations(pencil, model, lam, x)
    ratios = [
        np.linalg.norm(d, 2) / w for d, w, mu in zip(deltas, model.weights, pencil.monomials(lam))
        if w > 0 and mu != 0
    ]
    witness = bool(max(ratios) <= eps) if ratios else bool(smin == 0)

    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] == 0:
        pinv_test = True
    else:
        pinv_norm = np.linalg.norm(np.linalg.pinv(a, rcond=0.0), 2)
        pinv_test = bool(eps * g > 0 and pinv_norm >= 1.0 / (eps * g))
    return witness, sigma_test, pinv_test


# --------------------------------------------------------------------------
# row-selection bounds and right definiteness


@dataclass
class SubmatrixReport:
    sigma_full: float
    sigma_selected: dict
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def submatrix_bound_check(
    pencil: MultiParamPencil, model: PerturbationModel, lam, eps: float | None = None,
    tol: float = 1e-12,
) -> SubmatrixReport:
    """Check sigma_min([M]_sel) <= sigma_min(M) for every row selection.

    With ``eps`` given, also checks that membership of M implies
    membership of every square sub-pencil (with the same gamma).
    """
    a = evaluate(pencil, lam)
    full = float(np.linalg.svd(a, compute_uv=False)[-1])
    scale = max(1.0, float(np.linalg.norm(a, 2)))
    sub = {}
    violations = []
    g = gamma(model, lam, pencil)
    for sel in enumerate_selections(pencil.k, pencil.l):
        s = float(np.linalg.svd(a[list(sel)], compute_uv=False)[-1])
        sub[sel] = s
        if s > full + tol * scale:
            violations.append((sel, s, full))
        if eps is not None and full <= eps * g and not s <= eps * g:
            violations.append((sel, s, full))
    return SubmatrixReport(full, sub, violations)


def delta0(blocks) -> np.ndarray:
    """Operator determinant sum_perm sign * V_1p(1) (x) ... (x) V_mp(m).

    ``blocks[i][j]`` is the coefficient of parameter j+1 in equation i.
    """
    m = len(blocks)
    out = None
    for perm in permutations(range(m)):
        sign = _perm_sign(perm)
        term = np.array([[1.0 + 0j]])
        for i, j in enumerate(perm):
            term = np.kron(term, blocks[i][j])
        out = sign * term if out is None else out + sign * term
    return out


def _perm_sign(perm) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


@dataclass
class DefinitenessCertificate:
    certified: bool
    selections: tuple
    delta0_eigenvalues: np.ndarray
    margin: float
    candidates: int

    def as_dict(self) -> dict:
        return {
            "certified": self.certified,
            "selections": [[i + 1 for i in s] for s in self.selections],
            "delta0_eigenvalues": np.asarray(self.delta0_eigenvalues).real.tolist(),
            "margin": self.margin,
            "candidates": self.candidates,
        }


def right_definiteness(
    pencil: MultiParamPencil, tol: float = 1e-12, max_size: int = 10_000
) -> DefinitenessCertificate:
    """Search ordered m-tuples of row selections for a right definite square problem.

    A tuple qualifies when all selected coefficient blocks are Hermitian
    and Delta_0 is positive definite.  Returns the first certificate, or a
    refusal carrying the best margin (smallest eigenvalue of Delta_0 over
    the Hermitian candidates, relative to ||Delta_0||).
    """
    if not pencil.is_linear:
        raise DimensionError("right definiteness is defined for linear pencils")
    if pencil.l**pencil.m > max_size:
        raise DimensionError("Delta_0 would be too large")
    m = pencil.m
    sels = enumerate_selections(pencil.k, pencil.l)
    # coefficient of parameter j (1..m) and constant term for each selection
    order = [pencil.term_index([0] * m)] + [
        pencil.term_index(np.eye(m, dtype=int)[j]) for j in range(m)
    ]
    best = (-math.inf, None, None)
    n = 0
    for tup in permutations(sels, m):
        n += 1
        blocks = []
        hermitian = True
        for sel in tup:
            row = []
            for j in range(m + 1):
                t = order[j]
                blk = (
                    pencil.coeffs[t][list(sel)] if t is not None
                    else np.zeros((pencil.l, pencil.l), dtype=complex)
                )
                if np.linalg.norm(blk - blk.conj().T) > tol * max(1.0, np.linalg.norm(blk)):
                    hermitian = False
                row.append(blk)
            blocks.append(row[1:])
        if not hermitian:
            continue
        d0 = delta0(blocks)
        d0 = 0.5 * (d0 + d0.conj().T)
        ev = np.linalg.eigvalsh(d0)
        margin = float(ev[0] / max(np.abs(ev).max(), 1e-300))
        if margin > best[0]:
            best = (margin, tup, ev)
        if margin > tol:
            return DefinitenessCertificate(True, tup, ev, margin, n)
    margin, tup, ev = best
    return DefinitenessCertificate(
        False, tup or (), np.array([]) if ev is None else ev, margin, n
    )
