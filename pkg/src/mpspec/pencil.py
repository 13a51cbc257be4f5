"""Rectangular multiparameter matrix pencils.

A pencil is a k x l matrix-valued polynomial in m spectral parameters,

    M(lam) = sum_t lam**exp_t * C_t,

stored as a list of (exponent, coefficient) terms.  The linear case
A0 + lam_1 A1 + ... + lam_m Am is built by :meth:`MultiParamPencil.linear`.
Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DimensionError

__all__ = [
    "MultiParamPencil",
    "PerturbationModel",
    "Eigenpair",
    "NullSpaceBasis",
    "evaluate",
    "partial_derivative",
    "gamma",
    "residual",
    "enumerate_selections",
    "secular_value",
    "secular_gradient",
    "adjugate",
    "left_nullspace",
    "numerical_rank",
    "normal_rank",
    "default_rank_tol",
    "complex_sign",
]


def default_rank_tol(shape) -> float:
    """Relative rank tolerance max(k, l) * eps."""
    return max(shape) * np.finfo(float).eps


def complex_sign(z: complex) -> complex:
    """conj(z)/|z| for z != 0, else 0; satisfies z * sign(z) = |z|."""
    a = abs(z)
    return 0.0 if a == 0 else np.conj(z) / a


@dataclass(frozen=True)
class MultiParamPencil:
    """k x l matrix polynomial in m parameters.

    ``exponents`` is an (n_terms, m) integer array and ``coeffs`` an
    (n_terms, k, l) complex array.  Instances are treated as immutable.
    """

    exponents: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        exps = np.asarray(self.exponents, dtype=int)
        coeffs = np.asarray(self.coeffs, dtype=complex)
        if exps.ndim != 2 or coeffs.ndim != 3:
            raise DimensionError("exponents must be (T, m) and coeffs (T, k, l)")
        if exps.shape[0] != coeffs.shape[0] or exps.shape[0] == 0:
            raise DimensionError("need one coefficient matrix per exponent")
        if exps.shape[1] < 1 or coeffs.shape[1] < 1 or coeffs.shape[2] < 1:
            raise DimensionError("k, l and m must be positive")
        if (exps < 0).any():
            raise DimensionError("exponents must be nonnegative")
        if len({tuple(e) for e in exps}) != len(exps):
            raise DimensionError("exponents must be pairwise distinct")
        exps.setflags(write=False)
        coeffs.setflags(write=False)
        object.__setattr__(self, "exponents", exps)
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def linear(cls, matrices: Sequence) -> "MultiParamPencil":
        """Pencil A0 + sum_i lam_i A_i from ``[A0, A1, ..., Am]``."""
        mats = [np.atleast_2d(np.asarray(a, dtype=complex)) for a in matrices]
        if len(mats) < 2:
            raise DimensionError("a linear pencil needs A0 and at least A1")
        if len({a.shape for a in mats}) != 1:
            raise DimensionError("all coefficient matrices must share one shape")
        m = len(mats) - 1
        exps = np.vstack([np.zeros((1, m), dtype=int), np.eye(m, dtype=int)])
        return cls(exps, np.stack(mats))

    @classmethod
    def from_terms(cls, terms) -> "MultiParamPencil":
        """Build from an iterable of ``(exponent, matrix)`` pairs."""
        terms = list(terms)
        if not terms:
            raise DimensionError("empty term list")
        exps = np.array([np.atleast_1d(e) for e, _ in terms], dtype=int)
        mats = [np.atleast_2d(np.asarray(c, dtype=complex)) for _, c in terms]
        if len({a.shape for a in mats}) != 1:
            raise DimensionError("all coefficient matrices must share one shape")
        return cls(exps, np.stack(mats))

    @property
    def k(self) -> int:
        return self.coeffs.shape[1]

    @property
    def l(self) -> int:  # noqa: E743
        return self.coeffs.shape[2]

    @property
    def m(self) -> int:
        return self.exponents.shape[1]

    @property
    def n_terms(self) -> int:
        return self.exponents.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.k, self.l)

    @property
    def is_linear(self) -> bool:
        return bool((self.exponents.sum(axis=1) <= 1).all())

    @property
    def is_standard_shape(self) -> bool:
        return self.k == self.l + self.m - 1

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.coeffs.imag == 0))

    def degree_in(self, j: int) -> int:
        """Highest power of parameter ``j`` (0-based) among the terms."""
        return int(self.exponents[:, j].max())

    def term_index(self, exponent) -> int | None:
        exponent = tuple(int(e) for e in exponent)
        for t, e in enumerate(self.exponents):
            if tuple(e) == exponent:
                return t
        return None

    def coefficient_norms(self) -> np.ndarray:
        """Spectral norm of every coefficient matrix, in term order."""
        return np.array([np.linalg.norm(c, 2) for c in self.coeffs])

    def scale(self) -> float:
        """Sum of coefficient spectral norms, a size measure for tolerances."""
        return float(self.coefficient_norms().sum())

    def select_rows(self, rows: Sequence[int]) -> "MultiParamPencil":
        """Sub-pencil made of the given (0-based) rows."""
        return MultiParamPencil(self.exponents, self.coeffs[:, list(rows), :])

    def perturbed(self, deltas: Sequence) -> "MultiParamPencil":
        """Pencil with coefficient ``t`` replaced by ``C_t + deltas[t]``."""
        deltas = np.asarray(deltas, dtype=complex)
        if deltas.shape != self.coeffs.shape:
            raise DimensionError("one k x l perturbation per term is required")
        return MultiParamPencil(self.exponents, self.coeffs + deltas)

    def monomials(self, lam) -> np.ndarray:
        """Values lam**exp_t for every term."""
        lam = _as_tuple(self, lam)
        return np.prod(lam[None, :] ** self.exponents, axis=1)

    def __call__(self, lam) -> np.ndarray:
        return evaluate(self, lam)


@dataclass(frozen=True)
class PerturbationModel:
    """Per-term error weights ||E_t||.

    ``absolute`` uses E_t = ones/sqrt(kl), whose spectral norm is 1;
    ``relative`` uses E_t = C_t; ``custom`` takes user weights.
    """

    mode: str
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1:
            raise DimensionError("weights must be a vector")
        if (w < 0).any() or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if self.mode not in ("absolute", "relative", "custom"):
            raise ValueError(f"unknown perturbation mode {self.mode!r}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def absolute(cls, pencil: MultiParamPencil) -> "PerturbationModel":
        return cls("absolute", np.ones(pencil.n_terms))

    @classmethod
    def relative(cls, pencil: MultiParamPencil) -> "PerturbationModel":
        return cls("relative", pencil.coefficient_norms())

    @classmethod
    def custom(cls, weights) -> "PerturbationModel":
        return cls("custom", weights)

    @classmethod
    def named(cls, name: str, pencil: MultiParamPencil, weights=None):
        """Resolve 'abs'/'rel'/'custom' style names used by the CLI."""
        key = name.lower()
        if key in ("abs", "absolute"):
            return cls.absolute(pencil)
        if key in ("rel", "relative"):
            return cls.relative(pencil)
        if key == "custom":
            if weights is None:
                raise ValueError("custom model needs weights")
            return cls.custom(weights)
        raise ValueError(f"unknown perturbation model {name!r}")

    def check(self, pencil: MultiParamPencil):
        if len(self.weights) != pencil.n_terms:
            raise DimensionError(
                f"{len(self.weights)} weights for a pencil with {pencil.n_terms} terms"
            )


@dataclass(frozen=True)
class Eigenpair:
    """Eigenvalue tuple plus unit right eigenvector."""

    lam: np.ndarray
    x: np.ndarray
    iterations: int = 0
    history: tuple = field(default=(), compare=False, repr=False)

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=complex))
        x = np.atleast_1d(np.asarray(self.x, dtype=complex))
        if not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalue tuple must be finite")
        if abs(np.linalg.norm(x) - 1.0) > 1e-14:
            raise ValueError("eigenvector must have unit norm")
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "x", x)

    @classmethod
    def normalized(cls, lam, x, **kw) -> "Eigenpair":
        x = np.asarray(x, dtype=complex)
        nx = np.linalg.norm(x)
        if nx == 0:
            raise ValueError("zero eigenvector")
        return cls(lam, x / nx, **kw)


@dataclass(frozen=True)
class NullSpaceBasis:
    """Orthonormal basis (columns) of a left null space."""

    basis: np.ndarray
    tol: float
    singular_values: np.ndarray = field(default=None, compare=False, repr=False)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def _as_tuple(pencil: MultiParamPencil, lam) -> np.ndarray:
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if lam.ndim != 1 or lam.shape[0] != pencil.m:
        raise DimensionError(f"expected {pencil.m} spectral parameters, got {lam.shape}")
    return lam


def evaluate(pencil: MultiParamPencil, lam) -> np.ndarray:
    """M(lam) as a dense k x l matrix."""
    return np.tensordot(pencil.monomials(lam), pencil.coeffs, axes=1)


def partial_derivative(pencil: MultiParamPencil, lam, j: int) -> np.ndarray:
    """dM/dlam_j at ``lam``; ``j`` is 0-based."""
    lam = _as_tuple(pencil, lam)
    if not 0 <= j < pencil.m:
        raise DimensionError(f"parameter index {j} out of range for m={pencil.m}")
    out = np.zeros(pencil.shape, dtype=complex)
    for e, c in zip(pencil.exponents, pencil.coeffs):
        p = e[j]
        if p == 0:
            continue
        ee = e.copy()
        ee[j] -= 1
        out += p * np.prod(lam**ee) * c
    return out


def gamma(model: PerturbationModel, lam, pencil: MultiParamPencil | None = None) -> float:
    """sum_t |lam**exp_t| * ||E_t||.

    Without a pencil, the weights are assumed to belong to a linear pencil
    (constant term first, then one term per parameter).
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    if pencil is None:
        if len(model.weights) != lam.shape[0] + 1:
            raise DimensionError("weights do not match a linear pencil in len(lam) parameters")
        mono = np.concatenate([[1.0], lam])
    else:
        model.check(pencil)
        mono = pencil.monomials(lam)
    return float(np.dot(np.abs(mono), model.weights))


def residual(pencil: MultiParamPencil, lam, x) -> np.ndarray:
    """r = M(lam) x."""
    x = np.asarray(x, dtype=complex)
    if x.shape != (pencil.l,):
        raise DimensionError(f"vector of length {pencil.l} expected")
    return evaluate(pencil, lam) @ x


def enumerate_selections(k: int, l: int) -> list[tuple[int, ...]]:  # noqa: E741
    """All C(k, l) row selections, 0-based, in lexicographic order."""
    if l > k or l < 1:
        raise DimensionError(f"cannot select {l} rows out of {k}")
    return list(combinations(range(k), l))


def secular_value(pencil: MultiParamPencil, sel, lam) -> complex:
    """det of the row-selected evaluated pencil."""
    return complex(np.linalg.det(evaluate(pencil, lam)[list(sel), :]))


def adjugate(a: np.ndarray) -> np.ndarray:
    """Adjugate of a square matrix, valid for singular input.

    Uses adj(U S V^H) = det(V^H) V adj(S) det(U) U^H with adj(S) holding
    the products of all other singular values.
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    if n == 1:
        return np.ones((1, 1), dtype=complex)
    u, s, vh = np.linalg.svd(a)
    others = np.array([np.prod(np.delete(s, i)) for i in range(n)])
    return np.linalg.det(vh) * np.linalg.det(u) * (vh.conj().T * others) @ u.conj().T


def secular_gradient(pencil: MultiParamPencil, sel, lam) -> np.ndarray:
    """Gradient of the secular value: trace(adj(C) dC/dlam_j) per parameter."""
    rows = list(sel)
    c = evaluate(pencil, lam)[rows, :]
    if c.shape[0] != c.shape[1]:
        raise DimensionError("row selection must give a square matrix")
    adj = adjugate(c)
    return np.array(
        [np.trace(adj @ partial_derivative(pencil, lam, j)[rows, :]) for j in range(pencil.m)]
    )


def numerical_rank(a: np.ndarray, tol: float | None = None) -> int:
    s = np.linalg.svd(np.asarray(a), compute_uv=False)
    if tol is None:
        tol = default_rank_tol(np.shape(a))
    if s.size == 0 or s[0] == 0:
        return 0
    return int((s > tol * s[0]).sum())


def left_nullspace(matrix: np.ndarray, tol: float | None = None) -> NullSpaceBasis:
    """Orthonormal basis of {y : y^H M = 0}.

    Singular values at or below ``tol * sigma_max`` count as zero; the
    default tolerance is max(k, l) * eps.
    """
    a = np.asarray(matrix, dtype=complex)
    if tol is None:
        tol = default_rank_tol(a.shape)
    u, s, _ = np.linalg.svd(a, full_matrices=True)
    rank = 0 if s.size == 0 or s[0] == 0 else int((s > tol * s[0]).sum())
    return NullSpaceBasis(u[:, rank:], tol, s)


def normal_rank(
    pencil: MultiParamPencil,
    trials: int = 3,
    tol: float | None = None,
    rng: np.random.Generator | int | None = 0,
) -> int:
    """Largest numerical rank over random points on the complex unit polydisc."""
    if trials < 1:
        raise ValueError("trials must be positive")
    rng = np.random.default_rng(rng)
    best = 0
    for _ in range(trials):
        r = np.sqrt(rng.uniform(size=pencil.m))
        lam = r * np.exp(2j * math.pi * rng.uniform(size=pencil.m))
        best = max(best, numerical_rank(evaluate(pencil, lam), tol))
    return best
