"""Left null spaces along parameter paths.

Off the spectrum a k x l pencil with k = l + m - 1 has an (m-1)-dimensional
left null space at every point, the trivial part.  At an eigenvalue one
more direction appears, the left eigenvector.  The trivial part at an
eigenvalue is defined here as the limit of the off-spectrum null space.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .conditioning import eigen_left_basis
from .errors import DimensionError
from .pencil import MultiParamPencil, evaluate, left_nullspace

__all__ = [
    "AffinePath",
    "PathSample",
    "nullspace_along_path",
    "split_at_eigenvalue",
    "align_basis",
    "parse_path",
]

PATH_NULL_TOL = 1e-10


@dataclass(frozen=True)
class AffinePath:
    """t -> origin + t * direction."""

    origin: np.ndarray
    direction: np.ndarray

    def __call__(self, t) -> np.ndarray:
        return np.asarray(self.origin, dtype=complex) + t * np.asarray(self.direction, dtype=complex)


@dataclass(frozen=True)
class PathSample:
    t: float
    lam: np.ndarray
    basis: np.ndarray
    singular_values: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


def parse_path(text: str, m: int) -> AffinePath:
    """Parse 'affine:t*(d1,...,dm)' or 'affine:(o1,...)+t*(d1,...)'."""
    if not text.startswith("affine:"):
        raise ValueError("path must start with 'affine:'")
    body = text[len("affine:"):].replace(" ", "")

    def vec(s):
        s = s.strip("()")
        v = np.array([complex(z.replace("i", "j")) for z in s.split(",")])
        if v.shape != (m,):
            raise DimensionError(f"path vector needs {m} entries")
        return v

    if "+t*" in body:
        o, d = body.split("+t*")
        return AffinePath(vec(o), vec(d))
    if body.startswith("t*"):
        return AffinePath(np.zeros(m, dtype=complex), vec(body[2:]))
    raise ValueError(f"cannot parse path {text!r}")


def align_basis(new: np.ndarray, prev: np.ndarray | None) -> np.ndarray:
    """Rotate ``new`` within its span to match ``prev`` as closely as possible.

    Equal dimensions: orthogonal Procrustes (for a single column this is
    the unit scalar maximizing the overlap).  Otherwise the columns are
    reordered by decreasing overlap with ``prev``.
    """
    if prev is None or new.shape[1] == 0 or prev.shape[1] == 0:
        return new
    u, _, vh = np.linalg.svd(new.conj().T @ prev)
    if new.shape[1] == prev.shape[1]:
        return new @ (u @ vh)
    q = u.copy()
    r = min(new.shape[1], prev.shape[1])
    # fix the phase of each matched column against its partner in prev
    for j in range(r):
        z = np.vdot(prev @ vh[j].conj(), new @ q[:, j])
        if z != 0:
            q[:, j] *= np.conj(z) / abs(z)
    return new @ q


def nullspace_along_path(
    pencil: MultiParamPencil,
    path: AffinePath,
    samples: Sequence[float],
    tol: float = PATH_NULL_TOL,
) -> list[PathSample]:
    """Aligned left null bases of M(path(t)) for each t in ``samples``."""
    out = []
    prev = None
    for t in samples:
        lam = path(t)
        ns = left_nullspace(evaluate(pencil, lam), tol)
        basis = align_basis(ns.basis, prev)
        out.append(PathSample(float(t), lam, basis, ns.singular_values))
        prev = basis
    return out


def _offpoint_projector(pencil, lam):
    """Projector onto the (k - l)-dimensional left null space at a nearby point."""
    u, _, _ = np.linalg.svd(evaluate(pencil, lam), full_matrices=True)
    n = u[:, pencil.l:]
    return n @ n.conj().T


def split_at_eigenvalue(
    pencil: MultiParamPencil,
    lam,
    direction=None,
    delta: float = 1e-7,
    rng=0,
):
    """Split the left null space at a simple eigenvalue.

    The trivial part is the limit of the off-spectrum null space along
    ``direction`` (random complex unit vector if omitted).  Projectors at
    lam +- delta * direction are averaged, which cancels the first-order
    drift, and the top m-1 eigenvectors of the average compressed to the
    null space at lam form the trivial basis.  The left eigenvector is the
    remaining direction.  Returns ``(trivial k x (m-1), y)``.
    """
    lam = np.atleast_1d(np.asarray(lam, dtype=complex))
    Y, _ = eigen_left_basis(pencil, lam)
    basis = Y.basis
    m = pencil.m
    if basis.shape[1] != m:
        raise DimensionError("split needs a standard-shape pencil")
    if m == 1:
        return np.zeros((pencil.k, 0), dtype=complex), basis[:, 0]
    if direction is None:
        g = np.random.default_rng(rng)
        direction = g.standard_normal(m) + 1j * g.standard_normal(m)
    d = np.asarray(direction, dtype=complex)
    d = d / np.linalg.norm(d)
    P = 0.5 * (_offpoint_projector(pencil, lam + delta * d) + _offpoint_projector(pencil, lam - delta * d))
    C = basis.conj().T @ P @ basis
    C = 0.5 * (C + C.conj().T)
    w, v = np.linalg.eigh(C)
    trivial = basis @ v[:, 1:]
    y = basis @ v[:, 0]
    return trivial, y / np.linalg.norm(y)
