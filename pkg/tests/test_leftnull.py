import numpy as np
import pytest

from mpspec.errors import DimensionError
from mpspec.leftnull import AffinePath, align_basis, nullspace_along_path, parse_path, split_at_eigenvalue
from mpspec.pencil import MultiParamPencil, evaluate, left_nullspace


def pqr(l1, l2):
    p = -2 * (l1 - 1) * (l2 - 1)
    q = -3 * l1 + 7 * l2 - l1 * l2 + l1**2 - 2 * l2**2 - 2
    r = 2 * (l2 - 1) * (l1 + l2 - 3)
    v = np.array([p, q, r], dtype=complex)
    return v / np.linalg.norm(v)


def phase_error(u, v):
    """min over unit scalars c of ||u - c v||."""
    z = np.vdot(v, u)
    c = z / abs(z) if z != 0 else 1.0
    return np.linalg.norm(u - c * v)


def test_parse_path():
    p = parse_path("affine:t*(1,1)", 2)
    assert np.allclose(p(2.0), [2, 2])
    q = parse_path("affine:(1,0)+t*(0,1i)", 2)
    assert np.allclose(q(2.0), [1, 2j])
    with pytest.raises(ValueError):
        parse_path("line:t*(1,1)", 2)
    with pytest.raises(DimensionError):
        parse_path("affine:t*(1,1,1)", 2)


def test_diagonal_path_dimensions(running):
    ts = np.linspace(0, 2, 201)
    samples = nullspace_along_path(running, AffinePath(np.zeros(2), np.ones(2)), ts)
    dims = np.array([s.dim for s in samples])
    assert dims[100] == 2 and samples[100].t == pytest.approx(1.0)
    assert np.all(np.delete(dims, 100) == 1)


def test_trivial_basis_matches_symbolic(running):
    ts = np.linspace(0.05, 1.95, 20)
    ts = ts[np.abs(ts - 1) > 1e-3]
    samples = nullspace_along_path(running, AffinePath(np.zeros(2), np.ones(2)), ts)
    for s in samples:
        assert phase_error(s.basis[:, 0], pqr(s.t, s.t)) <= 1e-8


def test_off_diagonal_path(running, rng):
    path = AffinePath(np.array([0.3, -1.7]), np.array([0.7, 0.4]))
    for s in nullspace_along_path(running, path, np.linspace(0, 1, 20)):
        assert s.dim == 1
        assert phase_error(s.basis[:, 0], pqr(*s.lam)) <= 1e-8


def test_alignment_continuity(running):
    ts = np.linspace(0, 2, 201)
    samples = nullspace_along_path(running, AffinePath(np.zeros(2), np.ones(2)), ts)
    for a, b in zip(samples, samples[1:]):
        if a.dim == b.dim == 1:
            assert np.linalg.norm(a.basis - b.basis) <= 10 * 0.01


def test_constant_path(other):
    path = AffinePath(np.array([0.3 + 0.2j, -0.4]), np.zeros(2))
    samples = nullspace_along_path(other, path, range(5))
    for s in samples[1:]:
        assert np.allclose(s.basis, samples[0].basis, atol=1e-14)


def test_align_basis_procrustes(rng):
    q, _ = np.linalg.qr(rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2)))
    u, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    assert np.allclose(align_basis(q @ u, q), q)
    assert align_basis(q, None) is q


def test_split_running_at_one_one(running):
    trivial, y = split_at_eigenvalue(running, [1, 1], direction=[1, 1])
    # along (t, t): (p, q, r) = (t - 1) * (-2(t - 1), -2(t - 1), 2(2t - 3)) -> e3
    limit = np.array([0, 0, 1.0])
    assert phase_error(trivial[:, 0], limit) <= 1e-10
    assert phase_error(pqr(1 + 1e-9, 1 + 1e-9), limit) <= 1e-8
    assert abs(np.vdot(trivial[:, 0], y)) <= 1e-12
    assert np.linalg.norm(y.conj() @ evaluate(running, [1, 1])) <= 1e-10


def test_split_residual_all_eigenvalues(solved):
    for p, pairs in solved.values():
        for ep in pairs:
            trivial, y = split_at_eigenvalue(p, ep.lam)
            a = evaluate(p, ep.lam)
            assert np.linalg.norm(y.conj() @ a) <= 1e-10
            assert np.linalg.norm(trivial.conj().T @ a) <= 1e-6
            ns = left_nullspace(a, 1e-10).basis
            # y lies in the left null space at the eigenvalue
            assert np.linalg.norm(y - ns @ (ns.conj().T @ y)) <= 1e-10


def test_split_gep(rng):
    A = rng.standard_normal((4, 4))
    B = rng.standard_normal((4, 4))
    import scipy.linalg

    w, vl, _ = scipy.linalg.eig(A, -B, left=True, right=True)
    lam = w[0]
    p = MultiParamPencil.linear([A, B])
    trivial, y = split_at_eigenvalue(p, [lam])
    assert trivial.shape == (4, 0)
    ref = vl[:, 0] / np.linalg.norm(vl[:, 0])
    assert phase_error(y, ref) <= 1e-8
