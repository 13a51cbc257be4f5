import numpy as np
import pytest

from mpspec.errors import DimensionError
from mpspec.fixtures import running_example, sysid_data
from mpspec.sysid import (
    RealizationProblem,
    StationaryPoint,
    classify_hessian,
    conditioning_probe,
    constraint_matrix,
    find_stationary_points,
    initial_state,
    kkt_system,
    reduced_hessian,
)

EXPECTED = [
    ((-0.5, -0.5), 0.0, "minimum"),
    ((5.7691, -7.5333), 1.6429, "saddle"),
    ((0.7851, 0.7888), 45.4285, "saddle"),
    ((-0.4506, 0.9892), 51.8125, "maximum"),
    ((1.5275, 0.6221), 51.8125, "maximum"),
]


@pytest.fixture(scope="module")
def points():
    return find_stationary_points(RealizationProblem(sysid_data(), 2), [-10, 10, -10, 10])


def compliant(alpha, N, rng):
    n = len(alpha)
    y = list(rng.standard_normal(n))
    for _ in range(N - n):
        y.append(-sum(a * y[-1 - i] for i, a in enumerate(alpha)))
    return np.array(y)


def test_problem_validation():
    with pytest.raises(DimensionError):
        RealizationProblem(np.ones(4), 2)
    with pytest.raises(ValueError):
        RealizationProblem(np.array([1, 2, np.nan, 4, 5.0]), 2)
    assert RealizationProblem(np.ones(5), 2).size == 5 + 3 + 2


def test_constraint_matrix():
    T = constraint_matrix([-0.5, -0.5], 5)
    expected = np.array([
        [-0.5, -0.5, 1, 0, 0],
        [0, -0.5, -0.5, 1, 0],
        [0, 0, -0.5, -0.5, 1],
    ])
    assert np.array_equal(T, expected)
    assert np.array_equal(constraint_matrix([0.0, 0.0], 5), np.eye(5)[2:])
    with pytest.raises(DimensionError):
        constraint_matrix([1, 2, 3], 3)


def test_constraint_annihilates_recursion(rng):
    alpha = np.array([0.3, -0.8])
    y = compliant(alpha, 9, rng)
    assert np.linalg.norm(constraint_matrix(alpha, 9) @ y) <= 1e-13


def test_kkt_at_data_point():
    pr = RealizationProblem(sysid_data(), 2)
    F, _ = kkt_system(pr, [-0.5, -0.5], pr.y, np.zeros(3))
    assert np.linalg.norm(F) <= 1e-12


def test_kkt_zero_multiplier(rng):
    pr = RealizationProblem(rng.standard_normal(6), 2)
    F, _ = kkt_system(pr, rng.standard_normal(2), pr.y, np.zeros(4))
    assert np.allclose(F[:6], 0) and np.allclose(F[10:], 0)


def test_kkt_jacobian_finite_differences(rng):
    pr = RealizationProblem(rng.standard_normal(7), 2)
    for _ in range(5):
        z = rng.standard_normal(pr.size)
        N, n = pr.N, pr.n

        def F(z):
            return kkt_system(pr, z[2 * N - n:], z[:N], z[N:2 * N - n])[0]

        _, J = kkt_system(pr, z[2 * N - n:], z[:N], z[N:2 * N - n])
        h = 1e-6
        fd = np.column_stack([(F(z + h * e) - F(z - h * e)) / (2 * h) for e in np.eye(pr.size)])
        assert np.linalg.norm(fd - J) <= 1e-6 * np.linalg.norm(J)


def test_initial_state_projects(rng):
    pr = RealizationProblem(rng.standard_normal(6), 2)
    alpha = rng.standard_normal(2)
    y_hat, v = initial_state(pr, alpha)
    F, _ = kkt_system(pr, alpha, y_hat, v)
    assert np.linalg.norm(F[: 2 * pr.N - pr.n]) <= 1e-12


def test_reference_points(points):
    assert len(points) == 5
    for pt, (alpha, cost, kind) in zip(points, EXPECTED):
        assert np.max(np.abs(pt.alpha - alpha)) <= 1e-3
        assert pt.cost == pytest.approx(cost, abs=1e-3)
        assert pt.type == kind
        assert not pt.degenerate


def test_point_invariants(points):
    pr = RealizationProblem(sysid_data(), 2)
    for pt in points:
        F, _ = kkt_system(pr, pt.alpha, pt.y_hat, pt.v)
        assert np.linalg.norm(F) <= 1e-10 * (1 + np.linalg.norm(pr.y))
        assert pt.misfit == pytest.approx(np.linalg.norm(pt.y_hat - pr.y), abs=1e-12)
        assert pt.cost == pytest.approx(pt.misfit**2, abs=1e-12)


def test_reduced_hessian_finite_differences(points):
    """The classifying Hessian is the curvature of the profiled misfit."""
    pr = RealizationProblem(sysid_data(), 2)

    def phi(a):
        y_hat, _ = initial_state(pr, a)
        return 0.5 * np.sum((y_hat - pr.y) ** 2)

    for pt in points:
        H = reduced_hessian(pr, pt.alpha, pt.y_hat, pt.v)
        h = 1e-4
        E = np.eye(2) * h
        fd = np.array([[(phi(pt.alpha + E[i] + E[j]) - phi(pt.alpha + E[i] - E[j])
                         - phi(pt.alpha - E[i] + E[j]) + phi(pt.alpha - E[i] - E[j])) / (4 * h * h)
                        for j in range(2)] for i in range(2)])
        assert np.allclose(H, fd, rtol=1e-3, atol=1e-4 * (1 + np.abs(H).max()))


def test_compliant_instances(rng):
    for _ in range(20):
        alpha = rng.uniform(-1, 1, 2)
        N = int(rng.integers(5, 9))
        y = compliant(alpha, N, rng)
        pts = find_stationary_points(RealizationProblem(y, 2), [-3, 3, -3, 3], grid=11, random=50, rng=1)
        best = pts[0]
        assert best.cost <= 1e-10
        assert np.max(np.abs(best.alpha - alpha)) <= 1e-8


def test_higher_order_compliant(rng):
    alpha = np.array([0.2, -0.3, 0.1])
    y = compliant(alpha, 9, rng)
    pts = find_stationary_points(RealizationProblem(y, 3), [-2, 2] * 3, grid=3, random=20)
    assert pts[0].cost <= 1e-10
    assert np.allclose(pts[0].alpha, alpha, atol=1e-8)


def test_classify_toy_saddle():
    # f(a, b) = a^2 - b^2 has a saddle at the origin
    kind, ev, deg = classify_hessian(np.diag([2.0, -2.0]))
    assert kind == "saddle" and not deg
    assert classify_hessian(np.diag([1.0, 3.0]))[0] == "minimum"
    assert classify_hessian(-np.eye(2))[0] == "maximum"
    assert classify_hessian(np.diag([1.0, 1e-12]))[2]


def test_complex_mode_keeps_real_points():
    pts = find_stationary_points(RealizationProblem(sysid_data(), 2), [-10, 10, -10, 10],
                                 grid=9, random=20, complex_mode=True)
    real = [p for p in pts if p.type != "complex"]
    assert any(np.allclose(p.alpha, [-0.5, -0.5]) for p in real)


def test_probe_harness(points):
    # any 3 x 2 two-parameter pencil can be supplied; eigenvalues get a
    # number, other points report eta and a refusal reason
    p = running_example()
    pt = StationaryPoint(np.array([1.0, 2.0]), np.zeros(5), np.zeros(3), 0.0, 0.0, "minimum")
    rows = conditioning_probe([pt] + points[:2], p)
    assert rows[0]["kappa"] == pytest.approx(9.1899, rel=1e-3)
    assert rows[1]["kappa"] is None and rows[1]["eta"] > 0
    assert "reason" in rows[1]
