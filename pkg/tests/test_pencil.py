import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mpspec.errors import DimensionError
from mpspec.pencil import (
    Eigenpair,
    MultiParamPencil,
    PerturbationModel,
    adjugate,
    enumerate_selections,
    evaluate,
    gamma,
    left_nullspace,
    normal_rank,
    partial_derivative,
    residual,
    secular_gradient,
    secular_value,
)


def test_evaluate_linear(running):
    M = evaluate(running, [1, 2])
    A0, A1, A2 = running.coeffs
    assert np.allclose(M, A0 + A1 + 2 * A2)
    # rank drop at an eigenvalue
    assert np.linalg.svd(M, compute_uv=False)[-1] < 1e-14


def test_evaluate_polynomial_terms():
    c = [np.eye(2), 2 * np.eye(2), 3 * np.eye(2)]
    p = MultiParamPencil.from_terms([([0, 0], c[0]), ([2, 1], c[1]), ([0, 3], c[2])])
    lam = np.array([1.5, -0.5])
    expected = c[0] + 1.5**2 * -0.5 * c[1] + (-0.5) ** 3 * c[2]
    assert np.allclose(evaluate(p, lam), expected)
    assert not p.is_linear
    assert p.degree_in(1) == 3


def test_pencil_validation():
    with pytest.raises(DimensionError):
        MultiParamPencil.linear([np.zeros((3, 2)), np.zeros((2, 2))])
    with pytest.raises(ValueError):
        MultiParamPencil.from_terms([([0, 1], np.eye(2)), ([0, 1], np.eye(2))])
    with pytest.raises(ValueError):
        MultiParamPencil.from_terms([([0, -1], np.eye(2))])


def test_pencil_is_immutable(running):
    with pytest.raises(ValueError):
        running.coeffs[0, 0, 0] = 5.0


def test_evaluate_linear_in_coefficients(other, rng):
    lam = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    delta = rng.standard_normal((3, 2))
    for t in range(3):
        deltas = np.zeros((3, 3, 2))
        deltas[t] = delta
        lhs = evaluate(other.perturbed(deltas), lam)
        rhs = evaluate(other, lam) + other.monomials(lam)[t] * delta
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-13)


def test_partial_derivative_linear_is_coefficient(running, rng):
    for j in range(2):
        D = partial_derivative(running, rng.standard_normal(2), j)
        assert np.array_equal(D, running.coeffs[j + 1])
    with pytest.raises(DimensionError):
        partial_derivative(running, [1, 1], 2)


def test_partial_derivative_polynomial_fd(rng):
    p = MultiParamPencil.from_terms(
        [([0, 0], rng.standard_normal((3, 2))), ([2, 1], rng.standard_normal((3, 2))),
         ([1, 2], rng.standard_normal((3, 2)))]
    )
    lam = rng.standard_normal(2)
    h = 1e-6
    for j in range(2):
        e = np.eye(2)[j]
        fd = (evaluate(p, lam + h * e) - evaluate(p, lam - h * e)) / (2 * h)
        assert np.allclose(partial_derivative(p, lam, j), fd, atol=1e-8)


def test_gamma(running):
    rel = PerturbationModel.relative(running)
    norms = [np.linalg.norm(c, 2) for c in running.coeffs]
    assert np.allclose(rel.weights, norms)
    assert gamma(rel, [0, 0], running) == pytest.approx(norms[0])
    assert gamma(rel, [1, -2], running) == pytest.approx(norms[0] + norms[1] + 2 * norms[2])
    ab = PerturbationModel.absolute(running)
    assert gamma(ab, [3j, 4], running) == pytest.approx(8.0)
    # linear-pencil shorthand without the pencil
    assert gamma(ab, [3j, 4]) == pytest.approx(8.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-50, 50).filter(lambda v: v == 0 or abs(v) > 1e-6), min_size=2, max_size=2))
def test_gamma_bounded_below_by_constant_weight(lam):
    from mpspec.fixtures import other_example

    p = other_example()
    model = PerturbationModel.relative(p)
    g = gamma(model, lam, p)
    assert g >= model.weights[0] - 1e-12
    if np.any(np.asarray(lam) != 0):
        assert g > model.weights[0]


def test_residual(running):
    x = np.array([-1.0, 1.0]) / math.sqrt(2)
    assert np.linalg.norm(residual(running, [1, 1], x)) < 1e-15
    with pytest.raises(DimensionError):
        residual(running, [1, 1], np.ones(3))


def test_enumerate_selections():
    assert enumerate_selections(3, 2) == [(0, 1), (0, 2), (1, 2)]
    assert len(enumerate_selections(6, 3)) == 20
    assert enumerate_selections(2, 2) == [(0, 1)]
    with pytest.raises(DimensionError):
        enumerate_selections(2, 3)


def test_secular_values_vanish_at_eigenvalues(running):
    for lam in ([1, 2], [3, 1], [1, 1]):
        for sel in enumerate_selections(3, 2):
            assert abs(secular_value(running, sel, lam)) < 1e-12


def test_adjugate_matches_inverse_and_singular_case(rng):
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.allclose(adjugate(a), np.linalg.det(a) * np.linalg.inv(a))
    s = np.array([[1.0, 2.0], [2.0, 4.0]])
    assert np.allclose(adjugate(s), [[4.0, -2.0], [-2.0, 1.0]])
    assert np.allclose(adjugate(np.array([[7.0]])), [[1.0]])


def test_secular_gradient_matches_finite_differences(rng):
    from mpspec.fixtures import EXAMPLES

    h = 1e-5
    for make in EXAMPLES.values():
        p = make()
        for _ in range(100):
            lam = rng.uniform(-3, 3, 2) + 1j * rng.uniform(-1, 1, 2)
            for sel in enumerate_selections(3, 2):
                g = secular_gradient(p, sel, lam)
                fd = np.array([
                    (secular_value(p, sel, lam + h * e) - secular_value(p, sel, lam - h * e)) / (2 * h)
                    for e in np.eye(2)
                ])
                assert np.linalg.norm(g - fd) <= 1e-6 * max(1.0, np.linalg.norm(g))


def test_left_nullspace(running, rng):
    ns = left_nullspace(evaluate(running, [1, 2]), 1e-10)
    assert ns.dim == 2
    assert np.allclose(ns.basis.conj().T @ ns.basis, np.eye(2))
    assert np.linalg.norm(ns.basis.conj().T @ evaluate(running, [1, 2])) < 1e-13
    ns = left_nullspace(np.eye(3)[:, :2])
    assert ns.dim == 1 and np.allclose(abs(ns.basis[2, 0]), 1)
    assert left_nullspace(np.zeros((3, 2))).dim == 3


def test_generic_left_null_dimension(rng):
    from mpspec.fixtures import EXAMPLES

    for make in EXAMPLES.values():
        p = make()
        for _ in range(1000):
            lam = rng.uniform(-10, 10, 2) + 1j * rng.uniform(-10, 10, 2)
            assert left_nullspace(evaluate(p, lam), 1e-10).dim == p.m - 1


def test_normal_rank(running, rng):
    assert normal_rank(running) == 2
    zero = MultiParamPencil.linear([np.zeros((3, 2))] * 3)
    assert normal_rank(zero) == 0
    u = rng.standard_normal(3)
    common = MultiParamPencil.linear([np.outer(u, rng.standard_normal(2)) for _ in range(3)])
    assert normal_rank(common, trials=5) == 1


def test_eigenpair_requires_unit_vector():
    with pytest.raises(ValueError):
        Eigenpair([1, 1], [1.0, 1.0])
    e = Eigenpair.normalized([1, 1], [1.0, 1.0])
    assert np.linalg.norm(e.x) == pytest.approx(1.0)


def test_perturbation_model_named(running):
    assert PerturbationModel.named("abs", running).mode == "absolute"
    m = PerturbationModel.named("custom", running, [1, 2, 3])
    assert np.allclose(m.weights, [1, 2, 3])
    with pytest.raises(ValueError):
        PerturbationModel.custom([1, -1, 1])
    with pytest.raises(ValueError):
        PerturbationModel.custom([1, 1]).check(running)
