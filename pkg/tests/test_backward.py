import math

import numpy as np
import pytest

from mpspec.backward import (
    attaining_perturbations,
    eigenpair_backward_error,
    eigenvalue_backward_error,
    smallest_singular_triplet,
)
from mpspec.pencil import PerturbationModel, evaluate

LAM_HAT = np.array([0.9999, 0.9999])
X_HAT = np.array([-0.7070, 0.7072])


def test_approximate_pair_values(running):
    model = PerturbationModel.relative(running)
    r = evaluate(running, LAM_HAT) @ X_HAT
    assert np.linalg.norm(r) == pytest.approx(2.9e-4, rel=0.05)
    assert eigenpair_backward_error(running, model, LAM_HAT, X_HAT) == pytest.approx(2.1e-5, rel=0.05)
    assert eigenvalue_backward_error(running, model, LAM_HAT) == pytest.approx(1.0e-5, rel=0.05)


def test_exact_pair_has_zero_error(running):
    model = PerturbationModel.relative(running)
    x = np.array([-1.0, 1.0]) / math.sqrt(2)
    assert eigenpair_backward_error(running, model, [1, 1], x) <= 1e-14
    assert not np.any(attaining_perturbations(running, model, [1, 1], x))


def test_zero_weights():
    from mpspec.fixtures import running_example

    p = running_example()
    zero = PerturbationModel.custom([0.0, 0.0, 0.0])
    assert eigenpair_backward_error(p, zero, LAM_HAT, X_HAT) == math.inf
    assert eigenvalue_backward_error(p, zero, LAM_HAT) == math.inf
    x = np.array([-1.0, 1.0]) / math.sqrt(2)
    assert eigenpair_backward_error(p, zero, [1, 1], x) == 0.0
    with pytest.raises(ValueError):
        attaining_perturbations(p, zero, LAM_HAT, X_HAT)


def test_zero_vector_rejected(running):
    with pytest.raises(ValueError):
        eigenpair_backward_error(running, PerturbationModel.relative(running), LAM_HAT, np.zeros(2))


def test_computed_eigenvalues_have_tiny_error(solved):
    p, pairs = solved["other"]
    model = PerturbationModel.relative(p)
    for ep in pairs:
        assert eigenvalue_backward_error(p, model, ep.lam) <= 1e-12


def test_eigenvalue_error_is_minimum_over_vectors(other, rng):
    model = PerturbationModel.relative(other)
    lam = np.array([1.3, 0.1])
    eta = eigenvalue_backward_error(other, model, lam)
    for _ in range(100):
        x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        assert eta <= eigenpair_backward_error(other, model, lam, x) * (1 + 1e-14)
    _, _, v = smallest_singular_triplet(evaluate(other, lam))
    assert eigenpair_backward_error(other, model, lam, v) == pytest.approx(eta, rel=1e-12)


def test_scaling_invariance(other, rng):
    model = PerturbationModel.absolute(other)
    lam = rng.standard_normal(2)
    x = rng.standard_normal(2)
    e = eigenpair_backward_error(other, model, lam, x)
    for c in (3.0, -1e-3, 2 - 5j):
        assert eigenpair_backward_error(other, model, lam, c * x) == pytest.approx(e, rel=1e-13)


@pytest.mark.parametrize("name", ["running", "other", "right_definite"])
def test_attaining_perturbations(name, solved, rng):
    p, _ = solved[name]
    for model in (PerturbationModel.relative(p), PerturbationModel.absolute(p)):
        for _ in range(20):
            lam = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            eta = eigenpair_backward_error(p, model, lam, x)
            d = attaining_perturbations(p, model, lam, x)
            for dt, w in zip(d, model.weights):
                assert np.linalg.norm(dt, 2) == pytest.approx(eta * w, rel=1e-12)
            r = evaluate(p.perturbed(d), lam) @ x
            assert np.linalg.norm(r) <= 1e-12 * np.linalg.norm(evaluate(p, lam), 2) * np.linalg.norm(x)


def test_approximate_pair_perturbation_annihilates(running):
    model = PerturbationModel.relative(running)
    d = attaining_perturbations(running, model, LAM_HAT, X_HAT)
    assert np.linalg.norm(evaluate(running.perturbed(d), LAM_HAT) @ X_HAT) <= 1e-12


def test_zero_parameter_gets_zero_perturbation(running):
    model = PerturbationModel.relative(running)
    d = attaining_perturbations(running, model, [0.7, 0.0], [1.0, 0.3])
    assert not np.any(d[2])
    assert np.any(d[1])
