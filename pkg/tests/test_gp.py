import math

import numpy as np
import pytest

from meshbench import Kernel, gp_fit, gp_predict, kernel_eval
from meshbench.errors import (
    ConfigInvalid,
    DegenerateInputs,
    ShapeMismatch,
    SingularKernel,
)
from meshbench.gp import _chol_with_escalation


def oracle_matern52(x, z, variance, lengthscales):
    r = math.sqrt(sum(((a - b) / l) ** 2
                      for a, b, l in zip(x, z, lengthscales)))
    return variance * (1 + math.sqrt(5) * r + 5 * r * r / 3) * \
        math.exp(-math.sqrt(5) * r)


def oracle_rbf(x, z, variance, lengthscales):
    r2 = sum(((a - b) / l) ** 2 for a, b, l in zip(x, z, lengthscales))
    return variance * math.exp(-r2 / 2)


def test_kernel_at_zero_distance_is_variance():
    for kind in ("Matern52", "RBF"):
        k = Kernel(kind, 2.5, np.array([0.7, 1.3]))
        assert kernel_eval(k, [0.2, -1.0], [0.2, -1.0]) == 2.5


def test_rbf_at_sqrt2():
    k = Kernel("RBF", 1.0, np.array([1.0, 1.0]))
    value = kernel_eval(k, [1.0, 1.0], [0.0, 0.0])  # r^2 = 2
    assert abs(value - math.exp(-1.0)) < 1e-15


def test_matern52_matches_formula_oracle():
    rng = np.random.default_rng(20)
    for _ in range(20):
        d = int(rng.integers(1, 5))
        x = rng.normal(size=d)
        z = rng.normal(size=d)
        variance = float(rng.uniform(0.1, 5.0))
        ls = rng.uniform(0.2, 3.0, size=d)
        k = Kernel("Matern52", variance, ls)
        assert abs(kernel_eval(k, x, z)
                   - oracle_matern52(x, z, variance, ls)) < 1e-14


def test_rbf_matches_formula_oracle():
    rng = np.random.default_rng(21)
    for _ in range(20):
        d = int(rng.integers(1, 4))
        x, z = rng.normal(size=d), rng.normal(size=d)
        variance = float(rng.uniform(0.5, 2.0))
        ls = rng.uniform(0.3, 2.0, size=d)
        k = Kernel("RBF", variance, ls)
        assert abs(kernel_eval(k, x, z) - oracle_rbf(x, z, variance, ls)) < 1e-14


def test_kernel_params_must_be_positive():
    with pytest.raises(ConfigInvalid):
        Kernel("RBF", 0.0, np.array([1.0]))
    with pytest.raises(ConfigInvalid):
        Kernel("Nope", 1.0, np.array([1.0]))


def test_constant_targets_rejected():
    X = np.linspace(0, 1, 5)[:, None]
    with pytest.raises(DegenerateInputs):
        gp_fit(X, np.full(5, 3.3))


def test_single_point_rejected():
    with pytest.raises(DegenerateInputs):
        gp_fit(np.zeros((1, 1)), np.array([1.0]))


def test_nonfinite_rejected():
    with pytest.raises(DegenerateInputs):
        gp_fit(np.array([[0.0], [np.nan]]), np.array([1.0, 2.0]))


def test_three_point_interpolation():
    X = np.array([[0.0], [0.5], [1.0]])
    y = np.array([1.0, -0.3, 0.7])
    model = gp_fit(X, y)
    mean, _ = gp_predict(model, X)
    assert np.abs(mean - y).max() < 1e-6


def test_linear_function_heldout_accuracy():
    rng = np.random.default_rng(22)
    X = rng.uniform(0, 1, size=(8, 2))
    y = 3.0 * X[:, 0] - 2.0 * X[:, 1] + 0.5
    model = gp_fit(X, y, kind="RBF")
    Xq = rng.uniform(0.15, 0.85, size=(5, 2))
    mean, _ = gp_predict(model, Xq)
    truth = 3.0 * Xq[:, 0] - 2.0 * Xq[:, 1] + 0.5
    assert np.abs(mean - truth).max() < 1e-3


def test_prior_reversion_far_from_data():
    rng = np.random.default_rng(23)
    X = rng.uniform(0, 1, size=(6, 2))
    y = np.sin(3.0 * X[:, 0]) + X[:, 1]
    model = gp_fit(X, y, kind="Matern52")
    # >= 50 lengthscales away in standardized space
    offset = 60.0 * model.kernel.lengthscales.max() * model.x_std.max()
    mean, var = gp_predict(model, np.array([[offset, offset]]))
    assert abs(mean[0] - model.y_mean) < 1e-6
    assert abs(var[0] - model.kernel.variance * model.y_std ** 2) < 1e-6


def test_variance_at_training_point_is_jitter_scale():
    rng = np.random.default_rng(24)
    X = rng.uniform(0, 1, size=(7, 2))
    y = np.cos(2.0 * X[:, 0]) - 0.5 * X[:, 1]
    model = gp_fit(X, y)
    _, var = gp_predict(model, X)
    assert var.max() <= 2.0 * model.jitter * model.y_std ** 2


def test_two_point_model_matches_hand_solved_system():
    X = np.array([[0.0], [1.0]])
    y = np.array([1.0, 3.0])
    model = gp_fit(X, y)
    xq = np.array([[0.25], [0.8]])
    mean, _ = gp_predict(model, xq)

    # oracle: dense solve of the 2x2 system with the fitted hyperparameters
    def k(a, b):
        return kernel_eval(model.kernel, [a], [b])

    xs = ((X - model.x_mean) / model.x_std).ravel()
    ys = (y - model.y_mean) / model.y_std
    K = np.array([[k(xs[0], xs[0]) + model.jitter, k(xs[0], xs[1])],
                  [k(xs[1], xs[0]), k(xs[1], xs[1]) + model.jitter]])
    alpha = np.linalg.solve(K, ys)
    for point, got in zip(xq.ravel(), mean):
        q = (point - model.x_mean[0]) / model.x_std[0]
        want = model.y_mean + model.y_std * \
            (np.array([k(q, xs[0]), k(q, xs[1])]) @ alpha)
        assert abs(got - want) < 1e-12


def test_mean_invariant_under_affine_output_rescaling():
    rng = np.random.default_rng(25)
    X = rng.uniform(-1, 1, size=(10, 2))
    y = np.sin(2 * X[:, 0]) * X[:, 1] + 0.3
    Xq = rng.uniform(-0.8, 0.8, size=(6, 2))
    base, _ = gp_predict(gp_fit(X, y), Xq)
    for a, b in ((2.0, 0.0), (100.0, -7.0), (0.01, 3.0)):
        scaled, _ = gp_predict(gp_fit(X, a * y + b), Xq)
        assert np.abs(scaled - (a * base + b)).max() < 1e-10 * max(1.0, abs(a))


def test_fit_is_deterministic():
    rng = np.random.default_rng(26)
    X = rng.uniform(0, 1, size=(9, 3))
    y = X @ np.array([1.0, -2.0, 0.5]) + np.sin(X[:, 0])
    m1 = gp_fit(X, y)
    m2 = gp_fit(X.copy(), y.copy())
    assert m1.alpha.tobytes() == m2.alpha.tobytes()
    assert m1.kernel.variance == m2.kernel.variance
    assert m1.kernel.lengthscales.tobytes() == m2.kernel.lengthscales.tobytes()


def test_predict_dimension_mismatch():
    model = gp_fit(np.random.default_rng(0).normal(size=(5, 2)),
                   np.arange(5.0))
    with pytest.raises(ShapeMismatch):
        gp_predict(model, np.zeros((1, 3)))


def test_jitter_escalation_then_singular():
    # escalation succeeds on a PSD-but-singular matrix
    singular = np.ones((3, 3))
    lower, jitter = _chol_with_escalation(singular, 1e-10)
    assert jitter <= 1e-6
    # an indefinite matrix stays unfactorizable at max jitter
    indefinite = np.array([[1.0, 0.0], [0.0, -5.0]])
    with pytest.raises(SingularKernel):
        _chol_with_escalation(indefinite, 1e-10)


def test_duplicate_inputs_survive_via_jitter():
    X = np.array([[0.5], [0.5], [1.0]])
    y = np.array([1.0, 1.0, 2.0])
    model = gp_fit(X, y)
    mean, _ = gp_predict(model, np.array([[0.75]]))
    assert np.isfinite(mean).all()
