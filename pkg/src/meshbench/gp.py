"""Gaussian-process regression with ARD kernels and a deterministic,
derivative-free hyperparameter search.

Inputs are standardized per dimension and outputs standardized internally,
so predictions are invariant under affine re-scaling of the raw targets.
The kernel variance and per-dimension lengthscales maximize the log
marginal likelihood through coordinate-wise log-space grid refinement with
a fixed budget and fixed ordering: the same data always yields the same
model, on any machine and thread count.

Kernels (r is the ARD-scaled distance):

    Matern52:  s2 * (1 + sqrt(5) r + 5 r^2 / 3) * exp(-sqrt(5) r)
    RBF:       s2 * exp(-r^2 / 2)
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve, cholesky, solve_triangular

from .errors import ConfigInvalid, DegenerateInputs, ShapeMismatch, SingularKernel

KERNEL_KINDS = ("Matern52", "RBF")

DEFAULT_JITTER = 1e-10
MAX_JITTER = 1e-6

#: log-space search bounds: lengthscales in 1e-3..1e3, variance in 1e-6..1e6
#: (smooth targets drive the optimum along a ridge where the variance grows
#: with the lengthscale, so the variance needs the wider box)
_LS_BOUNDS = (np.log(1e-3), np.log(1e3))
_VAR_BOUNDS = (np.log(1e-6), np.log(1e6))
#: per-sweep half-widths of the candidate grid; one pass over all search
#: directions each (two equal coarse sweeps let the ridge walk make ground)
_SWEEP_SPANS = (3.0, 3.0, 1.5, 0.75, 0.375, 0.1875)
_GRID_POINTS = 9


@dataclass(frozen=True)
class Kernel:
    kind: str
    variance: float             # s2
    lengthscales: np.ndarray    # (d,), strictly positive

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ConfigInvalid(f"unknown kernel kind '{self.kind}'")
        if self.variance <= 0 or np.any(self.lengthscales <= 0):
            raise ConfigInvalid("kernel parameters must be strictly positive")


def _scaled_sq_dists(x1: np.ndarray, x2: np.ndarray,
                     lengthscales: np.ndarray) -> np.ndarray:
    a = x1 / lengthscales
    b = x2 / lengthscales
    # (a-b)^2 summed over dims, computed stably pairwise
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kernel_matrix(kernel: Kernel, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    r2 = _scaled_sq_dists(x1, x2, kernel.lengthscales)
    if kernel.kind == "RBF":
        return kernel.variance * np.exp(-0.5 * r2)
    r = np.sqrt(np.clip(r2, 0.0, None))
    sqrt5_r = np.sqrt(5.0) * r
    return kernel.variance * (1.0 + sqrt5_r + (5.0 / 3.0) * r2) * np.exp(-sqrt5_r)


def kernel_eval(kernel: Kernel, x, x_other) -> float:
    """Covariance between two points (dimension-checked scalar form)."""
    a = np.atleast_1d(np.asarray(x, dtype=np.float64))
    b = np.atleast_1d(np.asarray(x_other, dtype=np.float64))
    if a.shape != b.shape or a.shape != kernel.lengthscales.shape:
        raise ShapeMismatch(
            f"point dims {a.shape}/{b.shape} vs kernel dims "
            f"{kernel.lengthscales.shape}")
    return float(kernel_matrix(kernel, a[None, :], b[None, :])[0, 0])


@dataclass(frozen=True)
class GpModel:
    kernel: Kernel
    x_train: np.ndarray     # (n, d) standardized inputs
    alpha: np.ndarray       # (n,) dual coefficients for standardized targets
    chol_lower: np.ndarray  # (n, n) L with L L^T = K + jitter I
    x_mean: np.ndarray
    x_std: np.ndarray
    y_mean: float
    y_std: float
    jitter: float


def _standardize_inputs(x: np.ndarray):
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return (x - mean) / std, mean, std


def _chol_with_escalation(k_matrix: np.ndarray, jitter: float):
    """Cholesky of K + jitter I, escalating jitter tenfold up to MAX_JITTER."""
    n = k_matrix.shape[0]
    while True:
        try:
            lower = cholesky(k_matrix + jitter * np.eye(n), lower=True)
            return lower, jitter
        except np.linalg.LinAlgError:
            pass
        if jitter >= MAX_JITTER:
            raise SingularKernel(
                f"kernel matrix not positive definite at jitter {jitter:g}")
        jitter = min(jitter * 10.0, MAX_JITTER)


def _log_marginal_likelihood(theta: np.ndarray, kind: str, x: np.ndarray,
                             y: np.ndarray, jitter: float,
                             sq_dists_unit: np.ndarray) -> float:
    """LML at log-parameters theta = (log s2, log l_1..d).

    ``sq_dists_unit`` holds per-dimension squared differences so candidate
    rescalings avoid recomputing pairwise geometry.
    """
    variance = np.exp(theta[0])
    inv_l2 = np.exp(-2.0 * theta[1:])
    r2 = np.tensordot(inv_l2, sq_dists_unit, axes=1)
    if kind == "RBF":
        k_matrix = variance * np.exp(-0.5 * r2)
    else:
        r = np.sqrt(np.clip(r2, 0.0, None))
        sqrt5_r = np.sqrt(5.0) * r
        k_matrix = variance * (1.0 + sqrt5_r + (5.0 / 3.0) * r2) * np.exp(-sqrt5_r)
    n = len(y)
    try:
        lower = cholesky(k_matrix + jitter * np.eye(n), lower=True)
    except np.linalg.LinAlgError:
        return -np.inf
    alpha = cho_solve((lower, True), y)
    return float(-0.5 * (y @ alpha) - np.sum(np.log(np.diag(lower)))
                 - 0.5 * n * np.log(2.0 * np.pi))


def gp_fit(x, y, kind: str = "Matern52", jitter: float = DEFAULT_JITTER) -> GpModel:
    """Fit a GP with maximum-marginal-likelihood hyperparameters.

    Raises DegenerateInputs for constant targets, fewer than two points or
    non-finite entries; SingularKernel if factorization fails at the
    maximum jitter escalation.
    """
    if kind not in KERNEL_KINDS:
        raise ConfigInvalid(f"unknown kernel kind '{kind}'")
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    n, d = x.shape
    if n < 2:
        raise DegenerateInputs(f"need at least 2 training points, got {n}")
    if y.shape[0] != n:
        raise ShapeMismatch(f"{n} inputs vs {y.shape[0]} targets")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise DegenerateInputs("training data contains non-finite entries")
    if np.ptp(y) == 0.0:
        raise DegenerateInputs("targets are constant; nothing to regress")

    x_std, x_mean, x_scale = _standardize_inputs(x)
    y_mean = float(np.mean(y))
    y_scale = float(np.std(y))
    y_std = (y - y_mean) / y_scale

    # per-dimension squared differences, reused across all candidates
    diff = x_std[:, None, :] - x_std[None, :, :]
    sq_dists_unit = np.ascontiguousarray(np.moveaxis(diff * diff, 2, 0))

    lower_b = np.concatenate([[_VAR_BOUNDS[0]], np.full(d, _LS_BOUNDS[0])])
    upper_b = np.concatenate([[_VAR_BOUNDS[1]], np.full(d, _LS_BOUNDS[1])])

    # search directions: each parameter alone, plus the variance/lengthscale
    # ridge (variance scales with the square of the lengthscales on smooth
    # targets, which single-coordinate moves cannot climb)
    directions = [np.eye(1 + d)[c] for c in range(1 + d)]
    ridge = np.concatenate([[2.0], np.ones(d)])
    directions.append(ridge)

    theta = np.zeros(1 + d)  # start at s2 = 1, l_d = 1
    for span in _SWEEP_SPANS:
        for direction in directions:
            best_theta = theta
            best_lml = -np.inf
            for offset in np.linspace(-span, span, _GRID_POINTS):
                trial = np.clip(theta + offset * direction, lower_b, upper_b)
                lml = _log_marginal_likelihood(trial, kind, x_std, y_std,
                                               jitter, sq_dists_unit)
                if lml > best_lml:
                    best_lml = lml
                    best_theta = trial
            theta = best_theta

    kernel = Kernel(kind=kind, variance=float(np.exp(theta[0])),
                    lengthscales=np.exp(theta[1:]))
    k_matrix = kernel_matrix(kernel, x_std, x_std)
    lower, final_jitter = _chol_with_escalation(k_matrix, jitter)
    alpha = cho_solve((lower, True), y_std)
    return GpModel(kernel=kernel, x_train=x_std, alpha=alpha, chol_lower=lower,
                   x_mean=x_mean, x_std=x_scale, y_mean=y_mean, y_std=y_scale,
                   jitter=final_jitter)


def gp_predict(model: GpModel, x_query) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance (clamped at zero) per query point."""
    xq = np.atleast_2d(np.asarray(x_query, dtype=np.float64))
    if xq.shape[1] != model.x_train.shape[1]:
        raise ShapeMismatch(
            f"query dim {xq.shape[1]} vs model dim {model.x_train.shape[1]}")
    xq_std = (xq - model.x_mean) / model.x_std
    k_star = kernel_matrix(model.kernel, model.x_train, xq_std)  # (n, q)
    mean_std = k_star.T @ model.alpha
    v = solve_triangular(model.chol_lower, k_star, lower=True)
    var_std = model.kernel.variance - np.einsum("ij,ij->j", v, v)
    var_std = np.clip(var_std, 0.0, None)
    mean = model.y_mean + model.y_std * mean_std
    var = (model.y_std ** 2) * var_std
    return mean, var
