"""Snapshot proper orthogonal decomposition (snapshot PCA).

Snapshots are rows of an (s, N) matrix.  The basis holds the columnwise
mean and the top-k orthonormal modes of the centered matrix; when N > s
the modes come from an eigen-decomposition of the small s-by-s Gram matrix
instead of a dense SVD.  Mode signs follow a fixed convention (the entry
of largest magnitude is positive) so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RankDeficient, ShapeMismatch

#: singular values at or below this fraction of the largest do not count
#: towards the numerical rank
RANK_RTOL = 1e-12


@dataclass(frozen=True)
class PodBasis:
    mean: np.ndarray              # (N,)
    modes: np.ndarray             # (N, k), orthonormal columns
    singular_values: np.ndarray   # (k,), non-increasing

    @property
    def n_modes(self) -> int:
        return self.modes.shape[1]


def _fix_signs(modes: np.ndarray) -> np.ndarray:
    for j in range(modes.shape[1]):
        pivot = np.argmax(np.abs(modes[:, j]))
        if modes[pivot, j] < 0:
            modes[:, j] = -modes[:, j]
    return modes


def snapshot_singular_values(snapshots) -> np.ndarray:
    """All singular values of the centered snapshot matrix (descending)."""
    a = np.asarray(snapshots, dtype=np.float64)
    centered = a - a.mean(axis=0)
    s, n = centered.shape
    if n > s:
        gram = centered @ centered.T
        eigvals = np.linalg.eigvalsh(gram)[::-1]
        return np.sqrt(np.clip(eigvals, 0.0, None))
    return np.linalg.svd(centered, compute_uv=False)


def pod_fit(snapshots, k: int) -> PodBasis:
    """Top-k modes of the centered (s, N) snapshot matrix.

    Raises RankDeficient when k exceeds the numerical rank (relative
    tolerance RANK_RTOL on singular values) or min(s, N).
    """
    a = np.asarray(snapshots, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeMismatch(f"snapshots must be 2-D, got shape {a.shape}")
    s, n = a.shape
    if not 1 <= k <= min(s, n):
        raise RankDeficient(
            f"mode count {k} outside [1, min(s={s}, N={n})]")

    mean = a.mean(axis=0)
    centered = a - mean

    if n > s:
        gram = centered @ centered.T
        eigvals, eigvecs = np.linalg.eigh(gram)
        order = np.argsort(eigvals)[::-1]
        eigvals = eigvals[order]
        eigvecs = eigvecs[:, order]
        sv = np.sqrt(np.clip(eigvals, 0.0, None))
        _check_rank(sv, k)
        modes = centered.T @ eigvecs[:, :k] / sv[:k]
        # Gram-route modes lose orthogonality when values decay; re-polish
        modes, r = np.linalg.qr(modes)
        modes = modes * np.sign(np.diag(r))
        sv_k = sv[:k]
    else:
        u, sv, vt = np.linalg.svd(centered, full_matrices=False)
        _check_rank(sv, k)
        modes = vt[:k].T.copy()
        sv_k = sv[:k]

    modes = _fix_signs(np.ascontiguousarray(modes))
    modes.setflags(write=False)
    mean.setflags(write=False)
    sv_k = np.ascontiguousarray(sv_k)
    sv_k.setflags(write=False)
    return PodBasis(mean=mean, modes=modes, singular_values=sv_k)


def _check_rank(sv: np.ndarray, k: int) -> None:
    if sv[0] <= 0.0:
        raise RankDeficient("centered snapshot matrix is zero (rank 0)")
    if sv[k - 1] <= RANK_RTOL * sv[0]:
        rank = int(np.sum(sv > RANK_RTOL * sv[0]))
        raise RankDeficient(
            f"requested {k} modes but numerical rank is {rank}")


def numerical_rank(snapshots) -> int:
    """Rank of the centered snapshot matrix at the RANK_RTOL tolerance."""
    sv = snapshot_singular_values(snapshots)
    if sv.size == 0 or sv[0] <= 0.0:
        return 0
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def mean_only_basis(snapshots) -> PodBasis:
    """Degenerate zero-mode basis: projection yields an empty coefficient
    vector and reconstruction returns the mean."""
    a = np.asarray(snapshots, dtype=np.float64)
    mean = a.mean(axis=0)
    mean.setflags(write=False)
    modes = np.zeros((a.shape[1], 0))
    modes.setflags(write=False)
    return PodBasis(mean=mean, modes=modes,
                    singular_values=np.zeros(0))


def pod_project(basis: PodBasis, field) -> np.ndarray:
    """Coefficients of the field in the mode subspace: modes^T (f - mean)."""
    f = np.asarray(field, dtype=np.float64)
    if f.shape != basis.mean.shape:
        raise ShapeMismatch(
            f"field shape {f.shape} does not match basis size "
            f"{basis.mean.shape}")
    return basis.modes.T @ (f - basis.mean)


def pod_reconstruct(basis: PodBasis, coefficients) -> np.ndarray:
    """mean + modes @ coefficients."""
    c = np.asarray(coefficients, dtype=np.float64)
    if c.shape != (basis.n_modes,):
        raise ShapeMismatch(
            f"coefficient shape {c.shape} does not match mode count "
            f"{basis.n_modes}")
    return basis.mean + basis.modes @ c
