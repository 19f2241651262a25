"""Per-epoch PCA over the channel dimension.

Breathing concentrates in the first principal projection; body and limb
motion spreads energy into the lower projections (3-5 by convention), which
is what the motion detector watches.  Components are indexed 1-based
throughout ("projection 1" is the dominant one).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Epoch


@dataclass
class SubspaceSelection:
    """Which projections carry breath and which reveal body motion (1-based)."""

    breath_component: int = 1
    motion_components: tuple[int, ...] = (3, 4, 5)

    def __post_init__(self):
        self.motion_components = tuple(self.motion_components)
        if self.breath_component < 1 or min(self.motion_components) < 1:
            raise ValueError("component indices are 1-based")


def pca_fit_project(epoch: Epoch, p: int = 5, prev: Epoch | None = None) -> Epoch:
    """Fit PCA on an epoch's channel covariance and attach top-p projections.

    Columns are mean-centered; directions are eigenvectors of the channel
    covariance, ordered by decreasing eigenvalue.  Each direction's sign is
    chosen so its projection correlates nonnegatively with the previous
    epoch's same-index projection (first epoch: the largest-magnitude loading
    is made positive), which makes projections concatenable across epochs.
    Zero-variance epochs yield all-zero projections without error.
    """
    data = np.asarray(epoch.data, dtype=np.float64)
    n, channels = data.shape
    if p < 5:
        raise ValueError("p must be >= 5 (motion tracking needs projections 3-5)")
    if p > channels:
        raise ValueError(f"p={p} exceeds channel count {channels}")
    if not np.all(np.isfinite(data)):
        raise ValueError("epoch data must be finite")

    centered = data - data.mean(axis=0, keepdims=True)
    total_var = float((centered**2).sum())
    if n < 2 or total_var < 1e-24:
        epoch.projections = np.zeros((n, p))
        epoch.explained_power = np.zeros(p)
        return epoch

    cov = (centered.T @ centered) / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:p]
    values = np.clip(eigvals[order], 0.0, None)
    directions = eigvecs[:, order]

    projections = centered @ directions
    for j in range(p):
        flip = False
        if (
            prev is not None
            and prev.projections is not None
            and j < prev.projections.shape[1]
        ):
            if float(projections[:, j] @ prev.projections[:, j]) < 0:
                flip = True
        else:
            w = directions[:, j]
            if w[int(np.argmax(np.abs(w)))] < 0:
                flip = True
        if flip:
            directions[:, j] = -directions[:, j]
            projections[:, j] = -projections[:, j]

    epoch.projections = projections
    epoch.explained_power = values
    return epoch


def projection_power(epoch: Epoch, component: int, window_samples: int = 150) -> np.ndarray:
    """Mean squared projection value over consecutive windows (1-based component).

    The default window is a quarter epoch (150 samples, 7.5 s at 20 Hz).
    Trailing samples that do not fill a window are dropped.
    """
    if epoch.projections is None:
        raise ValueError("epoch has no fitted projections")
    proj = epoch.projections[:, component - 1]
    if window_samples > len(proj):
        raise ValueError("window exceeds epoch length")
    n_win = len(proj) // window_samples
    trimmed = proj[: n_win * window_samples]
    return (trimmed.reshape(n_win, window_samples) ** 2).mean(axis=1)
