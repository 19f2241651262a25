"""Online hyper-ellipsoidal outlier detection over lower PCA projections.

Motion-free samples of the selected projections cluster inside the
hyper-ellipsoid {r : sqrt((r-m)^T S^-1 (r-m)) <= t} whose radius t is set
from the chi-squared quantile enclosing the desired fraction of normal data.
The mean and inverse covariance are tracked online with exponential
forgetting; the inverse is updated directly through a rank-one
Sherman-Morrison step so no matrix inversion happens in the streaming path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as sp_special

K_CAP = 10**6


def chi2_radius(d: int, coverage: float = 0.98) -> float:
    """Ellipsoid radius t with t^2 the chi-squared quantile at ``coverage``.

    Computed by inverting the regularized lower incomplete gamma function
    (the chi-squared CDF with d degrees of freedom is P(d/2, x/2)).
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if not (0.0 < coverage < 1.0):
        raise ValueError("coverage must be in (0, 1)")
    return float(np.sqrt(2.0 * sp_special.gammaincinv(d / 2.0, coverage)))


@dataclass
class EllipsoidState:
    """Running cluster state: count, mean, inverse covariance and radius."""

    k: int
    mean: np.ndarray
    inv_cov: np.ndarray
    radius: float
    forgetting: float = 0.9995

    @property
    def dims(self) -> int:
        return len(self.mean)


@dataclass
class MotionEvent:
    """Merged run of consecutive-outlier micro-events."""

    start_s: float
    end_s: float
    micro_event_count: int
    peak_mahalanobis: float

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise ValueError("end_s must be greater than start_s")
        if self.micro_event_count < 1:
            raise ValueError("micro_event_count must be >= 1")

    @property
    def duration_s(self) -> float:
        return self.end_s - self.start_s


def ellipsoid_init(
    samples: np.ndarray,
    coverage: float = 0.98,
    forgetting: float = 0.9995,
    ridge_epsilon: float = 1e-6,
) -> EllipsoidState:
    """Batch-initialize the cluster from the first k0 samples.

    Covariance is the second-moment form S = E[rr^T] - m m^T.  Near-singular
    S gets a ridge eps*I (eps from the trace, floored at ridge_epsilon) so
    zero-variance streams do not crash the detector; rank deficiency that
    survives the ridge raises.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError("samples must be [k0, d]")
    k0, d = x.shape
    if k0 <= d:
        raise ValueError(f"need more than d={d} samples to initialize, got {k0}")
    mean = x.mean(axis=0)
    second = (x.T @ x) / k0
    cov = second - np.outer(mean, mean)
    cov = 0.5 * (cov + cov.T)

    def try_inv(s):
        try:
            np.linalg.cholesky(s)
        except np.linalg.LinAlgError:
            return None
        return np.linalg.inv(s)

    inv = try_inv(cov)
    if inv is None:
        eps = max(ridge_epsilon, 1e-6 * float(np.trace(cov)) / d)
        inv = try_inv(cov + eps * np.eye(d))
        if inv is None:
            raise ValueError("covariance rank-deficient even after ridge")
    inv = 0.5 * (inv + inv.T)
    return EllipsoidState(
        k=k0,
        mean=mean,
        inv_cov=inv,
        radius=chi2_radius(d, coverage),
        forgetting=forgetting,
    )


def ellipsoid_update(
    state: EllipsoidState, r: np.ndarray
) -> tuple[EllipsoidState, float, bool]:
    """Score one sample against the pre-update state, then absorb it.

    The Mahalanobis distance and the outlier decision use the statistics from
    before this sample, so a motion sample cannot contaminate the boundary
    that judges it.  Mean and inverse covariance then receive the
    exponential-forgetting update

        m      <- a m + (1-a) r
        S      <- a S + a (1-a) dd^T          (d = r - m_pre)
        S^-1   <- (S^-1 - S^-1 d d^T S^-1 / (1/(1-a) + d^T S^-1 d)) / a

    where the inverse form is the exact Sherman-Morrison dual of the S
    recursion.  Returns (state, mahalanobis, outlier); state is updated in
    place.
    """
    r = np.asarray(r, dtype=np.float64)
    if not np.all(np.isfinite(r)):
        raise ValueError("sample vector must be finite")
    a = state.forgetting
    delta = r - state.mean
    pd = state.inv_cov @ delta
    q = float(delta @ pd)
    mahal = float(np.sqrt(max(q, 0.0)))
    outlier = mahal > state.radius

    state.mean = a * state.mean + (1.0 - a) * r
    denom = 1.0 / (1.0 - a) + q
    inv = (state.inv_cov - np.outer(pd, pd) / denom) / a
    state.inv_cov = 0.5 * (inv + inv.T)
    state.k = min(state.k + 1, K_CAP)
    return state, mahal, outlier


def detect_events(
    times: np.ndarray,
    outliers: np.ndarray,
    e1: int,
    e2: int,
    mahalanobis: np.ndarray | None = None,
) -> list[MotionEvent]:
    """Form motion events from a time-ordered outlier flag series.

    A run of at least ``e1`` consecutive outliers is a micro-event.
    Micro-events separated by at most ``e2`` samples merge into one event
    spanning first start to last end, gap samples included.  Event end times
    are exclusive (last flagged sample plus one sample period).
    """
    times = np.asarray(times, dtype=np.float64)
    flags = np.asarray(outliers, dtype=bool)
    if len(times) != len(flags):
        raise ValueError("times and flags must have equal length")
    if len(times) == 0:
        return []
    period = float(np.median(np.diff(times))) if len(times) > 1 else 1.0

    runs = []
    start = None
    for i, f in enumerate(flags):
        if f and start is None:
            start = i
        elif not f and start is not None:
            if i - start >= e1:
                runs.append((start, i - 1))
            start = None
    if start is not None and len(flags) - start >= e1:
        runs.append((start, len(flags) - 1))

    events: list[MotionEvent] = []
    merged: list[list[int]] = []
    for i0, i1 in runs:
        if merged and i0 - merged[-1][1] - 1 <= e2:
            merged[-1][1] = i1
            merged[-1][2] += 1
        else:
            merged.append([i0, i1, 1])
    for i0, i1, count in merged:
        peak = 0.0
        if mahalanobis is not None:
            peak = float(np.max(mahalanobis[i0 : i1 + 1]))
        events.append(
            MotionEvent(
                start_s=float(times[i0]),
                end_s=float(times[i1]) + period,
                micro_event_count=count,
                peak_mahalanobis=peak,
            )
        )
    return events
