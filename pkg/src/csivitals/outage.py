"""Noise-floor estimation, outage intervals and fade statistics.

All statistics run on the 7.5 s power-window grid of the first projection.
An outage is a window whose power does not exceed the noise floor while the
reference device still reports breathing; runs of outage windows coalesce
into intervals split at the five-minute boundary into small and large scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WINDOW_SECONDS = 7.5
LARGE_OUTAGE_MINUTES = 5.0


@dataclass
class OutageInterval:
    start_s: float
    end_s: float
    scale: str  # "small" | "large"

    def __post_init__(self):
        if self.end_s <= self.start_s:
            raise ValueError("end_s must be greater than start_s")
        if self.scale not in ("small", "large"):
            raise ValueError(f"unknown scale {self.scale!r}")

    @property
    def duration_min(self) -> float:
        return (self.end_s - self.start_s) / 60.0


def estimate_noise_floor(
    power: np.ndarray, percentile: float = 10.0, min_windows: int = 40
) -> float:
    """Low percentile of per-window mean power over the calibration span.

    A low percentile keeps the estimate robust to motion contamination during
    calibration.  Requires at least ``min_windows`` windows (5 minutes at the
    7.5 s grid).
    """
    power = np.asarray(power, dtype=np.float64)
    if len(power) < min_windows:
        raise ValueError(
            f"insufficient calibration data: {len(power)} windows < {min_windows}"
        )
    return float(np.percentile(power, percentile))


def detect_outage(
    power: np.ndarray,
    breathing_mask: np.ndarray,
    noise_floor: float,
    t0: float = 0.0,
    window_s: float = WINDOW_SECONDS,
    large_minutes: float = LARGE_OUTAGE_MINUTES,
) -> list[OutageInterval]:
    """Coalesce windows with power <= floor while ground truth breathes.

    Intervals strictly longer than ``large_minutes`` are large scale, the
    rest small.
    """
    power = np.asarray(power, dtype=np.float64)
    mask = (power <= noise_floor) & np.asarray(breathing_mask, dtype=bool)
    intervals: list[OutageInterval] = []
    start = None
    for i, flag in enumerate(np.append(mask, False)):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            dur_min = (i - start) * window_s / 60.0
            intervals.append(
                OutageInterval(
                    start_s=t0 + start * window_s,
                    end_s=t0 + i * window_s,
                    scale="large" if dur_min > large_minutes else "small",
                )
            )
            start = None
    return intervals


def level_crossing_rate(
    power: np.ndarray, threshold: float, span_hours: float
) -> float:
    """Downward crossings of the threshold per hour.

    A crossing is a sample above the threshold followed by one at or below
    it (the standard convention for fade statistics).
    """
    if span_hours <= 0:
        raise ValueError("span must be positive")
    power = np.asarray(power, dtype=np.float64)
    crossings = int(np.sum((power[:-1] > threshold) & (power[1:] <= threshold)))
    return crossings / span_hours


def average_fade_duration(
    power: np.ndarray,
    threshold: float,
    window_s: float = WINDOW_SECONDS,
    large_minutes: float = LARGE_OUTAGE_MINUTES,
) -> tuple[float | None, float | None, list[float]]:
    """Mean duration of below-threshold runs, split at the 5-minute boundary.

    Returns (small mean, large mean, all durations), durations in minutes;
    an empty class yields None.
    """
    power = np.asarray(power, dtype=np.float64)
    below = power <= threshold
    durations: list[float] = []
    run = 0
    for flag in np.append(below, False):
        if flag:
            run += 1
        elif run:
            durations.append(run * window_s / 60.0)
            run = 0
    small = [d for d in durations if d <= large_minutes]
    large = [d for d in durations if d > large_minutes]
    small_mean = float(np.mean(small)) if small else None
    large_mean = float(np.mean(large)) if large else None
    return small_mean, large_mean, durations
