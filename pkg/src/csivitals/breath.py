"""Breath extraction from the first PCA projection.

The projection stream (20 Hz) is band-limited to the human breathing range,
max-min normalized per window and scanned with a three-stage peak detector
(prominence, then distance suppression, then strength against the median
peak).  BPM every second is the peak count in the trailing 60 s window, with
motion samples excised and low-presence windows suppressed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sp_signal

BREATH_BAND_BPM = (10.0, 40.0)


@dataclass
class PeakParams:
    """Peak filter thresholds on the max-min normalized unit scale."""

    min_prominence: float = 0.025
    min_distance_s: float = 1.5
    min_strength: float = 0.6

    def __post_init__(self):
        if min(self.min_prominence, self.min_distance_s, self.min_strength) <= 0:
            raise ValueError("peak parameters must be positive")
        if self.min_prominence >= 1:
            raise ValueError("min_prominence must be < 1")


@dataclass
class BpmSample:
    """Per-second rate estimate; bpm is None when the window was gated."""

    t_s: float
    bpm: int | None
    confidence: float = 0.0

    def __post_init__(self):
        if self.bpm is not None and not (0 <= self.bpm <= 60):
            raise ValueError("bpm out of range [0, 60]")


def design_bandpass(rate_hz: float, order: int = 2) -> np.ndarray:
    """Butterworth band-pass sections for the 10-40 BPM breathing band."""
    low, high = BREATH_BAND_BPM[0] / 60.0, BREATH_BAND_BPM[1] / 60.0
    if rate_hz / 2 <= high:
        raise ValueError(f"rate {rate_hz} Hz too low for a {high} Hz band edge")
    return sp_signal.butter(order, [low, high], btype="bandpass", fs=rate_hz, output="sos")


def bandpass_breath(x: np.ndarray, rate_hz: float = 20.0, order: int = 2) -> np.ndarray:
    """Causal band-pass of a projection series to the breathing band."""
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("series must be nonempty")
    return sp_signal.sosfilt(design_bandpass(rate_hz, order), x)


def maxmin_normalize(x: np.ndarray) -> tuple[np.ndarray, bool]:
    """Scale a series to [0, 1]; flat series map to zeros with a degenerate flag.

    Invariant under any positive affine transform of the input, which is what
    removes the placement-dependent scale from the breath waveform.
    """
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("series must be nonempty")
    span = x.max() - x.min()
    if span < 1e-12:
        return np.zeros_like(x), True
    return (x - x.min()) / span, False


def detect_peaks(x: np.ndarray, params: PeakParams, rate_hz: float) -> np.ndarray:
    """Indices of breathing peaks in a normalized series, ascending.

    Filter order: topographic prominence >= min_prominence, then greedy
    suppression keeping higher peaks so survivors are at least
    min_distance_s * rate_hz samples apart, then value >= min_strength times
    the median value of the distance-filtered peaks.
    """
    x = np.asarray(x, dtype=np.float64)
    candidates, _ = sp_signal.find_peaks(x, prominence=params.min_prominence)
    if len(candidates) == 0:
        return np.empty(0, dtype=int)
    min_dist = params.min_distance_s * rate_hz
    order = sorted(range(len(candidates)), key=lambda i: (-x[candidates[i]], candidates[i]))
    kept: list[int] = []
    for i in order:
        pos = candidates[i]
        if all(abs(pos - candidates[j]) >= min_dist for j in kept):
            kept.append(i)
    survivors = np.sort(candidates[kept])
    median_value = float(np.median(x[survivors]))
    final = survivors[x[survivors] >= params.min_strength * median_value]
    return final.astype(int)


def breath_presence(
    power: np.ndarray, noise_floor: float, margin: float = 3.0
) -> np.ndarray:
    """Flag power windows whose mean power strictly exceeds floor * margin."""
    if noise_floor is None:
        raise ValueError("noise floor not established")
    return np.asarray(power, dtype=np.float64) > noise_floor * margin


def sliding_bpm(
    projection: np.ndarray,
    *,
    rate_hz: float = 20.0,
    t0: float = 0.0,
    params: PeakParams | None = None,
    window_samples: int = 1200,
    hop_samples: int = 20,
    present_mask: np.ndarray | None = None,
    motion_mask: np.ndarray | None = None,
    bandpass_order: int = 2,
    min_usable_frac: float = 0.5,
) -> list[BpmSample]:
    """Per-second BPM over a sliding window of the concatenated projection.

    The stream is band-passed once (causal, one design for the whole night).
    Every ``hop_samples`` a trailing ``window_samples`` window is evaluated:
    samples inside motion events are excised before detection, windows with
    fewer than half their samples flagged present (or left after excision)
    yield bpm None.  The window spans exactly one minute at the default
    sizes, so the peak count is the per-minute rate.
    """
    params = params or PeakParams()
    x = np.asarray(projection, dtype=np.float64)
    n = len(x)
    if n == 0:
        return []
    present = (
        np.ones(n, dtype=bool) if present_mask is None else np.asarray(present_mask, bool)
    )
    motion = (
        np.zeros(n, dtype=bool) if motion_mask is None else np.asarray(motion_mask, bool)
    )
    z = bandpass_breath(x, rate_hz, order=bandpass_order)
    out: list[BpmSample] = []
    for end in range(window_samples, n + 1, hop_samples):
        t_emit = t0 + end / rate_hz
        sl = slice(end - window_samples, end)
        pres_frac = float(np.mean(present[sl]))
        usable = present[sl] & ~motion[sl]
        usable_frac = float(np.mean(usable))
        if pres_frac < min_usable_frac or usable_frac < min_usable_frac:
            out.append(BpmSample(t_emit, None, 0.0))
            continue
        seg = z[sl][usable]
        norm, degenerate = maxmin_normalize(seg)
        if degenerate:
            out.append(BpmSample(t_emit, 0, usable_frac))
            continue
        peaks = detect_peaks(norm, params, rate_hz)
        out.append(BpmSample(t_emit, int(len(peaks)), usable_frac))
    return out
