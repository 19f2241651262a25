"""Raw CSI conditioning: differencing, smoothing and epoch partitioning.

The stream pipeline is first-order difference -> amplitude -> median filter
-> exponential moving average -> Butterworth low-pass, applied with identical
coefficients on every channel so cross-channel timing is preserved, followed
by 30 s epoching and fixed-length downsampling.  Filtering happens on the
continuous stream before epoch boundaries are drawn.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import signal as sp_signal

from .core import CsiFrame, Epoch, RealChannelMatrix, StreamConfig, frames_to_arrays


def first_difference_amplitude(frames) -> RealChannelMatrix:
    """Magnitude of the per-channel first difference of a CSI stream.

    Removes any static channel component exactly.  Accepts a sequence of
    CsiFrame or a pre-stacked (timestamps, tensor) pair.  Output row k holds
    |csi[k+1] - csi[k]| and inherits the timestamp of the later frame.
    """
    if isinstance(frames, tuple):
        t, tensor = frames
    else:
        t, tensor = frames_to_arrays(list(frames))
    if len(t) < 2:
        raise ValueError("need at least 2 frames to difference")
    flat = tensor.reshape(len(t), -1)
    diff = np.abs(flat[1:] - flat[:-1])
    dt = np.median(np.diff(t))
    return RealChannelMatrix(diff, sample_rate=1.0 / dt, timestamps=t[1:])


def median_filter(x: np.ndarray, window: int) -> np.ndarray:
    """Running median with a centered window that shrinks at the edges.

    Works on 1-D series or 2-D [time, channel] matrices (filtered along time).
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be odd and >= 1")
    x = np.asarray(x, dtype=np.float64)
    if window == 1 or len(x) == 0:
        return x.copy()
    half = window // 2
    squeeze = x.ndim == 1
    mat = x[:, None] if squeeze else x
    n = len(mat)
    out = np.empty_like(mat)
    if n >= window:
        core = np.median(
            np.lib.stride_tricks.sliding_window_view(mat, window, axis=0), axis=-1
        )
        out[half : n - half] = core
    for k in range(min(half, n)):
        out[k] = np.median(mat[: k + half + 1], axis=0)
    for k in range(max(n - half, 0), n):
        out[k] = np.median(mat[k - half :], axis=0)
    return out[:, 0] if squeeze else out


def ema_filter(x: np.ndarray, smoothing: float) -> np.ndarray:
    """Exponential moving average y[k] = a*y[k-1] + (1-a)*x[k], y[0] = x[0]."""
    if not (0.0 < smoothing <= 1.0):
        raise ValueError("smoothing must be in (0, 1]")
    x = np.asarray(x, dtype=np.float64)
    if len(x) == 0:
        raise ValueError("series must be nonempty")
    a = smoothing
    zi = a * np.atleast_1d(x[0])[None, :] if x.ndim == 2 else np.array([a * x[0]])
    y, _ = sp_signal.lfilter([1.0 - a], [1.0, -a], x, axis=0, zi=zi)
    return y


def butterworth_lowpass(x: np.ndarray, cutoff_rad_per_sample: float, order: int) -> np.ndarray:
    """Causal Butterworth low-pass at a cutoff given in rad/sample."""
    sos = design_lowpass(cutoff_rad_per_sample, order)
    return sp_signal.sosfilt(sos, np.asarray(x, dtype=np.float64), axis=0)


def design_lowpass(cutoff_rad_per_sample: float, order: int) -> np.ndarray:
    """Second-order-section coefficients for the shared low-pass design."""
    if not (0.0 < cutoff_rad_per_sample < np.pi):
        raise ValueError("cutoff must be in (0, pi) rad/sample")
    if order < 1:
        raise ValueError("order must be >= 1")
    return sp_signal.butter(order, cutoff_rad_per_sample / np.pi, output="sos")


def epochize(matrix: RealChannelMatrix, config: StreamConfig) -> list[Epoch]:
    """Partition a stream into wall-clock epochs anchored at the stream start.

    The final epoch is kept and flagged partial when the stream ends before
    the epoch's nominal end.
    """
    n = len(matrix.samples)
    if n == 0:
        return []
    t0 = matrix.timestamps[0]
    rel = matrix.timestamps - t0
    idx = np.floor(rel / config.epoch_seconds).astype(int)
    epochs: list[Epoch] = []
    n_epochs = int(idx[-1]) + 1
    dt = 1.0 / matrix.sample_rate
    for e in range(n_epochs):
        mask = idx == e
        data = matrix.samples[mask]
        start = t0 + e * config.epoch_seconds
        is_last = e == n_epochs - 1
        partial = is_last and (
            matrix.timestamps[-1] < start + config.epoch_seconds - dt
        )
        epochs.append(Epoch(index=e, start_s=float(start), data=data, partial=partial))
    return epochs


def downsample_epoch(epoch: Epoch, target: int = 600) -> Epoch:
    """Resample an epoch to exactly ``target`` samples per channel.

    Longer epochs are decimated by uniform index selection; shorter ones are
    zero-padded at the tail.  A full 30 s epoch at 600 samples has an
    effective rate of 20 Hz.
    """
    data = np.asarray(epoch.data, dtype=np.float64)
    n = len(data)
    if n == 0:
        raise ValueError("epoch is empty")
    if n == target:
        out = data.copy()
    elif n > target:
        sel = (np.arange(target) * n) // target
        out = data[sel]
    else:
        out = np.zeros((target, data.shape[1]), dtype=np.float64)
        out[:n] = data
    return Epoch(
        index=epoch.index, start_s=epoch.start_s, data=out, partial=epoch.partial
    )
