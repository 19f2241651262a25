"""Synthetic time-varying channel frequency response generator.

Models the channel seen by a receiver as a static component plus dynamic
multipath reflections whose path lengths are modulated by breathing or limb
motion.  For each subcarrier wavelength lambda the dynamic part of the CFR is

    sum_i  K / D_i(t)^2 * exp(j 2 pi D_i(t) / lambda),   D_i(t) = D0_i + d_i(t)

The module also provides an analytic closed form for the breathing waveform
carried by the first-difference amplitude of such a channel, used as an
independent reference by the tests, and a generator of labeled "night" scenes
that the rest of the package is exercised against.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import signal as sp_signal

from .core import CsiFrame, GroundTruthRecord

SPEED_OF_LIGHT = 299_792_458.0
DEFAULT_CENTER_FREQ_HZ = 5.32e9
DEFAULT_SUBCARRIER_SPACING_HZ = 312_500.0

BREATH_RATE_MIN = 10.0
BREATH_RATE_MAX = 40.0


class UnsupportedTrajectoryError(ValueError):
    """Trajectory has no analytic velocity."""


@dataclass
class BreathingSinusoid:
    """Sinusoidal path-length modulation at a fixed breaths-per-minute rate.

    The motion can be restricted to an active window (a sleeper entering the
    monitored area at ``onset_s``); outside the window the path is static.
    Window edges are smoothed with a cosine ramp to avoid step transients.
    """

    rate_bpm: float
    amplitude_m: float
    phase_rad: float = 0.0
    onset_s: float = 0.0
    duration_s: float | None = None
    ramp_s: float = 5.0

    kind = "breathing_sinusoid"

    def __post_init__(self):
        if not (BREATH_RATE_MIN <= self.rate_bpm <= BREATH_RATE_MAX):
            raise ValueError(
                f"rate_bpm {self.rate_bpm} outside "
                f"[{BREATH_RATE_MIN}, {BREATH_RATE_MAX}]"
            )
        if self.amplitude_m < 0:
            raise ValueError("amplitude_m must be nonnegative")

    def max_displacement(self) -> float:
        return self.amplitude_m

    def _envelope(self, t: np.ndarray) -> np.ndarray:
        end = math.inf if self.duration_s is None else self.onset_s + self.duration_s
        env = ((t >= self.onset_s) & (t < end)).astype(float)
        if self.ramp_s > 0:
            rise = np.clip((t - self.onset_s) / self.ramp_s, 0.0, 1.0)
            env = env * 0.5 * (1 - np.cos(np.pi * rise))
            if math.isfinite(end):
                fall = np.clip((end - t) / self.ramp_s, 0.0, 1.0)
                env = env * 0.5 * (1 - np.cos(np.pi * fall))
        return env

    def active(self, t: float) -> bool:
        end = math.inf if self.duration_s is None else self.onset_s + self.duration_s
        return self.onset_s <= t < end

    def displacement(self, t: np.ndarray, rate_hz: float) -> np.ndarray:
        w = 2 * np.pi * self.rate_bpm / 60.0
        return self._envelope(t) * self.amplitude_m * np.sin(w * t + self.phase_rad)

    def velocity(self, t: np.ndarray) -> np.ndarray:
        """Analytic d'(t), valid on the steady (fully ramped) active window."""
        w = 2 * np.pi * self.rate_bpm / 60.0
        return self._envelope(t) * self.amplitude_m * w * np.cos(w * t + self.phase_rad)


@dataclass
class MotionBurst:
    """Band-limited random-walk displacement confined to a time window."""

    start_s: float
    duration_s: float
    amplitude_m: float
    seed: int = 0
    bandwidth_hz: float = 4.0
    taper: float = 0.25

    kind = "motion_burst"

    def __post_init__(self):
        if self.duration_s <= 0:
            raise ValueError("duration_s must be positive")
        if self.amplitude_m < 0:
            raise ValueError("amplitude_m must be nonnegative")

    def max_displacement(self) -> float:
        return self.amplitude_m

    def active(self, t: float) -> bool:
        return self.start_s <= t < self.start_s + self.duration_s

    def displacement(self, t: np.ndarray, rate_hz: float) -> np.ndarray:
        out = np.zeros_like(t)
        mask = (t >= self.start_s) & (t < self.start_s + self.duration_s)
        n = int(mask.sum())
        if n < 8:
            return out
        rng = np.random.default_rng(self.seed)
        walk = np.cumsum(rng.standard_normal(n))
        cutoff = min(self.bandwidth_hz, 0.45 * rate_hz / 2)
        sos = sp_signal.butter(2, cutoff, fs=rate_hz, output="sos")
        walk = sp_signal.sosfilt(sos, walk - walk.mean())
        walk *= sp_signal.windows.tukey(n, alpha=self.taper)
        peak = np.abs(walk).max()
        if peak > 0:
            walk *= self.amplitude_m / peak
        out[mask] = walk
        return out

    def velocity(self, t: np.ndarray) -> np.ndarray:
        raise UnsupportedTrajectoryError("motion_burst has no analytic velocity")


@dataclass
class Still:
    """A reflector that never moves."""

    kind = "still"

    def max_displacement(self) -> float:
        return 0.0

    def active(self, t: float) -> bool:
        return False

    def displacement(self, t: np.ndarray, rate_hz: float) -> np.ndarray:
        return np.zeros_like(t)

    def velocity(self, t: np.ndarray) -> np.ndarray:
        return np.zeros_like(t)


Trajectory = BreathingSinusoid | MotionBurst | Still


@dataclass
class DynamicPath:
    """One multipath reflection: a base path length plus a displacement law."""

    base_distance_m: float
    trajectory: Trajectory

    def __post_init__(self):
        if self.base_distance_m <= 0:
            raise ValueError("base_distance_m must be positive")
        if self.trajectory.max_displacement() > self.base_distance_m / 10:
            raise ValueError(
                "trajectory displacement exceeds base_distance_m / 10"
            )


@dataclass
class MultipathScene:
    """Static channel plus dynamic reflectors and a complex-noise model.

    ``static_cfr`` has shape (n_tx, n_rx, n_sub).  ``noise_sigma`` is the
    standard deviation of the additive complex noise per sample (total power
    across the real and imaginary parts).
    """

    static_cfr: np.ndarray
    paths: list[DynamicPath] = field(default_factory=list)
    center_freq_hz: float = DEFAULT_CENTER_FREQ_HZ
    subcarrier_spacing_hz: float = DEFAULT_SUBCARRIER_SPACING_HZ
    noise_sigma: float = 0.0
    k_constant: float = 1.0

    def __post_init__(self):
        self.static_cfr = np.asarray(self.static_cfr, dtype=np.complex128)
        if self.static_cfr.ndim != 3:
            raise ValueError("static_cfr must have shape (n_tx, n_rx, n_sub)")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be nonnegative")
        if self.wavelengths().min() <= 0:
            raise ValueError("wavelengths must be positive")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.static_cfr.shape  # type: ignore[return-value]

    def wavelengths(self) -> np.ndarray:
        """Per-subcarrier wavelength in meters, centered on center_freq_hz."""
        n_sub = self.static_cfr.shape[2]
        offsets = np.arange(n_sub) - (n_sub - 1) / 2.0
        freqs = self.center_freq_hz + offsets * self.subcarrier_spacing_hz
        return SPEED_OF_LIGHT / freqs


def generate_cfr_arrays(
    scene: MultipathScene, duration_s: float, rate_hz: float, seed: int = 0
) -> tuple[np.ndarray, np.ndarray, list[GroundTruthRecord]]:
    """Generate (timestamps, complex tensor [time, tx, rx, sub], labels).

    Deterministic given (scene, duration, rate, seed).  Ground truth labels
    each whole second: motion while any burst is active, else breathing with
    the slowest active breathing rate, else absent.
    """
    if duration_s <= 0:
        raise ValueError("duration_s must be positive")
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    n = int(round(duration_s * rate_hz))
    t = np.arange(n) / rate_hz
    lams = scene.wavelengths()
    n_tx, n_rx, n_sub = scene.dims

    dyn = np.zeros((n, n_sub), dtype=np.complex128)
    for path in scene.paths:
        d = path.trajectory.displacement(t, rate_hz)
        dist = path.base_distance_m + d
        amp = scene.k_constant / dist**2
        # phase per subcarrier: 2 pi D(t) / lambda_s
        dyn += amp[:, None] * np.exp(2j * np.pi * dist[:, None] / lams[None, :])

    tensor = np.broadcast_to(
        scene.static_cfr[None, :, :, :], (n, n_tx, n_rx, n_sub)
    ).copy()
    tensor += dyn[:, None, None, :]

    if scene.noise_sigma > 0:
        rng = np.random.default_rng(seed)
        shape = tensor.shape
        noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        tensor += scene.noise_sigma / np.sqrt(2) * noise

    labels = []
    for s in range(int(math.ceil(duration_s))):
        mid = s + 0.5
        if any(
            p.trajectory.kind == "motion_burst" and p.trajectory.active(mid)
            for p in scene.paths
        ):
            labels.append(GroundTruthRecord(float(s), "motion"))
            continue
        rates = [
            p.trajectory.rate_bpm
            for p in scene.paths
            if p.trajectory.kind == "breathing_sinusoid" and p.trajectory.active(mid)
        ]
        if rates:
            labels.append(GroundTruthRecord(float(s), "breathing", min(rates)))
        else:
            labels.append(GroundTruthRecord(float(s), "absent"))
    return t, tensor, labels


def generate_cfr(
    scene: MultipathScene, duration_s: float, rate_hz: float, seed: int = 0
) -> tuple[list[CsiFrame], list[GroundTruthRecord]]:
    """Generate a CSI frame stream plus per-second ground-truth labels."""
    t, tensor, labels = generate_cfr_arrays(scene, duration_s, rate_hz, seed)
    frames = [CsiFrame(float(ti), tensor[i]) for i, ti in enumerate(t)]
    return frames, labels


def breath_waveform(
    scene: MultipathScene, t_grid: np.ndarray, subcarrier: int = 0
) -> np.ndarray:
    """Analytic breathing waveform |sum_i d'_i(t) exp(j 2 pi d_i(t)/lambda)|.

    This is the closed form of the first-difference amplitude of the dynamic
    channel up to a constant scale, evaluated for one subcarrier.  Requires
    every moving trajectory to expose an analytic velocity.
    """
    if not scene.paths:
        raise ValueError("scene has no dynamic paths")
    t = np.asarray(t_grid, dtype=np.float64)
    lam = scene.wavelengths()[subcarrier]
    total = np.zeros_like(t, dtype=np.complex128)
    for path in scene.paths:
        v = path.trajectory.velocity(t)
        d = path.trajectory.displacement(t, rate_hz=0.0)
        c = scene.k_constant / path.base_distance_m**2
        theta0 = 2 * np.pi * path.base_distance_m / lam
        total += c * v * np.exp(1j * (theta0 + 2 * np.pi * d / lam))
    return np.abs(total)


def _maxmin(x: np.ndarray) -> np.ndarray:
    span = x.max() - x.min()
    if span < 1e-12:
        return np.zeros_like(x)
    return (x - x.min()) / span


def approximation_error(
    scene: MultipathScene,
    duration_s: float,
    rate_hz: float,
    subcarrier: int = 0,
) -> float:
    """Relative RMS gap between the simulated and analytic breath waveforms.

    Differentiates the generated complex channel numerically (central
    differences at the generation rate), max-min normalizes both it and the
    analytic waveform, and returns ||a - b|| / ||b||.  Requires a noiseless
    scene and a duration of at least one breath cycle.
    """
    if scene.noise_sigma != 0:
        raise ValueError("approximation_error requires noise_sigma = 0")
    rates = [
        p.trajectory.rate_bpm
        for p in scene.paths
        if p.trajectory.kind == "breathing_sinusoid"
    ]
    if rates and duration_s < 60.0 / min(rates):
        raise ValueError("duration shorter than one breath cycle")
    t, tensor, _ = generate_cfr_arrays(scene, duration_s, rate_hz, seed=0)
    h = tensor[:, 0, 0, subcarrier]
    dt = 1.0 / rate_hz
    numeric = np.abs(h[2:] - h[:-2]) / (2 * dt)
    oracle = breath_waveform(scene, t[1:-1], subcarrier=subcarrier)
    a, b = _maxmin(numeric), _maxmin(oracle)
    denom = np.sqrt(np.mean(b**2))
    if denom < 1e-12:
        return 0.0
    return float(np.sqrt(np.mean((a - b) ** 2)) / denom)


def path_phase_angle(base_distance_m: float, displacement_m: float, wavelength_m: float) -> float:
    """Phase angle of the differentiated path response, principal branch.

    arctan(pi D0 / lambda * (1 - 2 d / D0)); near-constant in d for room-scale
    D0, which is what makes the differentiated amplitude waveform usable
    without per-placement calibration.
    """
    if base_distance_m <= 0:
        raise ValueError("base_distance_m must be positive")
    if wavelength_m <= 0:
        raise ValueError("wavelength_m must be positive")
    arg = (np.pi * base_distance_m / wavelength_m) * (
        1.0 - 2.0 * displacement_m / base_distance_m
    )
    return float(np.arctan(arg))


def random_static_cfr(
    n_tx: int, n_rx: int, n_sub: int, magnitude: float = 1.0, seed: int = 0
) -> np.ndarray:
    """Static CFR with unit-ish magnitude and random per-entry phase."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0, 2 * np.pi, size=(n_tx, n_rx, n_sub))
    return magnitude * np.exp(1j * phases)


# Tuned reference geometry for labeled night scenes.  Three reflections of
# one breather with quadrature/diagonal motion phases and base distances
# micro-tuned so that the cross-path static phase differences suppress the
# even and odd harmonics that plain rectified single-path motion would leave
# in the first-difference amplitude.  With this geometry the waveform has a
# single dominant peak per breath cycle across the 10-40 BPM range.
_NIGHT_PATHS = (
    # (base D0 anchor, amplitude multiplier, trajectory phase, target static
    #  phase relative to path 1)
    (5.0, 1.0, 0.0, 0.0),
    (4.3, 0.589250, np.pi / 2, 0.278045),
    (3.6, 0.898000, np.pi / 4, 2.402505),
)
_NIGHT_BASE_AMPLITUDE = 0.004
_NIGHT_BURST_D0S = (4.05, 5.35, 6.45)


def _tune_distance(anchor_m: float, target_phase: float, reference_m: float, lam: float) -> float:
    """Smallest adjustment of anchor so the static phase relative to the
    reference path equals target_phase at the center wavelength."""
    beta = 2 * np.pi / lam
    want = beta * reference_m + target_phase
    have = beta * anchor_m
    k = round((want - have) / (2 * np.pi))
    best = None
    for kk in (k - 1, k, k + 1):
        delta = (want + 2 * np.pi * kk - have) / beta
        if best is None or abs(delta) < abs(best):
            best = delta
    return anchor_m + best


def standard_night_scene(
    rate_bpm: float,
    *,
    noise_sigma: float = 2e-5,
    breath_onset_s: float = 600.0,
    breath_duration_s: float | None = None,
    bursts: Sequence[tuple[float, float]] = (),
    burst_amplitude_m: float = 0.25,
    n_tx: int = 1,
    n_rx: int = 1,
    n_sub: int = 30,
    static_seed: int = 7,
    burst_seed: int = 1000,
    amplitude_scale: float = 1.0,
) -> MultipathScene:
    """Labeled full-night scene: quiet lead-in, then steady breathing.

    The quiet stretch before ``breath_onset_s`` gives the pipeline a genuine
    noise-only span for floor calibration.  ``bursts`` is a sequence of
    (start_s, duration_s) body-motion windows; each burst is realized as
    several reflections at distinct base distances so the motion excites more
    than one subspace component, the way limb motion does.
    """
    lam_center = SPEED_OF_LIGHT / DEFAULT_CENTER_FREQ_HZ
    paths = []
    ref = _NIGHT_PATHS[0][0]
    for anchor, amp_mult, psi, theta in _NIGHT_PATHS:
        d0 = anchor if theta == 0.0 else _tune_distance(anchor, theta, ref, lam_center)
        paths.append(
            DynamicPath(
                d0,
                BreathingSinusoid(
                    rate_bpm,
                    _NIGHT_BASE_AMPLITUDE * amp_mult * amplitude_scale,
                    phase_rad=psi,
                    onset_s=breath_onset_s,
                    duration_s=breath_duration_s,
                ),
            )
        )
    for b, (start, dur) in enumerate(bursts):
        for i, d0 in enumerate(_NIGHT_BURST_D0S):
            paths.append(
                DynamicPath(
                    d0,
                    MotionBurst(
                        start, dur, burst_amplitude_m, seed=burst_seed + 97 * b + i
                    ),
                )
            )
    return MultipathScene(
        static_cfr=random_static_cfr(n_tx, n_rx, n_sub, seed=static_seed),
        paths=paths,
        noise_sigma=noise_sigma,
    )


# ---------------------------------------------------------------------------
# Scene description files
# ---------------------------------------------------------------------------

def _trajectory_from_doc(doc: dict) -> Trajectory:
    kind = doc.get("kind")
    if kind == "breathing_sinusoid":
        return BreathingSinusoid(
            rate_bpm=float(doc["rate_bpm"]),
            amplitude_m=float(doc["amplitude_m"]),
            phase_rad=float(doc.get("phase_rad", 0.0)),
            onset_s=float(doc.get("onset_s", 0.0)),
            duration_s=None if doc.get("duration_s") is None else float(doc["duration_s"]),
            ramp_s=float(doc.get("ramp_s", 5.0)),
        )
    if kind == "motion_burst":
        return MotionBurst(
            start_s=float(doc["start_s"]),
            duration_s=float(doc["duration_s"]),
            amplitude_m=float(doc["amplitude_m"]),
            seed=int(doc.get("seed", 0)),
        )
    if kind == "still":
        return Still()
    raise ValueError(f"unknown trajectory kind {kind!r}")


def _trajectory_to_doc(traj: Trajectory) -> dict:
    if isinstance(traj, BreathingSinusoid):
        return {
            "kind": traj.kind,
            "rate_bpm": traj.rate_bpm,
            "amplitude_m": traj.amplitude_m,
            "phase_rad": traj.phase_rad,
            "onset_s": traj.onset_s,
            "duration_s": traj.duration_s,
            "ramp_s": traj.ramp_s,
        }
    if isinstance(traj, MotionBurst):
        return {
            "kind": traj.kind,
            "start_s": traj.start_s,
            "duration_s": traj.duration_s,
            "amplitude_m": traj.amplitude_m,
            "seed": traj.seed,
        }
    return {"kind": "still"}


def scene_from_doc(doc: dict) -> MultipathScene:
    """Build a scene from a parsed scene-description document."""
    static = doc.get("static_cfr", {"seed": 0, "magnitude": 1.0})
    if isinstance(static, dict):
        cfr = random_static_cfr(
            int(doc.get("n_tx", 1)),
            int(doc.get("n_rx", 1)),
            int(doc.get("n_sub", 30)),
            magnitude=float(static.get("magnitude", 1.0)),
            seed=int(static.get("seed", 0)),
        )
    else:
        arr = np.asarray(static, dtype=np.float64)
        if arr.ndim != 4 or arr.shape[-1] != 2:
            raise ValueError("explicit static_cfr must nest [tx][rx][sub][re,im]")
        cfr = arr[..., 0] + 1j * arr[..., 1]
    paths = [
        DynamicPath(float(p["base_distance_m"]), _trajectory_from_doc(p["trajectory"]))
        for p in doc.get("paths", [])
    ]
    return MultipathScene(
        static_cfr=cfr,
        paths=paths,
        center_freq_hz=float(doc.get("center_freq_hz", DEFAULT_CENTER_FREQ_HZ)),
        subcarrier_spacing_hz=float(
            doc.get("subcarrier_spacing_hz", DEFAULT_SUBCARRIER_SPACING_HZ)
        ),
        noise_sigma=float(doc.get("noise_sigma", 0.0)),
        k_constant=float(doc.get("k_constant", 1.0)),
    )


def scene_to_doc(scene: MultipathScene, rate_hz: float | None = None) -> dict:
    """Serialize a scene to a plain document (explicit static CFR)."""
    stacked = np.stack([scene.static_cfr.real, scene.static_cfr.imag], axis=-1)
    doc = {
        "n_tx": scene.dims[0],
        "n_rx": scene.dims[1],
        "n_sub": scene.dims[2],
        "center_freq_hz": scene.center_freq_hz,
        "subcarrier_spacing_hz": scene.subcarrier_spacing_hz,
        "noise_sigma": scene.noise_sigma,
        "k_constant": scene.k_constant,
        "static_cfr": stacked.tolist(),
        "paths": [
            {
                "base_distance_m": p.base_distance_m,
                "trajectory": _trajectory_to_doc(p.trajectory),
            }
            for p in scene.paths
        ],
    }
    if rate_hz is not None:
        doc["rate_hz"] = rate_hz
    return doc


def load_scene(path: str | os.PathLike) -> tuple[MultipathScene, float | None]:
    """Load a scene JSON file; returns (scene, rate_hz or None)."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    rate = doc.get("rate_hz")
    return scene_from_doc(doc), None if rate is None else float(rate)
