"""Actigraphy-style sleep/awake scoring from per-minute motion activity.

Each minute gets a normalized activity score from motion-event coverage; a
weighted window over the four preceding and two following minutes produces a
sleep score, classified sleep when it does not exceed 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .motion import MotionEvent

# Weight vector covers minute offsets -4..+2 relative to the scored minute.
DEFAULT_RHO = 0.125
DEFAULT_WEIGHTS = (0.15, 0.15, 0.15, 0.08, 0.21, 0.12, 0.13)
_OFFSETS = range(-4, 3)


@dataclass
class MinuteActivity:
    minute_index: int
    a: float

    def __post_init__(self):
        if self.a < 0:
            raise ValueError("activity score must be nonnegative")


@dataclass
class WebsterWeights:
    """Scaling factor and the seven surrounding-minute weights."""

    rho: float = DEFAULT_RHO
    w: tuple[float, ...] = DEFAULT_WEIGHTS

    def __post_init__(self):
        self.w = tuple(self.w)
        if len(self.w) != 7:
            raise ValueError("exactly 7 weights required (offsets -4..+2)")
        if any(x < 0 for x in self.w) or self.rho < 0:
            raise ValueError("weights must be nonnegative")


def activity_scores(
    events: list[MotionEvent], night_start_s: float, n_minutes: int
) -> list[MinuteActivity]:
    """Per-minute activity: 10 * (seconds of the minute covered by events) / 60."""
    out = []
    for m in range(n_minutes):
        lo = night_start_s + 60.0 * m
        hi = lo + 60.0
        covered = 0.0
        for ev in events:
            covered += max(0.0, min(hi, ev.end_s) - max(lo, ev.start_s))
        out.append(MinuteActivity(m, 10.0 * covered / 60.0))
    return out


def webster_scores(
    scores: list[MinuteActivity], weights: WebsterWeights | None = None
) -> np.ndarray:
    """Weighted sleep score s_m per minute; out-of-range neighbors count 0."""
    weights = weights or WebsterWeights()
    if not scores:
        raise ValueError("need at least one minute")
    a = np.zeros(len(scores))
    for item in scores:
        a[item.minute_index] = item.a
    s = np.zeros_like(a)
    for m in range(len(a)):
        acc = 0.0
        for w, off in zip(weights.w, _OFFSETS):
            idx = m + off
            if 0 <= idx < len(a):
                acc += w * a[idx]
        s[m] = weights.rho * acc
    return s


def webster_classify(
    scores: list[MinuteActivity], weights: WebsterWeights | None = None
) -> list[str]:
    """Stage per minute: sleep when s_m <= 1, awake otherwise."""
    s = webster_scores(scores, weights)
    return ["sleep" if v <= 1.0 else "awake" for v in s]


def sleep_efficiency(stages: list[str]) -> float:
    """Fraction of minutes classified sleep."""
    if not stages:
        raise ValueError("stages must be nonempty")
    return sum(1 for s in stages if s == "sleep") / len(stages)
