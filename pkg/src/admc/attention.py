"""Attention guidance: decide when a new suggestion must be communicated.

Threshold mode fires one multi-modal notification per crossing of the
difference threshold and stays quiet until the axes agree again, so a user
frozen right at the boundary hears a single tone instead of a loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .geometry import Vec7, ZERO7, cosine_similarity, difference

NOTIFICATION_TONE_HZ = 1000
NOTIFICATION_TONE_SECONDS = 0.15


class AttentionMode(Enum):
    CONTINUOUS = "continuous"
    THRESHOLD = "threshold"


class Channel(Enum):
    VISUAL = "visual"
    AUDIO = "audio"
    HAPTIC = "haptic"


ALL_CHANNELS = frozenset((Channel.VISUAL, Channel.AUDIO, Channel.HAPTIC))


@dataclass(frozen=True, slots=True)
class AttentionConfig:
    mode: AttentionMode = AttentionMode.THRESHOLD
    realtime_threshold: float = 0.2
    channels: frozenset[Channel] = ALL_CHANNELS

    def __post_init__(self):
        if not 0.0 <= self.realtime_threshold <= 1.0:
            raise ValueError("realtime_threshold must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class Notification:
    """Single-fire alert that the suggested mapping broke away from the active one."""

    difference: float
    channels: frozenset[Channel]
    tone_hz: int = NOTIFICATION_TONE_HZ
    tone_seconds: float = NOTIFICATION_TONE_SECONDS


@dataclass(frozen=True, slots=True)
class AttentionState:
    armed: bool = True
    last_active: Vec7 = ZERO7
    last_suggested: Vec7 = ZERO7


def adaptive_axes_nearly_equal(a: Vec7, b: Vec7, threshold: float) -> bool:
    """True when the two mappings differ by less than the threshold.

    Computed as |cos(a, b) - 1| < 2 * threshold, which is exactly
    difference(a, b) < threshold since the cosine range spans 2.
    Zero axes are the idle mapping: equal only to another zero axis.
    """
    a_zero = a.is_zero()
    b_zero = b.is_zero()
    if a_zero or b_zero:
        return a_zero and b_zero
    return abs(cosine_similarity(a, b) - 1.0) < 2.0 * threshold


def _safe_difference(a: Vec7, b: Vec7) -> float:
    if a.is_zero() or b.is_zero():
        return 1.0
    return difference(a, b)


def update(
    state: AttentionState,
    active: Vec7,
    suggested: Vec7,
    cfg: AttentionConfig,
) -> tuple[AttentionState, Notification | None]:
    """Advance the latch by one tick; returns the new state and an optional event.

    Continuous mode never emits: the suggestion is always on display.
    Threshold mode emits exactly once per true-to-false crossing of
    nearly-equal and re-arms only after the axes agree again.
    """
    if cfg.mode is AttentionMode.CONTINUOUS:
        return AttentionState(state.armed, active, suggested), None

    near = adaptive_axes_nearly_equal(active, suggested, cfg.realtime_threshold)
    event = None
    armed = state.armed
    if near:
        armed = True
    elif state.armed:
        armed = False
        event = Notification(_safe_difference(active, suggested), cfg.channels)
    return AttentionState(armed, active, suggested), event
