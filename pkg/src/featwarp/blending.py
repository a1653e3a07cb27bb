"""Masked blending of warped and freshly computed feature maps.

The blend composes two steps: gate the warped map by the validity mask, then
mix with the fresh map under a coefficient ``alpha`` that decays linearly
over the denoising steps. Both steps fuse into the closed form

    out = fresh + alpha * mask * (warped - fresh)

which is what :func:`blend_masked` evaluates in one pass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionMismatchError, NonFiniteError, StepRangeError
from .maps import FeatureMap, Mask

DEFAULT_ALPHA0 = 0.9


@dataclass(frozen=True)
class BlendSchedule:
    """Linearly decaying blend coefficient over ``total_steps`` steps."""

    alpha0: float = DEFAULT_ALPHA0
    total_steps: int = 1

    def __post_init__(self):
        if not (0.0 <= self.alpha0 <= 1.0):
            raise ConfigError(f"alpha0 must lie in [0, 1], got {self.alpha0}")
        if self.total_steps < 1:
            raise ConfigError(f"total_steps must be >= 1, got {self.total_steps}")


def alpha_at(schedule: BlendSchedule, t: int) -> float:
    """Blend coefficient at step ``t``: ``alpha0 * (T - t) / T``."""
    if not (0 <= t <= schedule.total_steps):
        raise StepRangeError(
            f"step {t} outside [0, {schedule.total_steps}]"
        )
    return schedule.alpha0 * (schedule.total_steps - t) / schedule.total_steps


def blend_masked(
    warped: FeatureMap, fresh: FeatureMap, mask: Mask, alpha: float
) -> FeatureMap:
    """One-pass masked blend of a warped map against a fresh map.

    Per pixel and channel:
    ``alpha * (warped * M + fresh * (1 - M)) + (1 - alpha) * fresh``.
    The mask may be fractional; for binary masks this reduces to the hard
    visible/invisible split.
    """
    if warped.data.shape != fresh.data.shape:
        raise DimensionMismatchError(
            f"warped {warped.data.shape} and fresh {fresh.data.shape} differ"
        )
    if (mask.height, mask.width) != (warped.height, warped.width):
        raise DimensionMismatchError(
            f"mask {mask.height}x{mask.width} does not match maps "
            f"{warped.height}x{warped.width}"
        )
    if not (0.0 <= alpha <= 1.0):
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")
    m = mask.data[None, :, :].astype(np.float64)
    w = warped.data.astype(np.float64)
    f = fresh.data.astype(np.float64)
    out = f + alpha * m * (w - f)
    return FeatureMap(out.astype(np.float32))
