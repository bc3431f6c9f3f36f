import math
from typing import Sequence

from fibercal.constants import DEFAULT_BASELINE_WINDOW, NUMBER_OF_CHANNELS
from fibercal.errors import ConfigurationError
from fibercal.models import Baseline, IntensityFrame, RawFrame


def estimate_baseline(
    rest_frames: Sequence[RawFrame], window: int = DEFAULT_BASELINE_WINDOW
) -> Baseline:
    """Estimate the rest intensity of every channel.

    :param rest_frames: Frames recorded without contact
    :param window: Number of leading frames to average

    :raises: :exc:`~fibercal.errors.ConfigurationError` if ``window`` is not positive
        or there are fewer than ``window`` frames

    :raises: :exc:`~fibercal.errors.DeadChannelError` if a channel has a mean rest
        intensity of zero

    :returns: Per-channel mean of the first ``window`` frames

    """
    if window < 1:
        raise ConfigurationError(f"Baseline window must be positive, {window=}")
    if len(rest_frames) < window:
        raise ConfigurationError(
            f"Need {window} rest frames for the baseline, got {len(rest_frames)}"
        )

    frames = rest_frames[:window]
    i0 = tuple(
        math.fsum(frame.readings[channel] for frame in frames) / window
        for channel in range(NUMBER_OF_CHANNELS)
    )
    return Baseline(i0=i0, window=window)


def normalize(raw: RawFrame, baseline: Baseline) -> IntensityFrame:
    """Relative intensity change ``(raw - i0) / i0`` of every channel"""
    return IntensityFrame(
        pd=tuple((r - i0) / i0 for r, i0 in zip(raw.readings, baseline.i0))
    )


def denormalize(
    frame: IntensityFrame, baseline: Baseline, timestamp_ms: int = 0
) -> RawFrame:
    """Raw readings ``i0 · (1 + x)`` that normalize to ``frame``

    :raises: :exc:`~fibercal.errors.ShapeError` if a channel of ``frame`` is below
        -1, which no non-negative reading normalizes to

    """
    return RawFrame(
        readings=tuple(i0 * (1.0 + x) for x, i0 in zip(frame.pd, baseline.i0)),
        timestamp_ms=timestamp_ms,
    )
