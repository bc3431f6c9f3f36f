from __future__ import annotations

import logging
import math
from typing import TYPE_CHECKING, Iterable

from fibercal.constants import (
    GENERATED_DEPTH_RANGE_MM,
    GENERATED_FORCE_LIMIT_N,
    GENERATED_RADIUS_RANGE_MM,
    NUMBER_OF_CHANNELS,
)
from fibercal.errors import ConfigurationError, ShapeError

if TYPE_CHECKING:  # pragma: no cover
    from fibercal.models import GridConfig, Sample

_OUT_OF_RANGE_LOG_MESSAGE = (
    "Sample %d: %s=%s is outside the range covered by generated datasets %s,"
    " the calibration is extrapolated."
)


def validate_finite(value: float, *, name: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError) as e:
        raise ShapeError(f"{name} must be a real number, {value=} provided") from e

    if not math.isfinite(value):
        raise ShapeError(f"{name} must be finite, {value=} provided")
    return value


def validate_channels(
    values: Iterable[float], *, name: str, count: int = NUMBER_OF_CHANNELS
) -> tuple[float, ...]:
    """Convert ``values`` into a tuple of ``count`` finite floats.

    :raises: :exc:`~fibercal.errors.ShapeError` on a wrong number of channels or a
        non-finite reading

    """
    values = tuple(values)
    if len(values) != count:
        raise ShapeError(f"{name} must have {count} channels, got {len(values)}")
    return tuple(
        validate_finite(v, name=f"{name} channel PD{i}")
        for i, v in enumerate(values, start=1)
    )


def _validate_axis(stop: float, step: float, *, name: str) -> None:
    if not (math.isfinite(stop) and math.isfinite(step)):
        raise ConfigurationError(f"{name} grid must be finite, {stop=}, {step=}")
    if step <= 0.0:
        raise ConfigurationError(f"{name} step must be positive, {step=} provided")
    if stop < step:
        raise ConfigurationError(
            f"{name} grid needs at least two positions, {stop=} < {step=}"
        )


def validate_grid(grid: GridConfig) -> None:
    """Check a motion grid.

    :raises: :exc:`~fibercal.errors.ConfigurationError` on non-positive steps, travel
        shorter than one step, or empty lists of diameters or shear depths

    """
    _validate_axis(grid.depth_stop, grid.depth_step, name="Depth")
    _validate_axis(grid.shear_stop, grid.shear_step, name="Shear")

    if not grid.diameters:
        raise ConfigurationError("Need at least one indenter diameter")
    if not grid.shear_depths:
        raise ConfigurationError("Need at least one shear depth")

    for diameter in grid.diameters:
        if not (math.isfinite(diameter) and diameter > 0.0):
            raise ConfigurationError(f"Diameters must be positive, {diameter=}")
    for depth in grid.shear_depths:
        if not (math.isfinite(depth) and depth > 0.0):
            raise ConfigurationError(f"Shear depths must be positive, {depth=}")


def _in_range(value: float, low: float, high: float) -> bool:
    return low <= value <= high


def warn_out_of_range(index: int, sample: Sample) -> None:
    """Log a warning for ground truth outside the range of generated datasets."""
    if sample.indentation is not None:
        for name, value, bounds in (
            ("depth_mm", sample.indentation.depth, GENERATED_DEPTH_RANGE_MM),
            ("radius_mm", sample.indentation.radius, GENERATED_RADIUS_RANGE_MM),
        ):
            if not _in_range(value, *bounds):
                logging.warning(_OUT_OF_RANGE_LOG_MESSAGE, index, name, value, bounds)

    if sample.force is not None:
        limit = GENERATED_FORCE_LIMIT_N
        for name, value in zip(("fx", "fy", "fz"), sample.force.to_array()):
            if not _in_range(float(value), -limit, limit):
                logging.warning(
                    _OUT_OF_RANGE_LOG_MESSAGE, index, name, value, (-limit, limit)
                )
