"""Synthetic forward model standing in for the physical sensor and its test rig.

The motion platform presses a cylindrical indenter into the sensor and moves it
laterally. :func:`platform_to_load` turns platform displacements into the loads a
force/torque sensor would record and :func:`synth_frame` produces the photodiode
frame the sensor would read.

"""

import logging
from dataclasses import replace
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np
import pandas

from fibercal.constants import (
    CHANNEL_NAMES,
    DEFAULT_DEPTH_STEP_MM,
    DEFAULT_DEPTH_STOP_MM,
    DEFAULT_DIAMETERS_MM,
    DEFAULT_KN,
    DEFAULT_KS,
    DEFAULT_SEED,
    DEFAULT_SHEAR_DEPTHS_MM,
    DEFAULT_SHEAR_STEP_MM,
    DEFAULT_SHEAR_STOP_MM,
    FORCE_AXES,
    REFERENCE_GAMMA,
    REFERENCE_NOISE_SIGMA,
)
from fibercal.errors import ConfigurationError
from fibercal.linalg import column, matmul
from fibercal.models import (
    DatasetPair,
    ForceVector,
    GridConfig,
    IndentationState,
    IntensityFrame,
    Phase,
    Sample,
    Samples,
    Stiffness,
    SyntheticSensor,
)

#: Response of PD5, PD6 and PD7 to ``(depth, radius)``. Pressing deeper or with a
#: wider indenter bends the lower fibers and shadows the bottom photodiode.
DEFAULT_R_TRUE = (
    (-0.050, -0.008),
    (-0.033, -0.025),
    (-0.012, -0.033),
)

#: Response of PD1-PD6 to ``(depth, radius)``. The upper fibers barely notice the
#: indentation geometry.
DEFAULT_K_TRUE = (
    (-0.0020, -0.0010),
    (-0.0015, -0.0010),
    (-0.0020, -0.0005),
    (-0.0015, -0.0005),
    DEFAULT_R_TRUE[0],
    DEFAULT_R_TRUE[1],
)

#: Response of PD1-PD6 to ``(fx, fy, fz)``. The U-shaped upper fibers sense shear
#: along their bending direction, the straight lower fibers sense the geometry only.
DEFAULT_C_TRUE = (
    (-0.100, 0.000, -0.030),
    (0.000, -0.100, -0.030),
    (0.100, 0.010, -0.035),
    (0.010, 0.100, -0.025),
    (0.000, 0.000, 0.000),
    (0.000, 0.000, 0.000),
)

#: Contact depth of the shear curves of :func:`channel_response`, in mm.
RESPONSE_CONTACT_DEPTH_MM = 1.0

_GRID_DECIMALS = 9


def default_sensor(
    *,
    noise_sigma: float = 0.0,
    gamma: float = 0.0,
    kn: float = DEFAULT_KN,
    ks: float = DEFAULT_KS,
    seed: int = DEFAULT_SEED,
) -> SyntheticSensor:
    """Sensor with the default ground truth, noise-free and linear unless requested"""
    return SyntheticSensor(
        r_true=np.array(DEFAULT_R_TRUE),
        k_true=np.array(DEFAULT_K_TRUE),
        c_true=np.array(DEFAULT_C_TRUE),
        stiffness=Stiffness(kn=kn, ks=ks),
        noise_sigma=noise_sigma,
        gamma=gamma,
        seed=seed,
    )


def reference_sensor(
    *, noise_sigma: float = REFERENCE_NOISE_SIGMA, seed: int = DEFAULT_SEED
) -> SyntheticSensor:
    """Sensor of the reference noisy configuration

    Uses the cubic nonlinearity :data:`~fibercal.constants.REFERENCE_GAMMA` and by
    default noise of :data:`~fibercal.constants.REFERENCE_NOISE_SIGMA`, about 1 % of
    the full-scale channel response.

    """
    return default_sensor(noise_sigma=noise_sigma, gamma=REFERENCE_GAMMA, seed=seed)


def default_grid(*, axis_aligned: bool = False) -> GridConfig:
    return GridConfig(
        depth_stop=DEFAULT_DEPTH_STOP_MM,
        depth_step=DEFAULT_DEPTH_STEP_MM,
        diameters=DEFAULT_DIAMETERS_MM,
        shear_stop=DEFAULT_SHEAR_STOP_MM,
        shear_step=DEFAULT_SHEAR_STEP_MM,
        shear_depths=DEFAULT_SHEAR_DEPTHS_MM,
        axis_aligned=axis_aligned,
    )


def synth_frame(
    sensor: SyntheticSensor,
    force: ForceVector,
    indentation: IndentationState,
    rng: Optional[np.random.Generator] = None,
) -> IntensityFrame:
    """Frame the sensor reads under ``force`` at contact geometry ``indentation``.

    Noise is drawn from ``rng`` on every call, also when ``noise_sigma`` is zero, so
    sensors that differ only in their noise level consume the same PRNG sequence.

    :param sensor: Ground truth of the sensor
    :param force: Applied contact force
    :param indentation: Contact geometry
    :param rng: PRNG stream of the additive noise

    :raises: :exc:`~fibercal.errors.ConfigurationError` if the sensor is noisy but no
        ``rng`` is passed

    :returns: Normalized intensity changes of all channels

    """
    u = column(indentation.to_array())
    fibers = matmul(sensor.c_true, column(force.to_array())) + matmul(sensor.k_true, u)
    bottom = matmul(sensor.r_true[2:], u)
    x = np.vstack([fibers, bottom]).ravel()

    x = x + sensor.gamma * x**3

    if rng is not None:
        x = x + sensor.noise_sigma * rng.standard_normal(x.size)
    elif sensor.noise_sigma > 0.0:
        raise ConfigurationError("A noisy sensor needs a PRNG stream to draw from")

    return IntensityFrame(pd=tuple(x.tolist()))


def platform_to_load(
    sensor: SyntheticSensor, dz: float, dx: float, dy: float, radius: float
) -> tuple[ForceVector, IndentationState]:
    """Loads and contact geometry of a platform displacement.

    :param dz: Indentation depth in mm
    :param dx: Lateral displacement along X in mm
    :param dy: Lateral displacement along Y in mm
    :param radius: Indenter radius in mm

    :raises: :exc:`~fibercal.errors.ConfigurationError` on negative ``dz``

    """
    if dz < 0.0:
        raise ConfigurationError(f"Indentation depth must not be negative, {dz=}")

    kn, ks = sensor.stiffness.kn, sensor.stiffness.ks
    force = ForceVector(fx=ks * dx, fy=ks * dy, fz=kn * dz * radius)
    return force, IndentationState(depth=dz, radius=radius)


def grid_values(stop: float, step: float) -> list[float]:
    """Positions ``0, step, 2·step, …`` up to ``stop``"""
    count = int(np.floor(stop / step + 1e-9))
    return [round(i * step, _GRID_DECIMALS) for i in range(count + 1)]


def symmetric_values(stop: float, step: float) -> list[float]:
    """Positions from ``-stop`` to ``stop`` through zero"""
    positive = grid_values(stop, step)
    return [-v for v in reversed(positive[1:])] + positive


def midpoints(values: Sequence[float]) -> list[float]:
    """Middle positions between each two neighbouring ``values``"""
    return [round((a + b) / 2.0, _GRID_DECIMALS) for a, b in zip(values, values[1:])]


def _shear_positions(
    values: Sequence[float], axis_aligned: bool, origin: bool
) -> Iterator[tuple[float, float]]:
    if not axis_aligned:
        yield from ((dx, dy) for dx in values for dy in values)
        return

    yield from ((v, 0.0) for v in values)
    # the origin is already part of the X sweep
    yield from ((0.0, v) for v in values if not (origin and v == 0.0))


def _sample(
    sensor: SyntheticSensor,
    rng: np.random.Generator,
    phase: Phase,
    dz: float,
    dx: float,
    dy: float,
    radius: float,
) -> Sample:
    force, indentation = platform_to_load(sensor, dz, dx, dy, radius)

    # The optical effect of a pure indentation is carried by k_true·U alone, the
    # force/torque reading is still recorded as ground truth.
    applied = ForceVector.zero() if phase is Phase.INDENTATION_ONLY else force

    return Sample(
        frame=synth_frame(sensor, applied, indentation, rng),
        phase=phase,
        force=force,
        indentation=indentation,
    )


def generate_grid_dataset(sensor: SyntheticSensor, grid: GridConfig) -> DatasetPair:
    """Simulate the calibration and the test protocol on the motion grid.

    The calibration set holds an IndentationOnly sample for every indenter at every
    depth of the depth grid, followed by a WithShear sample for every indenter at
    every shear depth and lateral position. The test set holds WithShear samples at
    the middle positions between each two neighbouring calibration positions.

    All noise is drawn from one PRNG stream seeded with ``sensor.seed`` in dataset
    order, so the same sensor and grid always produce identical datasets.

    :raises: :exc:`~fibercal.errors.ConfigurationError` on an empty grid

    """
    rng = sensor.rng()
    radii = [diameter / 2.0 for diameter in grid.diameters]

    depths = grid_values(grid.depth_stop, grid.depth_step)
    shear = symmetric_values(grid.shear_stop, grid.shear_step)
    test_depths = midpoints(depths)
    test_shear = midpoints(shear)
    if not (depths and shear and test_depths and test_shear):
        raise ConfigurationError("Motion grid is empty")

    calibration = Samples(
        _sample(sensor, rng, Phase.INDENTATION_ONLY, dz, 0.0, 0.0, radius)
        for radius in radii
        for dz in depths
    )
    calibration.extend(
        _sample(sensor, rng, Phase.WITH_SHEAR, dz, dx, dy, radius)
        for radius in radii
        for dz in grid.shear_depths
        for dx, dy in _shear_positions(shear, grid.axis_aligned, origin=True)
    )

    test = Samples(
        _sample(sensor, rng, Phase.WITH_SHEAR, dz, dx, dy, radius)
        for radius in radii
        for dz in test_depths
        for dx, dy in _shear_positions(test_shear, grid.axis_aligned, origin=False)
    )

    logging.debug(
        "Generated %d calibration and %d test samples", len(calibration), len(test)
    )
    return DatasetPair(calibration=calibration, test=test)


def channel_response(
    sensor: SyntheticSensor, axis: str, diameter: float, loads: Iterable[float]
) -> pandas.DataFrame:
    """Noise-free response of every channel to a load along one axis.

    A normal load ``fz`` is applied by indenting to ``fz / (kn·radius)``. Shear loads
    are applied at a contact depth of :data:`RESPONSE_CONTACT_DEPTH_MM`.

    :param axis: One of ``fx``, ``fy`` and ``fz``
    :param diameter: Indenter diameter in mm
    :param loads: Loads along ``axis`` in N

    :raises: :exc:`~fibercal.errors.ConfigurationError` on an unknown axis or a
        negative normal load

    :returns: DataFrame with columns ``axis``, ``diameter_mm``, ``load_n`` and
        ``pd1`` to ``pd7``

    """
    if axis not in FORCE_AXES:
        raise ConfigurationError(f"Unknown force axis {axis!r}")

    noise_free = replace(sensor, noise_sigma=0.0)
    radius = diameter / 2.0
    kn, ks = sensor.stiffness.kn, sensor.stiffness.ks

    records = []
    for load in loads:
        if axis == "fz":
            if load < 0.0:
                raise ConfigurationError(f"Normal load must not be negative, {load=}")
            dz, dx, dy = load / (kn * radius), 0.0, 0.0
        else:
            dz = RESPONSE_CONTACT_DEPTH_MM
            dx, dy = (load / ks, 0.0) if axis == "fx" else (0.0, load / ks)

        force, indentation = platform_to_load(noise_free, dz, dx, dy, radius)
        frame = synth_frame(noise_free, force, indentation)
        records.append((axis, diameter, load, *frame.pd))

    return pandas.DataFrame.from_records(
        records,
        columns=[
            "axis",
            "diameter_mm",
            "load_n",
            *(name.lower() for name in CHANNEL_NAMES),
        ],
    )
