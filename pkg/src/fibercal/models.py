import math
from dataclasses import asdict, dataclass, field
from datetime import datetime
from enum import Enum
from typing import Iterable, Optional

import numpy as np
import numpy.typing as npt
import pandas

from fibercal.constants import (
    ANISOTROPY_RATIO,
    CHANNEL_NAMES,
    DEFAULT_SEED,
    FIBER_CHANNELS,
    FORCE_AXES,
    FORCE_UNIT,
    LENGTH_UNIT,
    LOWER_CHANNELS,
    NUMBER_OF_CHANNELS,
    UPPER_CHANNELS,
)
from fibercal.errors import (
    ConfigurationError,
    DeadChannelError,
    SchemaError,
    ShapeError,
)
from fibercal.linalg import Matrix, as_matrix
from fibercal.schema import DATASET_COLUMNS, dataframe_ensure_schema
from fibercal.validators import validate_channels, validate_finite, validate_grid


class Phase(str, Enum):
    """Calibration phase a sample was recorded in. Compares to strings out-of-the-box:

    .. code-block:: pycon

        >>> Phase.WITH_SHEAR == 'WithShear'
        True

    """

    #: Normal indentation only, no shear motion of the platform.
    INDENTATION_ONLY = "IndentationOnly"

    #: Indentation combined with lateral platform motion.
    WITH_SHEAR = "WithShear"


@dataclass(frozen=True)
class IntensityFrame:
    """Normalized intensity changes ΔI/I₀ of all photodiode channels.

    A resting sensor reads the all-zero frame.

    """

    #: Readings of PD1-PD7 in frame order, dimensionless.
    pd: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "pd", validate_channels(self.pd, name="Intensity frame")
        )

    @classmethod
    def zero(cls) -> "IntensityFrame":
        """Reading of the sensor at rest"""
        return cls(pd=(0.0,) * NUMBER_OF_CHANNELS)

    def to_array(self) -> npt.NDArray[np.float64]:
        """All channels as a 1-D array"""
        return np.array(self.pd, dtype=np.float64)

    @property
    def fibers(self) -> tuple[float, ...]:
        """Readings of the six fiber channels PD1-PD6"""
        return tuple(self.pd[i] for i in FIBER_CHANNELS)

    @property
    def upper(self) -> tuple[float, ...]:
        """Readings of the upper-layer fiber channels PD1-PD4"""
        return tuple(self.pd[i] for i in UPPER_CHANNELS)

    @property
    def lower(self) -> tuple[float, ...]:
        """Readings of the lower-layer fibers and the bottom photodiode PD5-PD7"""
        return tuple(self.pd[i] for i in LOWER_CHANNELS)


@dataclass(frozen=True)
class IndentationState:
    """Contact geometry: how deep and with which indenter the sensor is pressed."""

    #: Indentation depth in mm.
    depth: float

    #: Radius of the cylindrical indenter in mm.
    radius: float

    def __post_init__(self) -> None:
        validate_finite(self.depth, name="depth")
        validate_finite(self.radius, name="radius")

    @property
    def diameter(self) -> float:
        """Indenter diameter in mm"""
        return 2.0 * self.radius

    def to_array(self) -> npt.NDArray[np.float64]:
        return np.array([self.depth, self.radius], dtype=np.float64)


@dataclass(frozen=True)
class ForceVector:
    """Contact force in N."""

    #: Shear force along X.
    fx: float

    #: Shear force along Y.
    fy: float

    #: Normal force.
    fz: float

    def __post_init__(self) -> None:
        for axis in FORCE_AXES:
            validate_finite(getattr(self, axis), name=axis)

    @classmethod
    def zero(cls) -> "ForceVector":
        return cls(fx=0.0, fy=0.0, fz=0.0)

    def to_array(self) -> npt.NDArray[np.float64]:
        return np.array([self.fx, self.fy, self.fz], dtype=np.float64)


@dataclass(frozen=True)
class Sample:
    """One recorded sensor observation with its optional ground truth."""

    #: The sensor observation.
    frame: IntensityFrame

    #: Calibration phase the sample belongs to.
    phase: Phase

    #: Force measured by the reference force/torque sensor, if known.
    force: Optional[ForceVector] = None

    #: Contact geometry given by the platform and indenter, if known.
    indentation: Optional[IndentationState] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "phase", Phase(self.phase))
        if (
            self.phase is Phase.INDENTATION_ONLY
            and self.force is not None
            and (self.force.fx != 0.0 or self.force.fy != 0.0)
        ):
            raise SchemaError(
                "IndentationOnly samples must not carry shear force, got"
                f" fx={self.force.fx}, fy={self.force.fy}"
            )


class Samples(list[Sample]):
    """Representation of a dataset: an ordered list of samples."""

    def with_phase(self, phase: Phase) -> "Samples":
        """Samples of one calibration phase, in dataset order"""
        return Samples(sample for sample in self if sample.phase is phase)

    def to_dataframe(self) -> pandas.DataFrame:
        """Convert samples into :py:class:`pandas.DataFrame`

        There is one row per sample and the columns of the dataset file format:
        ``phase``, ``pd1`` to ``pd7``, ``fx``, ``fy``, ``fz``, ``depth_mm`` and
        ``radius_mm``. Absent ground truth is represented as missing values.

        :returns: DataFrame with samples.

        """
        records = []
        for sample in self:
            force = sample.force
            indentation = sample.indentation
            records.append(
                (
                    sample.phase.value,
                    *sample.frame.pd,
                    *(force.to_array() if force else (None,) * 3),
                    *(indentation.to_array() if indentation else (None,) * 2),
                )
            )

        df = pandas.DataFrame.from_records(records, columns=list(DATASET_COLUMNS))
        numeric = [column for column in DATASET_COLUMNS if column != "phase"]
        df[numeric] = df[numeric].astype("float64")
        return df


@dataclass(frozen=True)
class RawFrame:
    """Photodiode readings before normalization."""

    #: Readings of PD1-PD7, in volts or ADC counts.
    readings: tuple[float, ...]

    #: Monotonic acquisition time in milliseconds.
    timestamp_ms: int = 0

    def __post_init__(self) -> None:
        readings = validate_channels(self.readings, name="Raw frame")
        negative = [name for name, v in zip(CHANNEL_NAMES, readings) if v < 0.0]
        if negative:
            raise ShapeError(
                f"Raw readings must not be negative: {', '.join(negative)}"
            )
        object.__setattr__(self, "readings", readings)


@dataclass(frozen=True)
class Baseline:
    """Rest intensity I₀ of every channel, the denominator of normalization."""

    #: Rest intensity of PD1-PD7, in the unit of the raw frames.
    i0: tuple[float, ...]

    #: Number of rest frames averaged.
    window: int

    def __post_init__(self) -> None:
        i0 = validate_channels(self.i0, name="Baseline")
        for name, value in zip(CHANNEL_NAMES, i0):
            if value <= 0.0:
                raise DeadChannelError(name)
        object.__setattr__(self, "i0", i0)


@dataclass(frozen=True)
class GridConfig:
    """Platform motion grid of the calibration and test datasets.

    The calibration grid steps from zero to the configured travel. The test grid uses
    the middle positions between each two neighbouring calibration positions.

    """

    #: Deepest indentation of the calibration grid, in mm.
    depth_stop: float

    #: Step between indentation depths, in mm.
    depth_step: float

    #: Indenter diameters, in mm.
    diameters: tuple[float, ...]

    #: Lateral travel in the positive and negative direction, in mm.
    shear_stop: float

    #: Step between lateral positions, in mm.
    shear_step: float

    #: Depths at which the shear phase is recorded, in mm.
    shear_depths: tuple[float, ...]

    #: Move along one lateral axis at a time instead of the full X/Y product.
    axis_aligned: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "diameters", tuple(float(d) for d in self.diameters))
        object.__setattr__(
            self, "shear_depths", tuple(float(d) for d in self.shear_depths)
        )
        validate_grid(self)


@dataclass(frozen=True)
class Stiffness:
    """Linear surrogate mapping platform displacements to loads."""

    #: Normal stiffness, Fz = kn * depth * radius, in N/mm².
    kn: float

    #: Lateral stiffness, Fx = ks * dx and Fy = ks * dy, in N/mm.
    ks: float

    def __post_init__(self) -> None:
        for name in ("kn", "ks"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ConfigurationError(f"{name} must be positive, {value=} provided")


_TRUTH_SHAPES = {"r_true": (3, 2), "k_true": (6, 2), "c_true": (6, 3)}


@dataclass(frozen=True, eq=False)
class SyntheticSensor:
    """Ground truth of the simulated sensor.

    The fiber channels PD1-PD6 respond with ``c_true·F + k_true·U``, the bottom
    photodiode PD7 with the last row of ``r_true`` times ``U``. Every channel is then
    distorted by ``x + gamma·x³`` and additive Gaussian noise of standard deviation
    ``noise_sigma``.

    The ground truth must describe a consistent and anisotropic sensor:

    - the PD5/PD6 rows of ``r_true`` equal the PD5/PD6 rows of ``k_true``
    - the upper-fiber rows of ``k_true`` stay within the
      :data:`~fibercal.constants.ANISOTROPY_RATIO` of the largest ``k_true``
      entry
    - the shear columns of the lower-fiber rows of ``c_true`` stay within
      :data:`~fibercal.constants.ANISOTROPY_RATIO` of the largest ``c_true``
      entry

    :raises: :exc:`~fibercal.errors.ShapeError` on matrices of the wrong shape
    :raises: :exc:`~fibercal.errors.ConfigurationError` on inconsistent ground truth
        or invalid noise settings

    """

    #: Response of PD5-PD7 to the indentation state, shape ``(3, 2)``.
    r_true: Matrix

    #: Response of PD1-PD6 to the indentation state, shape ``(6, 2)``.
    k_true: Matrix

    #: Response of PD1-PD6 to the contact force, shape ``(6, 3)``.
    c_true: Matrix

    #: Displacement to load surrogate of the motion platform.
    stiffness: Stiffness

    #: Standard deviation of the additive channel noise.
    noise_sigma: float = 0.0

    #: Cubic nonlinearity coefficient.
    gamma: float = 0.0

    #: Seed of the PRNG stream of generated datasets.
    seed: int = DEFAULT_SEED

    def __post_init__(self) -> None:
        for name, shape in _TRUTH_SHAPES.items():
            matrix = as_matrix(getattr(self, name))
            if matrix.shape != shape:
                raise ShapeError(f"{name} must have shape {shape}, got {matrix.shape}")
            object.__setattr__(self, name, matrix)

        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0.0):
            raise ConfigurationError(
                f"noise_sigma must not be negative, {self.noise_sigma=} provided"
            )
        if not math.isfinite(self.gamma):
            raise ConfigurationError(f"gamma must be finite, {self.gamma=} provided")

        lower_fibers = list(LOWER_CHANNELS[:2])
        if not np.array_equal(self.r_true[:2], self.k_true[lower_fibers]):
            raise ConfigurationError(
                "PD5/PD6 rows of r_true must equal the PD5/PD6 rows of k_true"
            )

        k_bound = ANISOTROPY_RATIO * np.abs(self.k_true).max()
        if np.abs(self.k_true[list(UPPER_CHANNELS)]).max() > k_bound:
            raise ConfigurationError(
                "Upper-fiber rows of k_true exceed"
                f" {ANISOTROPY_RATIO:.0%} of the largest k_true entry"
            )

        c_bound = ANISOTROPY_RATIO * np.abs(self.c_true).max()
        if np.abs(self.c_true[lower_fibers, :2]).max() > c_bound:
            raise ConfigurationError(
                "Shear response of the lower fibers in c_true exceeds"
                f" {ANISOTROPY_RATIO:.0%} of the largest c_true entry"
            )

    def rng(self) -> np.random.Generator:
        """Fresh PRNG stream seeded with :attr:`seed`"""
        return np.random.default_rng(self.seed)


@dataclass(frozen=True)
class ResidualNorms:
    """Frobenius norms of the residual matrices of the three fits."""

    indentation_gain: float
    indent_coupling: float
    force_gain: float


@dataclass(frozen=True)
class CalibrationMetadata:
    """Provenance of a fitted calibration model."""

    #: Number of IndentationOnly samples used to fit R and K.
    indentation_samples: int

    #: Number of WithShear samples used to fit C.
    shear_samples: int

    #: Residual norms of the fits.
    residual_norms: ResidualNorms

    #: When the model was fitted.
    created_at: datetime

    #: Unit of depths and radii.
    length_unit: str = LENGTH_UNIT

    #: Unit of forces.
    force_unit: str = FORCE_UNIT


_GAIN_SHAPES = {"r_gain": (3, 2), "k_gain": (6, 2), "c_gain": (6, 3)}


@dataclass(frozen=True, eq=False)
class CalibrationModel:
    """Fitted gain matrices of the two-step calibration.

    Rows of the gains follow the channel order of :class:`IntensityFrame`, columns the
    order ``(depth, radius)`` of indentation factors and ``(fx, fy, fz)`` of forces.

    """

    #: Gain from indentation state to PD5-PD7, shape ``(3, 2)``.
    r_gain: Matrix

    #: Gain from indentation state to PD1-PD6, shape ``(6, 2)``.
    k_gain: Matrix

    #: Gain from force to PD1-PD6, shape ``(6, 3)``.
    c_gain: Matrix

    #: Fit provenance.
    meta: CalibrationMetadata

    def __post_init__(self) -> None:
        for name, shape in _GAIN_SHAPES.items():
            matrix = as_matrix(getattr(self, name))
            if matrix.shape != shape:
                raise ShapeError(f"{name} must have shape {shape}, got {matrix.shape}")
            object.__setattr__(self, name, matrix)


@dataclass(frozen=True)
class IndentationEstimate:
    """Indentation state recovered from one frame."""

    #: Reported state, depth clamped at zero.
    state: IndentationState

    #: Unclamped least-squares solution.
    raw: IndentationState

    #: Quality flags, see :data:`~fibercal.constants.FLAG_CLAMPED_DEPTH` and
    #: :data:`~fibercal.constants.FLAG_UNRELIABLE_RADIUS`.
    flags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class Prediction:
    """Force and indentation state recovered from one frame.

    The map from frame to ``(force, raw_indentation)`` is linear. ``indentation``
    differs from ``raw_indentation`` only by the clamping of negative depths.

    """

    force: ForceVector
    indentation: IndentationState
    raw_indentation: IndentationState
    flags: frozenset[str] = frozenset()


@dataclass(frozen=True)
class SampleResidual:
    """Ground truth and prediction of one evaluated sample."""

    #: Position of the sample in the evaluated dataset.
    index: int

    true_force: ForceVector
    predicted_force: ForceVector
    true_indentation: IndentationState
    predicted_indentation: IndentationState


@dataclass(frozen=True)
class DiameterBreakdown:
    """Mean absolute errors of the samples of one indenter."""

    #: True indenter diameter in mm.
    diameter: float

    #: Number of samples with this indenter.
    samples: int

    mae_fx: float
    mae_fy: float
    mae_fz: float
    mae_depth: float
    mae_diameter: float


@dataclass(frozen=True)
class EvaluationReport:
    """Accuracy of a calibration model on a labelled dataset.

    All errors are mean absolute errors, forces in N and lengths in mm.

    """

    mae_fx: float
    mae_fy: float
    mae_fz: float
    mae_depth: float
    mae_diameter: float

    #: Ground truth and prediction of every sample, in dataset order.
    residuals: list[SampleResidual] = field(default_factory=list)

    #: Errors grouped by true indenter diameter, ascending.
    per_diameter: list[DiameterBreakdown] = field(default_factory=list)

    def summary(self) -> dict[str, float]:
        """The five error values in fixed order"""
        return {
            "mae_fx_n": self.mae_fx,
            "mae_fy_n": self.mae_fy,
            "mae_fz_n": self.mae_fz,
            "mae_depth_mm": self.mae_depth,
            "mae_diameter_mm": self.mae_diameter,
        }

    def residuals_to_dataframe(self) -> pandas.DataFrame:
        """Convert the per-sample residuals into :py:class:`pandas.DataFrame`

        Nested fields are flattened with ``.`` as path separator, e.g.
        ``true_force.fx``. Signed errors (prediction minus truth) are added as
        ``error_fx``, ``error_fy``, ``error_fz``, ``error_depth`` and
        ``error_diameter``.

        :returns: DataFrame with one row per evaluated sample.

        """
        df = dataframe_ensure_schema(
            pandas.json_normalize([asdict(residual) for residual in self.residuals]),
            SampleResidual,
        )
        for axis in FORCE_AXES:
            df[f"error_{axis}"] = (
                df[f"predicted_force.{axis}"] - df[f"true_force.{axis}"]
            )
        df["error_depth"] = (
            df["predicted_indentation.depth"] - df["true_indentation.depth"]
        )
        df["error_diameter"] = 2.0 * (
            df["predicted_indentation.radius"] - df["true_indentation.radius"]
        )
        return df

    def force_pairs_dataframe(self) -> pandas.DataFrame:
        """Real and predicted forces per sample with the true indenter diameter"""
        return pandas.DataFrame.from_records(
            [
                {
                    "diameter_mm": r.true_indentation.diameter,
                    **{f"true_{a}": getattr(r.true_force, a) for a in FORCE_AXES},
                    **{
                        f"predicted_{a}": getattr(r.predicted_force, a)
                        for a in FORCE_AXES
                    },
                }
                for r in self.residuals
            ],
            columns=[
                "diameter_mm",
                *(f"true_{a}" for a in FORCE_AXES),
                *(f"predicted_{a}" for a in FORCE_AXES),
            ],
        )

    def indentation_pairs_dataframe(self) -> pandas.DataFrame:
        """Real and predicted depth and diameter per sample"""
        return pandas.DataFrame.from_records(
            [
                {
                    "true_depth_mm": r.true_indentation.depth,
                    "predicted_depth_mm": r.predicted_indentation.depth,
                    "true_diameter_mm": r.true_indentation.diameter,
                    "predicted_diameter_mm": r.predicted_indentation.diameter,
                }
                for r in self.residuals
            ],
            columns=[
                "true_depth_mm",
                "predicted_depth_mm",
                "true_diameter_mm",
                "predicted_diameter_mm",
            ],
        )

    def per_diameter_to_dataframe(self) -> pandas.DataFrame:
        """Convert the per-diameter breakdown into :py:class:`pandas.DataFrame`"""
        return pandas.DataFrame.from_records(
            [asdict(row) for row in self.per_diameter],
            columns=[
                "diameter",
                "samples",
                "mae_fx",
                "mae_fy",
                "mae_fz",
                "mae_depth",
                "mae_diameter",
            ],
        )


@dataclass(frozen=True)
class DatasetPair:
    """Calibration dataset and held-out test dataset of one grid."""

    calibration: Samples
    test: Samples


@dataclass(frozen=True)
class SizeDependenceRow:
    """Mean normal force estimate of one indenter at one true normal load."""

    #: True normal force in N.
    normal_load: float

    #: Indenter diameter in mm.
    diameter: float

    #: Mean estimate of the full pipeline, in N.
    mean_fz: float

    #: Mean estimate without the indentation subtraction, in N.
    mean_fz_ablated: float


@dataclass(frozen=True)
class SizeDependenceReport:
    """How much the normal force estimate depends on the indenter size.

    ``spread`` is the largest difference of the mean estimate between indenters at the
    same true load. ``ablated_mae`` is the normal force error of the pipeline when the
    indentation subtraction is skipped, on the same frames.

    """

    rows: list[SizeDependenceRow]
    spread: float
    ablated_mae: float

    @property
    def ratio(self) -> float:
        """``spread`` relative to ``ablated_mae``"""
        return self.spread / self.ablated_mae

    def to_dataframe(self) -> pandas.DataFrame:
        return pandas.DataFrame.from_records(
            [asdict(row) for row in self.rows],
            columns=["normal_load", "diameter", "mean_fz", "mean_fz_ablated"],
        )


def samples_from(iterable: Iterable[Sample]) -> Samples:
    """Wrap ``iterable`` into :class:`Samples` unless it already is one"""
    return iterable if isinstance(iterable, Samples) else Samples(iterable)
