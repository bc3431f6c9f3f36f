"""Two-step self-calibration and the inference pipeline.

Calibration first explains the intensity changes of an IndentationOnly dataset by the
indentation state alone (gains ``R`` and ``K``). The part of the WithShear intensity
changes that ``K`` doesn't explain is then attributed to the contact force (gain
``C``). At inference the indentation state is recovered from the lower channels, its
share is subtracted from the fiber channels and the force is recovered from what
remains, which makes the force estimate independent of the indenter size.

"""

import logging
import math
import os
from collections import defaultdict
from datetime import datetime, timezone
from typing import Iterable, Optional, Sequence

import numpy as np

from fibercal.constants import (
    DEFAULT_DIAMETERS_MM,
    EXCITATION_RCOND,
    FLAG_CLAMPED_DEPTH,
    FLAG_UNRELIABLE_RADIUS,
    FORCE_AXES,
    INDENTATION_FACTORS,
    UNRELIABLE_RADIUS_DEPTH_MM,
)
from fibercal.errors import ConfigurationError, IdentifiabilityError, SchemaError
from fibercal.linalg import (
    Matrix,
    as_matrix,
    column,
    lstsq_fit,
    lstsq_solve,
    matmul,
    require_full_rank,
    residual_norm,
)
from fibercal.models import (
    CalibrationMetadata,
    CalibrationModel,
    DiameterBreakdown,
    EvaluationReport,
    ForceVector,
    IndentationEstimate,
    IndentationState,
    IntensityFrame,
    Phase,
    Prediction,
    ResidualNorms,
    Sample,
    SampleResidual,
    SizeDependenceReport,
    SizeDependenceRow,
    SyntheticSensor,
)
from fibercal.sensor import synth_frame

#: Normal loads of the size-dependence analysis, in N.
DEFAULT_NORMAL_LOADS_N = (0.25, 0.5, 0.75)

#: Noisy repetitions per load and indenter of the size-dependence analysis.
DEFAULT_TRIALS = 50

_DIAMETER_DECIMALS = 9


def _require_phase(samples: Sequence[Sample], phase: Phase) -> None:
    wrong = [i for i, sample in enumerate(samples) if sample.phase is not phase]
    if wrong:
        raise ConfigurationError(
            f"Expected {phase.value} samples only, sample {wrong[0]} is"
            f" {samples[wrong[0]].phase.value}"
        )


def _indentation_matrix(samples: Sequence[Sample]) -> Matrix:
    """Ground-truth indentation states, one sample per column"""
    states = []
    for i, sample in enumerate(samples):
        if sample.indentation is None:
            raise SchemaError(f"Sample {i} has no ground-truth indentation state")
        states.append(sample.indentation.to_array())
    return as_matrix(np.column_stack(states))


def _force_matrix(samples: Sequence[Sample]) -> Matrix:
    """Ground-truth forces, one sample per column"""
    forces = []
    for i, sample in enumerate(samples):
        if sample.force is None:
            raise SchemaError(f"Sample {i} has no ground-truth force")
        forces.append(sample.force.to_array())
    return as_matrix(np.column_stack(forces))


def _lower_matrix(samples: Sequence[Sample]) -> Matrix:
    return as_matrix(np.column_stack([sample.frame.lower for sample in samples]))


def _fiber_matrix(samples: Sequence[Sample]) -> Matrix:
    return as_matrix(np.column_stack([sample.frame.fibers for sample in samples]))


def _require_samples(samples: Sequence[Sample], minimum: int, what: str) -> None:
    if len(samples) < minimum:
        raise IdentifiabilityError(
            f"Need at least {minimum} {what} samples, got {len(samples)}",
            rank=0,
            expected_rank=minimum,
        )


def _require_excitation(
    regressors: Matrix, *, what: str, factor_names: Sequence[str]
) -> None:
    """Raise unless every factor varies independently across the samples.

    Without an intercept a factor held constant still yields a full-rank regressor
    matrix, but the fit can't tell its gain apart from the other factors.

    """
    scale = np.abs(regressors).max(axis=1)
    spread = np.ptp(regressors, axis=1)
    constant = spread <= EXCITATION_RCOND * scale

    if constant.any():
        factors = tuple(name for name, c in zip(factor_names, constant) if c)
        raise IdentifiabilityError(
            f"{what} do not vary, unexcited: {', '.join(factors)}",
            rank=int(np.count_nonzero(~constant)),
            expected_rank=len(factor_names),
            factors=factors,
        )

    centered = regressors - regressors.mean(axis=1, keepdims=True)
    require_full_rank(
        as_matrix(centered),
        what=f"Variation of the {what.lower()}",
        factor_names=factor_names,
        rcond=EXCITATION_RCOND,
    )


def fit_indentation_gain(indent_samples: Sequence[Sample]) -> Matrix:
    """Fit the gain ``R`` from indentation state to the PD5-PD7 readings.

    :param indent_samples: IndentationOnly samples with ground-truth indentation

    :raises: :exc:`~fibercal.errors.IdentifiabilityError` if depth and radius are not
        both varied, e.g. with a single indenter

    :returns: ``R̂`` of shape ``(3, 2)``

    """
    _require_phase(indent_samples, Phase.INDENTATION_ONLY)
    _require_samples(indent_samples, len(INDENTATION_FACTORS), "IndentationOnly")

    u = _indentation_matrix(indent_samples)
    _require_excitation(
        u, what="Indentation states", factor_names=INDENTATION_FACTORS
    )
    return lstsq_fit(
        _lower_matrix(indent_samples), u, factor_names=INDENTATION_FACTORS
    )


def fit_indent_coupling(indent_samples: Sequence[Sample]) -> Matrix:
    """Fit the gain ``K`` from indentation state to the PD1-PD6 readings.

    :param indent_samples: IndentationOnly samples with ground-truth indentation

    :raises: :exc:`~fibercal.errors.IdentifiabilityError` like
        :func:`fit_indentation_gain`

    :returns: ``K̂`` of shape ``(6, 2)``

    """
    _require_phase(indent_samples, Phase.INDENTATION_ONLY)
    _require_samples(indent_samples, len(INDENTATION_FACTORS), "IndentationOnly")

    u = _indentation_matrix(indent_samples)
    _require_excitation(
        u, what="Indentation states", factor_names=INDENTATION_FACTORS
    )
    return lstsq_fit(
        _fiber_matrix(indent_samples), u, factor_names=INDENTATION_FACTORS
    )


def _force_share(samples: Sequence[Sample], k_gain: Matrix) -> Matrix:
    """Fiber readings minus what ``k_gain`` attributes to the true indentation"""
    return as_matrix(
        _fiber_matrix(samples) - matmul(k_gain, _indentation_matrix(samples))
    )


def fit_force_gain(shear_samples: Sequence[Sample], k_gain: Matrix) -> Matrix:
    """Fit the gain ``C`` from contact force to the PD1-PD6 readings.

    The indentation share ``K·U`` is removed from the readings first, using the
    ground-truth indentation state of the samples.

    :param shear_samples: WithShear samples with ground-truth force and indentation
    :param k_gain: Fitted indentation coupling ``K̂``

    :raises: :exc:`~fibercal.errors.IdentifiabilityError` if a force axis is not
        excited, e.g. without shear motion along Y

    :returns: ``Ĉ`` of shape ``(6, 3)``

    """
    _require_phase(shear_samples, Phase.WITH_SHEAR)
    _require_samples(shear_samples, len(FORCE_AXES), "WithShear")

    f = _force_matrix(shear_samples)
    _require_excitation(f, what="Forces", factor_names=FORCE_AXES)
    return lstsq_fit(
        _force_share(shear_samples, as_matrix(k_gain)), f, factor_names=FORCE_AXES
    )


def _creation_time() -> datetime:
    """Current time, or ``SOURCE_DATE_EPOCH`` if set"""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is None:
        return datetime.now(timezone.utc)

    try:
        return datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    except ValueError as e:
        raise ConfigurationError(
            f"SOURCE_DATE_EPOCH must be an integer, got {epoch!r}"
        ) from e


def calibrate(samples: Iterable[Sample]) -> CalibrationModel:
    """Run the complete two-step calibration on a phased dataset.

    :param samples: IndentationOnly and WithShear samples with ground truth, in any
        order

    :raises: |identifiability-error|

    :returns: Fitted model with residual norms and sample counts

    """
    samples = list(samples)
    indent = [s for s in samples if s.phase is Phase.INDENTATION_ONLY]
    shear = [s for s in samples if s.phase is Phase.WITH_SHEAR]

    r_gain = fit_indentation_gain(indent)
    k_gain = fit_indent_coupling(indent)
    c_gain = fit_force_gain(shear, k_gain)

    u_indent = _indentation_matrix(indent)
    norms = ResidualNorms(
        indentation_gain=residual_norm(_lower_matrix(indent), r_gain, u_indent),
        indent_coupling=residual_norm(_fiber_matrix(indent), k_gain, u_indent),
        force_gain=residual_norm(
            _force_share(shear, k_gain), c_gain, _force_matrix(shear)
        ),
    )
    logging.info(
        "Calibrated on %d IndentationOnly and %d WithShear samples",
        len(indent),
        len(shear),
    )

    return CalibrationModel(
        r_gain=r_gain,
        k_gain=k_gain,
        c_gain=c_gain,
        meta=CalibrationMetadata(
            indentation_samples=len(indent),
            shear_samples=len(shear),
            residual_norms=norms,
            created_at=_creation_time(),
        ),
    )


def recover_indentation(
    frame: IntensityFrame, model: CalibrationModel
) -> IndentationEstimate:
    """Recover depth and indenter radius from the PD5-PD7 readings.

    A negative depth is reported as zero with the flag
    :data:`~fibercal.constants.FLAG_CLAMPED_DEPTH`. Below a depth of
    :data:`~fibercal.constants.UNRELIABLE_RADIUS_DEPTH_MM` the radius is flagged with
    :data:`~fibercal.constants.FLAG_UNRELIABLE_RADIUS`.

    """
    # "+ 0.0" turns negative zeros into zeros
    depth, radius = (
        lstsq_solve(
            model.r_gain, column(frame.lower), factor_names=INDENTATION_FACTORS
        ).ravel()
        + 0.0
    )
    raw = IndentationState(depth=float(depth), radius=float(radius))

    flags = set()
    if raw.depth < 0.0:
        flags.add(FLAG_CLAMPED_DEPTH)
    state = IndentationState(depth=max(raw.depth, 0.0), radius=raw.radius)
    if state.depth < UNRELIABLE_RADIUS_DEPTH_MM:
        flags.add(FLAG_UNRELIABLE_RADIUS)

    return IndentationEstimate(state=state, raw=raw, flags=frozenset(flags))


def recover_force(
    frame: IntensityFrame,
    model: CalibrationModel,
    *,
    subtract_indentation: bool = True,
) -> Prediction:
    """Recover the contact force and indentation state from one frame.

    The force is solved from the fiber readings after subtracting ``K̂·Û``, the share
    of the recovered (unclamped) indentation state. The map from the frame to
    ``force`` and ``raw_indentation`` is linear.

    :param frame: Normalized intensity changes
    :param model: Fitted calibration model
    :param subtract_indentation: Skip the subtraction of ``K̂·Û`` if ``False``, which
        shows how much the force estimate depends on the indenter size

    """
    estimate = recover_indentation(frame, model)

    fibers = column(frame.fibers)
    if subtract_indentation:
        fibers = as_matrix(
            fibers - matmul(model.k_gain, column(estimate.raw.to_array()))
        )

    fx, fy, fz = (
        lstsq_solve(model.c_gain, fibers, factor_names=FORCE_AXES).ravel() + 0.0
    )
    return Prediction(
        force=ForceVector(fx=float(fx), fy=float(fy), fz=float(fz)),
        indentation=estimate.state,
        raw_indentation=estimate.raw,
        flags=estimate.flags,
    )


def predict(
    frames: Iterable[IntensityFrame], model: CalibrationModel
) -> list[Prediction]:
    """Run :func:`recover_force` on every frame and log a summary of raised flags"""
    predictions = [recover_force(frame, model) for frame in frames]

    for flag in (FLAG_CLAMPED_DEPTH, FLAG_UNRELIABLE_RADIUS):
        count = sum(flag in p.flags for p in predictions)
        if count:
            logging.warning("%d of %d predictions: %s", count, len(predictions), flag)

    return predictions


def _mae(errors: Iterable[float]) -> float:
    errors = [abs(e) for e in errors]
    return math.fsum(errors) / len(errors)


def _breakdown(
    diameter: float, residuals: Sequence[SampleResidual]
) -> DiameterBreakdown:
    return DiameterBreakdown(
        diameter=diameter,
        samples=len(residuals),
        **_errors(residuals),
    )


def _errors(residuals: Sequence[SampleResidual]) -> dict[str, float]:
    return {
        "mae_fx": _mae(r.predicted_force.fx - r.true_force.fx for r in residuals),
        "mae_fy": _mae(r.predicted_force.fy - r.true_force.fy for r in residuals),
        "mae_fz": _mae(r.predicted_force.fz - r.true_force.fz for r in residuals),
        "mae_depth": _mae(
            r.predicted_indentation.depth - r.true_indentation.depth
            for r in residuals
        ),
        "mae_diameter": _mae(
            2.0 * (r.predicted_indentation.radius - r.true_indentation.radius)
            for r in residuals
        ),
    }


def evaluate(
    model: CalibrationModel, test_samples: Iterable[Sample]
) -> EvaluationReport:
    """Mean absolute errors of ``model`` on labelled samples.

    Errors are summed exactly, so the report doesn't depend on the sample order.

    :raises: :exc:`~fibercal.errors.ConfigurationError` on an empty dataset

    :raises: :exc:`~fibercal.errors.SchemaError` if a sample lacks ground truth

    """
    test_samples = list(test_samples)
    if not test_samples:
        raise ConfigurationError("Cannot evaluate on an empty dataset")

    predictions = predict((s.frame for s in test_samples), model)

    residuals = []
    for i, (sample, prediction) in enumerate(zip(test_samples, predictions)):
        if sample.force is None or sample.indentation is None:
            raise SchemaError(f"Sample {i} has no ground truth")
        residuals.append(
            SampleResidual(
                index=i,
                true_force=sample.force,
                predicted_force=prediction.force,
                true_indentation=sample.indentation,
                predicted_indentation=prediction.indentation,
            )
        )

    by_diameter: defaultdict[float, list[SampleResidual]] = defaultdict(list)
    for residual in residuals:
        key = round(residual.true_indentation.diameter, _DIAMETER_DECIMALS)
        by_diameter[key].append(residual)

    return EvaluationReport(
        **_errors(residuals),
        residuals=residuals,
        per_diameter=[
            _breakdown(diameter, by_diameter[diameter])
            for diameter in sorted(by_diameter)
        ],
    )


def size_dependence(
    model: CalibrationModel,
    sensor: SyntheticSensor,
    *,
    normal_loads: Sequence[float] = DEFAULT_NORMAL_LOADS_N,
    trials: int = DEFAULT_TRIALS,
    rng: Optional[np.random.Generator] = None,
    diameters: Sequence[float] = DEFAULT_DIAMETERS_MM,
) -> SizeDependenceReport:
    """Compare the normal force estimates of different indenters at the same load.

    For every load and indenter, ``trials`` frames are synthesized at the depth that
    produces the load with that indenter, without shear. The mean normal force
    estimate is computed with and without the subtraction of the indentation share.

    :param model: Model fitted on data of ``sensor``
    :param sensor: Sensor to synthesize the frames with
    :param normal_loads: True normal loads in N
    :param trials: Repetitions per load and indenter
    :param rng: PRNG stream of the noise, by default the sensor's own stream
    :param diameters: Indenter diameters in mm

    :raises: :exc:`~fibercal.errors.ConfigurationError` on no loads, no diameters or
        no trials

    """
    if not normal_loads or not diameters or trials < 1:
        raise ConfigurationError("Need at least one load, diameter and trial")

    rng = rng if rng is not None else sensor.rng()
    kn = sensor.stiffness.kn

    rows = []
    ablated_errors = []
    for load in normal_loads:
        force = ForceVector(fx=0.0, fy=0.0, fz=load)
        for diameter in diameters:
            radius = diameter / 2.0
            state = IndentationState(depth=load / (kn * radius), radius=radius)

            full, ablated = [], []
            for _ in range(trials):
                frame = synth_frame(sensor, force, state, rng)
                full.append(recover_force(frame, model).force.fz)
                ablated.append(
                    recover_force(frame, model, subtract_indentation=False).force.fz
                )

            ablated_errors.extend(estimate - load for estimate in ablated)
            rows.append(
                SizeDependenceRow(
                    normal_load=load,
                    diameter=diameter,
                    mean_fz=math.fsum(full) / trials,
                    mean_fz_ablated=math.fsum(ablated) / trials,
                )
            )

    spread = max(
        max(r.mean_fz for r in rows if r.normal_load == load)
        - min(r.mean_fz for r in rows if r.normal_load == load)
        for load in normal_loads
    )
    return SizeDependenceReport(
        rows=rows, spread=spread, ablated_mae=_mae(ablated_errors)
    )
