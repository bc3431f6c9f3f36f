from contextlib import nullcontext as does_not_raise
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np
import pandas
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibercal.errors import (
    ConfigurationError,
    DeadChannelError,
    SchemaError,
    ShapeError,
)
from fibercal.models import (
    Baseline,
    CalibrationMetadata,
    CalibrationModel,
    EvaluationReport,
    ForceVector,
    IndentationState,
    IntensityFrame,
    Phase,
    RawFrame,
    ResidualNorms,
    Sample,
    SampleResidual,
    Samples,
    SizeDependenceReport,
    SizeDependenceRow,
    SyntheticSensor,
)
from fibercal.schema import DATASET_COLUMNS
from fibercal.sensor import default_sensor
from tests.conftest import frame_strategy

FINITE = st.floats(min_value=-10.0, max_value=10.0)

SAMPLE_STRATEGY = st.builds(
    Sample,
    frame=frame_strategy,
    phase=st.just(Phase.WITH_SHEAR),
    force=st.none() | st.builds(ForceVector, fx=FINITE, fy=FINITE, fz=FINITE),
    indentation=st.none()
    | st.builds(IndentationState, depth=FINITE, radius=FINITE),
)


def _meta():
    return CalibrationMetadata(
        indentation_samples=24,
        shear_samples=1620,
        residual_norms=ResidualNorms(
            indentation_gain=0.0, indent_coupling=0.0, force_gain=0.0
        ),
        created_at=datetime(2024, 1, 1, tzinfo=timezone.utc),
    )


def test_phase_compares_to_string():
    assert Phase.INDENTATION_ONLY == "IndentationOnly"
    assert Phase("WithShear") is Phase.WITH_SHEAR


class TestIntensityFrame:
    def test_channel_groups(self):
        frame = IntensityFrame(pd=(1, 2, 3, 4, 5, 6, 7))

        assert frame.fibers == (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)
        assert frame.upper == (1.0, 2.0, 3.0, 4.0)
        assert frame.lower == (5.0, 6.0, 7.0)

    def test_zero(self):
        assert IntensityFrame.zero().pd == (0.0,) * 7
        np.testing.assert_array_equal(IntensityFrame.zero().to_array(), np.zeros(7))

    @pytest.mark.parametrize(
        "pd,expectation",
        [
            ((0.0,) * 7, does_not_raise()),
            ((0.0,) * 6, pytest.raises(ShapeError, match="7 channels")),
            ((0.0,) * 8, pytest.raises(ShapeError)),
            ((0.0,) * 6 + (float("nan"),), pytest.raises(ShapeError)),
            ((0.0,) * 6 + (float("inf"),), pytest.raises(ShapeError)),
            ((0.0,) * 6 + ("x",), pytest.raises(ShapeError)),
        ],
    )
    def test_validation(self, pd, expectation):
        with expectation:
            IntensityFrame(pd=pd)


def test_indentation_state_diameter():
    assert IndentationState(depth=1.0, radius=3.75).diameter == 7.5


class TestSample:
    def test_phase_from_string(self):
        sample = Sample(frame=IntensityFrame.zero(), phase="IndentationOnly")
        assert sample.phase is Phase.INDENTATION_ONLY

    def test_indentation_only_rejects_shear(self):
        with pytest.raises(SchemaError):
            Sample(
                frame=IntensityFrame.zero(),
                phase=Phase.INDENTATION_ONLY,
                force=ForceVector(fx=0.1, fy=0.0, fz=1.0),
            )

    def test_unknown_phase(self):
        with pytest.raises(ValueError):
            Sample(frame=IntensityFrame.zero(), phase="Sliding")


class TestSamples:
    @given(samples=st.lists(SAMPLE_STRATEGY, max_size=10))
    def test_to_dataframe(self, samples):
        df = Samples(samples).to_dataframe()

        assert list(df.columns) == list(DATASET_COLUMNS)
        assert len(df) == len(samples)
        assert (df["phase"] == "WithShear").all()

    def test_to_dataframe_missing_ground_truth(self):
        df = Samples(
            [Sample(frame=IntensityFrame.zero(), phase=Phase.WITH_SHEAR)]
        ).to_dataframe()

        assert df[["fx", "fy", "fz", "depth_mm", "radius_mm"]].isna().all(axis=None)
        assert df["pd1"].dtype == np.float64

    def test_with_phase(self):
        indent = Sample(frame=IntensityFrame.zero(), phase=Phase.INDENTATION_ONLY)
        shear = Sample(frame=IntensityFrame.zero(), phase=Phase.WITH_SHEAR)

        samples = Samples([shear, indent, shear])

        assert samples.with_phase(Phase.INDENTATION_ONLY) == [indent]
        assert samples.with_phase(Phase.WITH_SHEAR) == [shear, shear]
        assert isinstance(samples.with_phase(Phase.WITH_SHEAR), Samples)


class TestRawFrameAndBaseline:
    def test_negative_reading(self):
        with pytest.raises(ShapeError, match="PD3"):
            RawFrame(readings=(1.0, 1.0, -0.1, 1.0, 1.0, 1.0, 1.0))

    def test_dead_channel(self):
        with pytest.raises(DeadChannelError, match="PD4") as exc_info:
            Baseline(i0=(1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0), window=50)

        assert exc_info.value.channel == "PD4"
        assert isinstance(exc_info.value, ConfigurationError)


class TestCalibrationModel:
    def test_shapes(self):
        model = CalibrationModel(
            r_gain=np.ones((3, 2)),
            k_gain=np.ones((6, 2)),
            c_gain=np.ones((6, 3)),
            meta=_meta(),
        )
        assert not model.r_gain.flags.writeable

    def test_wrong_shape(self):
        with pytest.raises(ShapeError, match="c_gain"):
            CalibrationModel(
                r_gain=np.ones((3, 2)),
                k_gain=np.ones((6, 2)),
                c_gain=np.ones((6, 2)),
                meta=_meta(),
            )


class TestSyntheticSensor:
    def test_default_ground_truth_is_valid(self):
        sensor = default_sensor()
        np.testing.assert_array_equal(sensor.r_true[:2], sensor.k_true[4:])

    def test_inconsistent_lower_rows(self):
        sensor = default_sensor()
        r_true = sensor.r_true.copy()
        r_true[0, 0] *= 2

        with pytest.raises(ConfigurationError, match="PD5/PD6"):
            replace(sensor, r_true=r_true)

    def test_upper_fibers_sensitive_to_indentation(self):
        sensor = default_sensor()
        k_true = sensor.k_true.copy()
        k_true[0, 0] = -0.01

        with pytest.raises(ConfigurationError, match="Upper-fiber"):
            replace(sensor, k_true=k_true)

    def test_lower_fibers_sensitive_to_shear(self):
        sensor = default_sensor()
        c_true = sensor.c_true.copy()
        c_true[4, 0] = 0.05

        with pytest.raises(ConfigurationError, match="lower fibers"):
            replace(sensor, c_true=c_true)

    @pytest.mark.parametrize(
        "changes,expectation",
        [
            ({"noise_sigma": 0.01, "gamma": -0.2}, does_not_raise()),
            ({"noise_sigma": -0.01}, pytest.raises(ConfigurationError)),
            ({"gamma": float("nan")}, pytest.raises(ConfigurationError)),
            ({"r_true": np.ones((2, 2))}, pytest.raises(ShapeError)),
        ],
    )
    def test_validation(self, changes, expectation):
        with expectation:
            replace(default_sensor(), **changes)

    def test_rng_is_reproducible(self):
        sensor = default_sensor(seed=3)
        assert sensor.rng().random() == sensor.rng().random()


class TestEvaluationReport:
    def _report(self):
        residual = SampleResidual(
            index=0,
            true_force=ForceVector(fx=1.0, fy=0.0, fz=0.5),
            predicted_force=ForceVector(fx=1.5, fy=0.0, fz=0.25),
            true_indentation=IndentationState(depth=1.0, radius=2.5),
            predicted_indentation=IndentationState(depth=1.25, radius=3.0),
        )
        return EvaluationReport(
            mae_fx=0.5,
            mae_fy=0.0,
            mae_fz=0.25,
            mae_depth=0.25,
            mae_diameter=1.0,
            residuals=[residual],
        )

    def test_summary_order(self):
        assert list(self._report().summary()) == [
            "mae_fx_n",
            "mae_fy_n",
            "mae_fz_n",
            "mae_depth_mm",
            "mae_diameter_mm",
        ]

    def test_residuals_to_dataframe(self):
        df = self._report().residuals_to_dataframe()

        assert df.loc[0, "true_force.fx"] == 1.0
        assert df.loc[0, "error_fx"] == 0.5
        assert df.loc[0, "error_fz"] == -0.25
        assert df.loc[0, "error_depth"] == 0.25
        assert df.loc[0, "error_diameter"] == 1.0

    def test_residuals_to_dataframe_empty(self):
        report = replace(self._report(), residuals=[])

        df = report.residuals_to_dataframe()

        assert df.empty
        assert "predicted_indentation.radius" in df.columns
        assert "true_force.fz" in df.columns
        assert df.columns[-1] == "error_diameter"

    def test_pairs(self):
        forces = self._report().force_pairs_dataframe()
        indentation = self._report().indentation_pairs_dataframe()

        assert forces.loc[0, "diameter_mm"] == 5.0
        assert forces.loc[0, "predicted_fx"] == 1.5
        assert indentation.loc[0, "predicted_diameter_mm"] == 6.0

    def test_empty_pairs_keep_columns(self):
        report = replace(self._report(), residuals=[])

        assert list(report.force_pairs_dataframe().columns) == [
            "diameter_mm",
            "true_fx",
            "true_fy",
            "true_fz",
            "predicted_fx",
            "predicted_fy",
            "predicted_fz",
        ]
        assert isinstance(report.per_diameter_to_dataframe(), pandas.DataFrame)


def test_size_dependence_report_ratio():
    report = SizeDependenceReport(
        rows=[
            SizeDependenceRow(
                normal_load=0.5, diameter=5.0, mean_fz=0.5, mean_fz_ablated=0.7
            )
        ],
        spread=0.02,
        ablated_mae=0.2,
    )

    assert report.ratio == pytest.approx(0.1)
    assert list(report.to_dataframe().columns) == [
        "normal_load",
        "diameter",
        "mean_fz",
        "mean_fz_ablated",
    ]
