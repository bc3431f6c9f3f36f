import logging
from contextlib import nullcontext as does_not_raise
from dataclasses import replace

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibercal.errors import ConfigurationError, ShapeError
from fibercal.models import ForceVector, IndentationState, IntensityFrame, Sample
from fibercal.sensor import default_grid
from fibercal.validators import validate_channels, validate_finite, warn_out_of_range
from tests.conftest import reading_strategy


@given(value=st.floats(allow_nan=False, allow_infinity=False))
def test_validate_finite(value):
    assert validate_finite(value, name="x") == value


@pytest.mark.parametrize(
    "value,expectation",
    [
        (1, does_not_raise()),
        ("2.5", does_not_raise()),
        (float("nan"), pytest.raises(ShapeError, match="finite")),
        (float("-inf"), pytest.raises(ShapeError, match="finite")),
        (None, pytest.raises(ShapeError, match="real number")),
        ("one", pytest.raises(ShapeError, match="real number")),
    ],
)
def test_validate_finite_values(value, expectation):
    with expectation:
        validate_finite(value, name="x")


class TestValidateChannels:
    @given(values=st.lists(reading_strategy, min_size=7, max_size=7))
    def test_seven_channels(self, values):
        assert validate_channels(values, name="frame") == tuple(values)

    @pytest.mark.parametrize("count", [0, 3, 6, 8])
    def test_wrong_count(self, count):
        message = f"frame must have 7 channels, got {count}"
        with pytest.raises(ShapeError, match=message):
            validate_channels([0.0] * count, name="frame")

    def test_names_channel(self):
        with pytest.raises(ShapeError, match="PD6"):
            validate_channels([0, 0, 0, 0, 0, float("nan"), 0], name="frame")

    def test_custom_count(self):
        assert validate_channels(iter([1, 2]), name="pair", count=2) == (1.0, 2.0)


@pytest.mark.parametrize(
    "changes,expectation",
    [
        ({}, does_not_raise()),
        ({"axis_aligned": True}, does_not_raise()),
        ({"depth_step": 0.5, "shear_step": 2.0}, does_not_raise()),
        ({"depth_step": 0.0}, pytest.raises(ConfigurationError, match="Depth step")),
        ({"shear_step": -1.0}, pytest.raises(ConfigurationError, match="Shear step")),
        ({"depth_stop": 0.5}, pytest.raises(ConfigurationError, match="two positions")),
        ({"shear_stop": float("inf")}, pytest.raises(ConfigurationError)),
        ({"diameters": ()}, pytest.raises(ConfigurationError, match="diameter")),
        ({"diameters": (5.0, -1.0)}, pytest.raises(ConfigurationError)),
        ({"shear_depths": ()}, pytest.raises(ConfigurationError, match="shear depth")),
        ({"shear_depths": (0.0,)}, pytest.raises(ConfigurationError)),
    ],
)
def test_validate_grid(changes, expectation):
    with expectation:
        replace(default_grid(), **changes)


class TestWarnOutOfRange:
    def _sample(self, depth=1.0, radius=2.5, fz=1.0):
        return Sample(
            frame=IntensityFrame.zero(),
            phase="WithShear",
            force=ForceVector(fx=0.0, fy=0.0, fz=fz),
            indentation=IndentationState(depth=depth, radius=radius),
        )

    def test_in_range(self, caplog):
        with caplog.at_level(logging.WARNING):
            warn_out_of_range(0, self._sample())
        assert not caplog.records

    @pytest.mark.parametrize(
        "kwargs,name",
        [
            ({"depth": 6.0}, "depth_mm"),
            ({"radius": 1.0}, "radius_mm"),
            ({"fz": 2.5}, "fz"),
        ],
    )
    def test_out_of_range(self, caplog, kwargs, name):
        with caplog.at_level(logging.WARNING):
            warn_out_of_range(4, self._sample(**kwargs))

        assert len(caplog.records) == 1
        assert "Sample 4" in caplog.text
        assert name in caplog.text

    def test_without_ground_truth(self, caplog):
        with caplog.at_level(logging.WARNING):
            warn_out_of_range(0, Sample(frame=IntensityFrame.zero(), phase="WithShear"))
        assert not caplog.records
