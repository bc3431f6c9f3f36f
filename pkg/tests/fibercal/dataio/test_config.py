import json
from contextlib import nullcontext as does_not_raise

import pytest

from fibercal.constants import REFERENCE_GAMMA, REFERENCE_NOISE_SIGMA
from fibercal.dataio import load_config
from fibercal.errors import ConfigurationError
from fibercal.sensor import default_grid


def _write(tmp_path, content):
    path = tmp_path / "config.json"
    path.write_text(
        content if isinstance(content, str) else json.dumps(content), encoding="utf-8"
    )
    return path


def test_defaults():
    sensor, grid = load_config().to_user_model()

    assert grid == default_grid()
    assert sensor.noise_sigma == REFERENCE_NOISE_SIGMA
    assert sensor.gamma == REFERENCE_GAMMA
    assert sensor.seed == 0
    assert sensor.stiffness.kn == 0.065


def test_file(tmp_path):
    path = _write(
        tmp_path,
        {
            "depths": {"stop": 4.0, "step": 0.5},
            "diameters": [6, 8],
            "axis_aligned": True,
            "noise_sigma": 0.0,
            "kn": 0.08,
            "seed": 12,
        },
    )

    sensor, grid = load_config(path).to_user_model()

    assert grid.depth_stop == 4.0
    assert grid.depth_step == 0.5
    assert grid.diameters == (6.0, 8.0)
    assert grid.axis_aligned
    assert grid.shear_depths == default_grid().shear_depths
    assert sensor.noise_sigma == 0.0
    assert sensor.stiffness.kn == 0.08
    assert sensor.seed == 12


def test_seed_override(tmp_path):
    path = _write(tmp_path, {"seed": 12})

    assert load_config(path, seed=3).seed == 3
    assert load_config(seed=4).seed == 4


@pytest.mark.parametrize(
    "content,expectation",
    [
        ({}, does_not_raise()),
        ({"gamma": 0.0}, does_not_raise()),
        ({"noise_sigma": -0.1}, pytest.raises(ConfigurationError, match="noise")),
        ({"seed": -1}, pytest.raises(ConfigurationError, match="seed")),
        ({"temperature": 20}, pytest.raises(ConfigurationError, match="temperature")),
        ({"depths": {"stop": 5}}, pytest.raises(ConfigurationError, match="step")),
        ({"kn": "stiff"}, pytest.raises(ConfigurationError, match="kn")),
        ("{", pytest.raises(ConfigurationError, match="not valid JSON")),
        ("[]", pytest.raises(ConfigurationError, match="JSON object")),
    ],
)
def test_load_config(tmp_path, content, expectation):
    with expectation:
        load_config(_write(tmp_path, content))


@pytest.mark.parametrize(
    "content",
    [
        {"depths": {"stop": 5.0, "step": 0.0}},
        {"diameters": []},
        {"shear_steps": {"stop": 0.5, "step": 1.0}},
        {"kn": 0.0},
    ],
)
def test_unusable_values(tmp_path, content):
    config = load_config(_write(tmp_path, content))

    with pytest.raises(ConfigurationError):
        config.to_user_model()


def test_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_config(tmp_path / "missing.json")


def test_not_utf8(tmp_path):
    path = tmp_path / "config.json"
    path.write_bytes(b'{"seed": 1, "name": "\xff"}')

    with pytest.raises(ConfigurationError, match="UTF-8") as exc_info:
        load_config(path)

    assert isinstance(exc_info.value.__cause__, UnicodeDecodeError)
