import json
import logging
import os
from pathlib import Path

import hypothesis
import pytest
from hypothesis import strategies as st

from fibercal.calibration import calibrate
from fibercal.constants import NUMBER_OF_CHANNELS
from fibercal.models import IntensityFrame
from fibercal.sensor import (
    default_grid,
    default_sensor,
    generate_grid_dataset,
    reference_sensor,
)

hypothesis.settings.register_profile("ci", deadline=None)
hypothesis.settings.load_profile(os.getenv("HYPOTHESIS_PROFILE", "default"))

#: Directory of the recorded values that regression tests compare against.
GOLDEN_DIR = Path(__file__).parent / "golden"

#: Normalized intensity changes in the range a loaded sensor reads.
reading_strategy = st.floats(
    min_value=-1.0, max_value=1.0, allow_nan=False, allow_infinity=False
)

frame_strategy = st.builds(
    IntensityFrame, pd=st.tuples(*[reading_strategy] * NUMBER_OF_CHANNELS)
)


@pytest.fixture(scope="session")
def noise_free_sensor():
    return default_sensor()


@pytest.fixture(scope="session")
def noise_free_datasets(noise_free_sensor):
    return generate_grid_dataset(noise_free_sensor, default_grid())


@pytest.fixture(scope="session")
def noise_free_model(noise_free_datasets):
    return calibrate(noise_free_datasets.calibration)


@pytest.fixture(scope="session")
def noisy_sensor():
    return reference_sensor()


@pytest.fixture(scope="session")
def noisy_datasets(noisy_sensor):
    return generate_grid_dataset(noisy_sensor, default_grid())


@pytest.fixture(scope="session")
def noisy_model(noisy_datasets):
    return calibrate(noisy_datasets.calibration)


@pytest.fixture
def golden():
    """Compare values with the ones recorded in ``tests/golden/<name>.json``

    Numbers must agree to a relative 1e-12, strings exactly. Values are recorded when
    the file doesn't exist yet or ``UPDATE_GOLDEN`` is set; commit the written files.

    """

    def check(name: str, values: dict[str, float | str]) -> None:
        path = GOLDEN_DIR / f"{name}.json"
        if os.getenv("UPDATE_GOLDEN") or not path.exists():
            GOLDEN_DIR.mkdir(exist_ok=True)
            path.write_text(json.dumps(values, indent=2) + "\n", encoding="utf-8")
            logging.warning("Recorded golden values %s", path)

        expected = json.loads(path.read_text(encoding="utf-8"))
        assert list(values) == list(expected)
        for key, value in values.items():
            if isinstance(value, str):
                assert value == expected[key], key
            else:
                assert value == pytest.approx(expected[key], rel=1e-12), key

    return check
