import json
import logging
from pathlib import Path
from typing import Optional

from pydantic import Field, ValidationError

from fibercal.constants import (
    DEFAULT_DEPTH_STEP_MM,
    DEFAULT_DEPTH_STOP_MM,
    DEFAULT_DIAMETERS_MM,
    DEFAULT_KN,
    DEFAULT_KS,
    DEFAULT_SEED,
    DEFAULT_SHEAR_DEPTHS_MM,
    DEFAULT_SHEAR_STEP_MM,
    DEFAULT_SHEAR_STOP_MM,
    REFERENCE_GAMMA,
    REFERENCE_NOISE_SIGMA,
)
from fibercal.dataio.files import FileBaseModel
from fibercal.errors import ConfigurationError
from fibercal.models import GridConfig, SyntheticSensor
from fibercal.sensor import default_sensor


class RangeModel(FileBaseModel):
    """Grid axis stepping from zero (or ``-stop``) to ``stop``"""

    stop: float
    step: float

    def to_user_model(self) -> tuple[float, float]:
        return self.stop, self.step


class SimulationConfig(FileBaseModel):
    """Content of a simulation config file

    Every key is optional. Without a config file the reference noisy sensor is
    simulated on the default grid.

    """

    depths: RangeModel = RangeModel(
        stop=DEFAULT_DEPTH_STOP_MM, step=DEFAULT_DEPTH_STEP_MM
    )
    diameters: tuple[float, ...] = DEFAULT_DIAMETERS_MM
    shear_steps: RangeModel = RangeModel(
        stop=DEFAULT_SHEAR_STOP_MM, step=DEFAULT_SHEAR_STEP_MM
    )
    shear_depths: tuple[float, ...] = DEFAULT_SHEAR_DEPTHS_MM
    axis_aligned: bool = False
    kn: float = DEFAULT_KN
    ks: float = DEFAULT_KS
    noise_sigma: float = Field(default=REFERENCE_NOISE_SIGMA, ge=0.0)
    gamma: float = REFERENCE_GAMMA
    seed: int = Field(default=DEFAULT_SEED, ge=0)

    def to_user_model(self) -> tuple[SyntheticSensor, GridConfig]:
        """Convert into the simulated sensor and its motion grid

        :raises: :exc:`~fibercal.errors.ConfigurationError` on an unusable grid or
            stiffness

        """
        depth_stop, depth_step = self.depths.to_user_model()
        shear_stop, shear_step = self.shear_steps.to_user_model()

        grid = GridConfig(
            depth_stop=depth_stop,
            depth_step=depth_step,
            diameters=self.diameters,
            shear_stop=shear_stop,
            shear_step=shear_step,
            shear_depths=self.shear_depths,
            axis_aligned=self.axis_aligned,
        )
        sensor = default_sensor(
            kn=self.kn,
            ks=self.ks,
            noise_sigma=self.noise_sigma,
            gamma=self.gamma,
            seed=self.seed,
        )
        return sensor, grid


def load_config(
    path: Optional[str | Path] = None, *, seed: Optional[int] = None
) -> SimulationConfig:
    """Read a simulation config file.

    :param path: Path of the JSON config file, defaults only if ``None``
    :param seed: Overrides the seed of the file

    :raises: :exc:`~fibercal.errors.ConfigurationError` on malformed JSON, unknown
        keys or invalid values

    """
    content: dict[str, object] = {}
    if path is not None:
        try:
            content = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigurationError(
                f"Config file {path} is not valid JSON: {e}"
            ) from e
        except UnicodeDecodeError as e:
            raise ConfigurationError(
                f"Config file {path} is not valid UTF-8: {e}"
            ) from e
        if not isinstance(content, dict):
            raise ConfigurationError(f"Config file {path} must contain a JSON object")

    if seed is not None:
        logging.debug("Seed %d overrides the configured seed", seed)
        content = {**content, "seed": seed}

    try:
        return SimulationConfig.model_validate(content)
    except ValidationError as e:
        raise ConfigurationError(f"Invalid config: {e}") from e
