from .calibration import calibrate, evaluate, recover_force, recover_indentation
from .errors import (
    ConfigurationError,
    FibercalError,
    IdentifiabilityError,
    SchemaError,
)
from .models import (
    CalibrationModel,
    ForceVector,
    IndentationState,
    IntensityFrame,
    Phase,
    Sample,
    Samples,
)
from .sensor import (
    default_grid,
    default_sensor,
    generate_grid_dataset,
    reference_sensor,
)

__all__ = [
    "CalibrationModel",
    "ConfigurationError",
    "FibercalError",
    "ForceVector",
    "IdentifiabilityError",
    "IndentationState",
    "IntensityFrame",
    "Phase",
    "Sample",
    "Samples",
    "SchemaError",
    "calibrate",
    "default_grid",
    "default_sensor",
    "evaluate",
    "generate_grid_dataset",
    "recover_force",
    "recover_indentation",
    "reference_sensor",
]
