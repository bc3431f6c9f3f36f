from fibercal.dataio.baseline import denormalize, estimate_baseline, normalize
from fibercal.dataio.config import SimulationConfig, load_config
from fibercal.dataio.datasets import load_dataset, save_dataset
from fibercal.dataio.files import load_model, save_model

__all__ = [
    "SimulationConfig",
    "denormalize",
    "estimate_baseline",
    "load_config",
    "load_dataset",
    "load_model",
    "normalize",
    "save_dataset",
    "save_model",
]
