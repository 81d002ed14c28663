from .config import ExperimentConfig
from .instances import continuous_instance, discrete_instance
from .runner import TrialRow, run

__all__ = ["ExperimentConfig", "TrialRow", "continuous_instance", "discrete_instance", "run"]
