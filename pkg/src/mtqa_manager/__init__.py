"""Multi-task annealing manager - parallel embedding, per-instance parameterization and metrics."""

from .core.experiment_config import ExperimentConfig
from .core.experiment_orchestrator import ExperimentOrchestrator, run_experiment
from .core.report import MetricsReport
from .exceptions import MTQAError
from .kind_registry import KindRegistry

__version__ = "0.1.0"

__all__ = [
    "ExperimentConfig",
    "ExperimentOrchestrator",
    "run_experiment",
    "MetricsReport",
    "MTQAError",
    "KindRegistry",
]
