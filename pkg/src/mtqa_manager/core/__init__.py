"""Core components package."""

from .experiment_config import MODES, ExperimentConfig, ProblemInstance, ProblemSpec
from .experiment_orchestrator import ExperimentOrchestrator, run_experiment
from .experiment_worker import ExperimentWorker, WorkerState
from .report import MetricsReport, load_report, summarize_reports, validate_report

__all__ = [
    "MODES",
    "ExperimentConfig",
    "ProblemInstance",
    "ProblemSpec",
    "ExperimentOrchestrator",
    "run_experiment",
    "ExperimentWorker",
    "WorkerState",
    "MetricsReport",
    "load_report",
    "summarize_reports",
    "validate_report",
]
