"""Abstract experiment worker interface - mode agnostic.

This defines the contract that every mode runner implements, regardless of
how it packs, parameterizes and samples its instances (parallel MTQA/PQA
programs, one-at-a-time embedding, or annealing on the logical model).
"""

import logging
import time
from abc import ABC, abstractmethod
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Optional

import numpy as np

from ..exceptions import StageError
from ..log_handlers import RunContextFilter


class WorkerState(Enum):
    """Worker lifecycle states."""

    CREATED = "created"
    RUNNING = "running"
    FINISHED = "finished"
    ERROR = "error"


@dataclass
class InstanceOutcome:
    """Raw per-instance result of one mode, before optimality is known."""

    instance_id: str
    problem_id: str
    kind: str
    n: int
    graph_seed: int
    energies: np.ndarray
    assignments: np.ndarray
    unembed_seconds: float = 0.0
    chain_break_fraction: Optional[float] = None
    chain_strength: Optional[float] = None
    scale_factor: Optional[float] = None
    chain_stats: Optional[Dict[str, float]] = None


@dataclass
class ModeOutcome:
    """Everything one mode produced; timing fields are wall-clock dependent."""

    mode: str
    seed: int
    instances: List[InstanceOutcome] = field(default_factory=list)
    # one entry per sampler call: (instance ids it covered, wall seconds)
    sampler_runs: List[Dict[str, Any]] = field(default_factory=list)
    plan_file: Optional[str] = None
    packed: Dict[str, int] = field(default_factory=dict)
    extra: Dict[str, Any] = field(default_factory=dict)


@contextmanager
def stage_guard(
    name: str, instance_id: Optional[str] = None, seed: Optional[int] = None
) -> Iterator[None]:
    """Re-raise failures inside the block as StageError(name, ...)."""
    try:
        yield
    except StageError:
        raise
    except Exception as e:
        raise StageError(name, e, instance_id, seed) from e


class ExperimentWorker(ABC):
    """
    Abstract base class for all experiment mode runners.

    Provides lifecycle state, a per-mode logger stamped with run context and
    stage tracking so failures surface with stage, instance id and seed.
    """

    def __init__(self, mode: str, seed: int, **kwargs):
        self.mode = mode
        self.seed = seed
        self._state = WorkerState.CREATED
        self._stage: Optional[str] = None
        self.elapsed_seconds = 0.0

        self.log = logging.getLogger(f"mtqa_manager.worker.{mode}")
        for stale in [f for f in self.log.filters if isinstance(f, RunContextFilter)]:
            self.log.removeFilter(stale)
        self._context = RunContextFilter(mode, seed)
        self.log.addFilter(self._context)

    @abstractmethod
    def run_mode(self) -> ModeOutcome:
        """Pack, parameterize, sample and unembed - implemented by subclass."""
        pass

    def execute(self) -> ModeOutcome:
        """Run the mode, tracking state; failures come back as StageError."""
        self._state = WorkerState.RUNNING
        start = time.perf_counter()
        self.log.info(f"Starting mode {self.mode} (seed={self.seed})")
        try:
            # library loggers (embedding, sampling, ...) pick the context up at the handler
            with self._context.active():
                outcome = self.run_mode()
        except StageError:
            self._state = WorkerState.ERROR
            raise
        except Exception as e:
            self._state = WorkerState.ERROR
            raise StageError(self._stage or "run", e, seed=self.seed) from e
        finally:
            self.elapsed_seconds = time.perf_counter() - start
        self._state = WorkerState.FINISHED
        self.log.info(
            f"Finished mode {self.mode}: {len(outcome.instances)} instances "
            f"in {self.elapsed_seconds:.2f}s"
        )
        return outcome

    @contextmanager
    def stage(
        self, name: str, instance_id: Optional[str] = None, seed: Optional[int] = None
    ) -> Iterator[None]:
        """Tag errors raised inside the block with ``name``, instance and seed."""
        self._stage = name
        with stage_guard(name, instance_id, self.seed if seed is None else seed):
            yield

    @property
    def state(self) -> WorkerState:
        """Get current worker state."""
        return self._state

    def get_worker_info(self) -> Dict[str, Any]:
        """Get worker metadata."""
        return {
            "mode": self.mode,
            "seed": self.seed,
            "state": self._state.value,
            "stage": self._stage,
            "elapsed_seconds": self.elapsed_seconds,
        }
