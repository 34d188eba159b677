"""Experiment orchestrator - mode agnostic.

Generates the instances, computes reference optima, packs the shared plans
and runs one worker per configured mode on a thread pool. Report assembly is
a deterministic merge keyed by mode, so thread scheduling never shows up in
the results.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Mapping, Optional

from ..embedding import ParallelPlan, parallel_embedding_search, save_plan, validate_plan
from ..exceptions import StageError, ValidationError
from ..graphs import gen_erdos_renyi
from ..parameterize import LogicalProblem
from ..qubo import MAX_EXACT_SIZE, gpp_strict_penalty, partition_balanced, qubo_argmin_set
from ..sampling import sa_sample, sample_bits
from ..topology import HardwareGraph, parse_topology_spec
from .experiment_config import (
    MODE_MTQA_ISOLATED,
    MODE_MTQA_NONISOLATED,
    MODE_PQA,
    MODE_QA_SINGLE,
    MODE_SA_LOGICAL,
    MODES,
    ExperimentConfig,
    ProblemInstance,
    derive_seed,
)
from .experiment_worker import ExperimentWorker, ModeOutcome, stage_guard
from .mode_workers import LogicalSAWorker, ParallelProgramWorker, SingleInstanceWorker
from .report import MetricsReport, OptimumRecord, assemble_report, write_report

# Branches of the seed tree below the master seed.
SEED_PLAN, SEED_MODE, SEED_REFERENCE = 1, 2, 3

PLAN_DIR = "plans"

WorkerFactory = Callable[["ExperimentOrchestrator", str, int], ExperimentWorker]


def _thread_cap(threads: int) -> int:
    env = os.getenv("MTQA_THREADS")
    if env:
        try:
            return max(1, min(threads, int(env)))
        except ValueError:
            logging.getLogger(__name__).warning(f"Invalid int value for MTQA_THREADS: {env}")
    return max(1, threads)


def _parallel_factory(isolation: bool) -> WorkerFactory:
    def factory(orch: "ExperimentOrchestrator", mode: str, seed: int) -> ExperimentWorker:
        plan, plan_file = orch.plans[isolation]
        return ParallelProgramWorker(mode, seed, orch.cfg, orch.problems, plan, plan_file)

    return factory


def _single_factory(orch: "ExperimentOrchestrator", mode: str, seed: int) -> ExperimentWorker:
    plan_dir = orch.out_dir / PLAN_DIR if orch.out_dir else None
    return SingleInstanceWorker(seed, orch.cfg, orch.problems, orch.hardware, plan_dir)


def _sa_factory(orch: "ExperimentOrchestrator", mode: str, seed: int) -> ExperimentWorker:
    return LogicalSAWorker(seed, orch.cfg, orch.problems)


DEFAULT_WORKER_FACTORIES: Dict[str, WorkerFactory] = {
    MODE_MTQA_ISOLATED: _parallel_factory(True),
    MODE_MTQA_NONISOLATED: _parallel_factory(False),
    MODE_PQA: _parallel_factory(False),
    MODE_QA_SINGLE: _single_factory,
    MODE_SA_LOGICAL: _sa_factory,
}


class ExperimentOrchestrator:
    """
    Runs one experiment configuration end to end.

    Example:
        cfg = ExperimentConfig.from_dict(load_config(config_file="config/desk.json"))
        report = ExperimentOrchestrator(cfg).run()
    """

    def __init__(
        self,
        cfg: ExperimentConfig,
        hardware: Optional[HardwareGraph] = None,
        worker_factories: Optional[Mapping[str, WorkerFactory]] = None,
        out_dir: Optional[str] = None,
        write_artifacts: bool = True,
    ):
        """
        Initialize orchestrator.

        Args:
            cfg: Validated experiment configuration
            hardware: Hardware graph (default: parsed from cfg.topology)
            worker_factories: Dict mapping mode to factory function
            out_dir: Output directory (default: cfg.out_dir)
            write_artifacts: Whether to write plan, report and CSV files
        """
        self.cfg = cfg
        self.worker_factories = dict(
            DEFAULT_WORKER_FACTORIES if worker_factories is None else worker_factories
        )
        self.write_artifacts = write_artifacts
        self.out_dir: Optional[Path] = Path(out_dir or cfg.out_dir) if write_artifacts else None
        self.log = logging.getLogger("mtqa_manager.ExperimentOrchestrator")

        with self._stage("topology"):
            self.hardware = hardware or parse_topology_spec(cfg.topology)

        self.problems: List[ProblemInstance] = []
        self.plans: Dict[bool, tuple] = {}
        self.workers: Dict[str, ExperimentWorker] = {}

        self.log.info(
            f"Orchestrator initialized | modes={cfg.modes} seed={cfg.master_seed} "
            f"hardware={len(self.hardware.effective_qubits)} qubits"
        )

    def _stage(self, name: str, instance_id: Optional[str] = None, seed: Optional[int] = None):
        return stage_guard(name, instance_id, self.cfg.master_seed if seed is None else seed)

    # --- stages -----------------------------------------------------------------

    def build_problems(self) -> List[ProblemInstance]:
        """Generate every configured instance, in configuration order."""
        penalty = self.cfg.parameterize["gpp_penalty"]
        seen = set()
        problems = []
        for spec in self.cfg.problems:
            for graph_seed in spec.seeds:
                pid = spec.problem_id(graph_seed)
                if pid in seen:
                    continue
                seen.add(pid)
                with self._stage("generate", pid, graph_seed):
                    g = gen_erdos_renyi(spec.n, spec.p, graph_seed)
                    options = {}
                    if spec.kind == "gpp" and penalty == "strict":
                        options["A"] = gpp_strict_penalty(g)
                    problem = LogicalProblem.build(pid, spec.kind, g, **options)
                problems.append(ProblemInstance(problem, spec.p, graph_seed))
        self.problems = problems
        self.log.info(f"Generated {len(problems)} problem instances")
        return problems

    def compute_optima(self) -> Dict[str, OptimumRecord]:
        """Exact optimum for instances within brute-force reach; others filled in later."""
        optima = {}
        for pi in self.problems:
            flags = []
            if pi.kind == "gpp" and pi.n % 2:
                flags.append("odd_n")
            if pi.n > MAX_EXACT_SIZE:
                optima[pi.problem_id] = OptimumRecord(None, "best_known", flags)
                continue
            with self._stage("oracle", pi.problem_id, pi.graph_seed):
                argmins, energy = qubo_argmin_set(pi.problem.qubo)
            if pi.kind == "gpp" and any(not partition_balanced(x) for x in argmins):
                flags.append("unbalanced_optimum")
                self.log.warning(f"{pi.problem_id}: QUBO optimum includes unbalanced partitions")
            optima[pi.problem_id] = OptimumRecord(float(energy), "exact", flags)
        return optima

    def build_plans(self) -> Dict[bool, tuple]:
        """Pack the isolated and/or non-isolated plan the configured modes need."""
        needed = set()
        if MODE_MTQA_ISOLATED in self.cfg.modes:
            needed.add(True)
        if MODE_MTQA_NONISOLATED in self.cfg.modes or MODE_PQA in self.cfg.modes:
            needed.add(False)

        sources = [pi.problem.embedding_graph() for pi in self.problems]
        ids = [pi.problem_id for pi in self.problems]
        for isolation in sorted(needed):
            seed = derive_seed(self.cfg.master_seed, SEED_PLAN, int(isolation))
            with self._stage("embed", seed=seed):
                plan = parallel_embedding_search(
                    sources, self.hardware, isolation, seed, ids, **self.cfg.embedding_options()
                )
                check = validate_plan(plan)
                if not check:
                    raise ValidationError(check.message)
            plan_file = self._save_plan(plan, isolation)
            self.plans[isolation] = (plan, plan_file)
        return self.plans

    def _save_plan(self, plan: ParallelPlan, isolation: bool) -> Optional[str]:
        if self.out_dir is None:
            return None
        name = f"plan-{'isolated' if isolation else 'nonisolated'}.json"
        path = self.out_dir / PLAN_DIR / name
        save_plan(plan, path, self.cfg.topology)
        return f"{PLAN_DIR}/{name}"

    def create_workers(self) -> Dict[str, ExperimentWorker]:
        workers = {}
        for mode in self.cfg.modes:
            factory = self.worker_factories.get(mode)
            if factory is None:
                raise StageError("dispatch", KeyError(f"no worker for mode {mode!r}"))
            seed = derive_seed(self.cfg.master_seed, SEED_MODE, MODES.index(mode))
            workers[mode] = factory(self, mode, seed)
        self.workers = workers
        return workers

    def run_workers(self) -> Dict[str, ModeOutcome]:
        max_workers = min(_thread_cap(self.cfg.threads), len(self.workers)) or 1
        self.log.info(f"Running {len(self.workers)} modes on {max_workers} threads")
        with ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="mode") as pool:
            futures = {mode: pool.submit(worker.execute) for mode, worker in self.workers.items()}
            # Collected in configured order; the first failure in that order wins.
            return {mode: futures[mode].result() for mode in self.cfg.modes}

    def resolve_best_known(
        self, optima: Dict[str, OptimumRecord], outcomes: Mapping[str, ModeOutcome]
    ) -> None:
        """Best energy over all modes plus a logical SA run, for instances beyond brute force."""
        for idx, pi in enumerate(self.problems):
            record = optima[pi.problem_id]
            if record.source != "best_known":
                continue
            energies = [
                float(inst.energies.min())
                for outcome in outcomes.values()
                for inst in outcome.instances
                if inst.problem_id == pi.problem_id
            ]
            seed = derive_seed(self.cfg.master_seed, SEED_REFERENCE, idx)
            with self._stage("reference", pi.problem_id, seed):
                samples = sa_sample(
                    pi.problem.ising, self.cfg.reads, self.cfg.sweeps, self.cfg.beta_range, seed
                )
                bits = sample_bits(samples, pi.problem.ising.variables)
                energies.append(float(pi.problem.qubo.energies(bits).min()))
            record.energy = min(energies)

    # --- entry point ------------------------------------------------------------

    def run(self) -> MetricsReport:
        self.log.info(f"Experiment {self.cfg.get_hash()[:12]} starting")
        if self.out_dir is not None:
            (self.out_dir / PLAN_DIR).mkdir(parents=True, exist_ok=True)

        self.build_problems()
        optima = self.compute_optima()
        self.build_plans()
        self.create_workers()
        outcomes = self.run_workers()
        self.resolve_best_known(optima, outcomes)

        with self._stage("report"):
            report = assemble_report(self.cfg, self.problems, optima, outcomes)
            if self.out_dir is not None:
                write_report(report, self.out_dir, outcomes, self.problems)
        self.log.info(f"Experiment {self.cfg.get_hash()[:12]} finished")
        return report


def run_experiment(
    cfg: ExperimentConfig,
    hardware: Optional[HardwareGraph] = None,
    out_dir: Optional[str] = None,
    write_artifacts: bool = True,
) -> MetricsReport:
    """Run every configured mode and return the merged report (artifacts under ``out_dir``)."""
    orchestrator = ExperimentOrchestrator(
        cfg, hardware, out_dir=out_dir, write_artifacts=write_artifacts
    )
    return orchestrator.run()
