"""Concrete experiment workers, one per way of running the instances.

- ``ParallelProgramWorker``: a packed plan parameterized per instance (MTQA)
  or globally (PQA), sampled as one physical program.
- ``SingleInstanceWorker``: every problem embedded and sampled alone (QA-single).
- ``LogicalSAWorker``: annealing directly on each logical Ising model (SA-logical).
"""

from collections import Counter
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from ..embedding import ParallelPlan, PlanEntry, chain_stats, find_embedding, save_plan
from ..exceptions import ArgumentError
from ..parameterize import ComposedProgram, compose_mtqa, compose_pqa
from ..sampling import SampleSet, sa_sample, sample_bits, unembed_majority_vote
from ..topology import HardwareGraph
from .experiment_config import (
    MODE_PQA,
    MODE_QA_SINGLE,
    MODE_SA_LOGICAL,
    ExperimentConfig,
    ProblemInstance,
    derive_seed,
)
from .experiment_worker import ExperimentWorker, InstanceOutcome, ModeOutcome


def _packed_counts(kinds: Sequence[str]) -> Dict[str, int]:
    counts = dict(sorted(Counter(kinds).items()))
    counts["total"] = len(kinds)
    return counts


class _EmbeddedRunner(ExperimentWorker):
    """Shared compose, sample and unembed steps for hardware-embedded modes."""

    def __init__(
        self,
        mode: str,
        seed: int,
        cfg: ExperimentConfig,
        problems: Sequence[ProblemInstance],
        **kwargs,
    ):
        super().__init__(mode, seed, **kwargs)
        self.cfg = cfg
        self.problems = {pi.problem_id: pi for pi in problems}

    def _compose(self, plan: ParallelPlan) -> ComposedProgram:
        compose = compose_pqa if self.mode == MODE_PQA else compose_mtqa
        params = self.cfg.parameterize
        return compose(
            plan,
            {pid: pi.problem for pid, pi in self.problems.items()},
            h_max=float(params["h_max"]),
            j_max=float(params["j_max"]),
            prefactors=self.cfg.prefactors(),
            convention=params["chain_strength_convention"],
        )

    def _sample_plan(self, plan: ParallelPlan, seed: int) -> ModeOutcome:
        """Compose ``plan``, sample it once and unembed every entry."""
        with self.stage("compose", seed=seed):
            program = self._compose(plan)
        for inst in program.instances:
            self.log.info(
                f"{inst.instance_id}: chain_strength={inst.chain_strength:.4g} "
                f"scale_factor={inst.scale_factor:.4g}"
            )

        with self.stage("sample", seed=seed):
            samples = sa_sample(
                program.combined, self.cfg.reads, self.cfg.sweeps, self.cfg.beta_range, seed
            )
        with self.stage("unembed", seed=seed):
            solutions = unembed_majority_vote(
                samples,
                plan,
                {pid: pi.problem for pid, pi in self.problems.items()},
                {inst.instance_id: inst.scale_factor for inst in program.instances},
                seed,
            )
        stats = chain_stats(plan)

        outcome = ModeOutcome(self.mode, seed)
        by_key = {inst.instance_id: inst for inst in program.instances}
        for sol in solutions:
            pi = self.problems[sol.problem_id]
            inst = by_key[sol.instance_id]
            mean, std, longest = stats.per_instance[sol.instance_id]
            outcome.instances.append(
                InstanceOutcome(
                    instance_id=sol.instance_id,
                    problem_id=sol.problem_id,
                    kind=pi.kind,
                    n=pi.n,
                    graph_seed=pi.graph_seed,
                    energies=sol.energies,
                    assignments=sol.assignments,
                    unembed_seconds=sol.unembed_seconds,
                    chain_break_fraction=sol.mean_chain_break_fraction,
                    chain_strength=inst.chain_strength,
                    scale_factor=inst.scale_factor,
                    chain_stats={"mean": mean, "std": std, "max": longest},
                )
            )
        instance_ids = [i.instance_id for i in outcome.instances]
        outcome.sampler_runs.append(_sampler_run(samples, instance_ids))
        outcome.packed = _packed_counts([inst.kind for inst in program.instances])
        outcome.extra["chain_stats"] = {"mean": stats.mean, "std": stats.std, "max": stats.max}
        outcome.extra["qubits"] = program.combined.size
        return outcome


def _sampler_run(samples: SampleSet, instance_ids: List[str]) -> Dict[str, object]:
    return {
        "instances": instance_ids,
        "seed": samples.seed,
        "wall_seconds": samples.wall_time_seconds,
    }


class ParallelProgramWorker(_EmbeddedRunner):
    """MTQA (isolated or not) and PQA over a shared packing plan."""

    def __init__(
        self,
        mode: str,
        seed: int,
        cfg: ExperimentConfig,
        problems: Sequence[ProblemInstance],
        plan: ParallelPlan,
        plan_file: Optional[str] = None,
        **kwargs,
    ):
        super().__init__(mode, seed, cfg, problems, **kwargs)
        self.plan = plan
        self.plan_file = plan_file

    def run_mode(self) -> ModeOutcome:
        with self.stage("embed"):
            if not self.plan.entries:
                raise ArgumentError("no instance could be embedded on the hardware")
        self.log.info(
            f"Running {len(self.plan)} packed instances (isolation={self.plan.isolation})"
        )
        outcome = self._sample_plan(self.plan, self.seed)
        outcome.plan_file = self.plan_file
        return outcome


class SingleInstanceWorker(_EmbeddedRunner):
    """Each problem embedded alone on the full hardware and sampled by itself."""

    def __init__(
        self,
        seed: int,
        cfg: ExperimentConfig,
        problems: Sequence[ProblemInstance],
        hardware: HardwareGraph,
        plan_dir: Optional[Path] = None,
        **kwargs,
    ):
        super().__init__(MODE_QA_SINGLE, seed, cfg, problems, **kwargs)
        self.hardware = hardware
        self.plan_dir = plan_dir

    def run_mode(self) -> ModeOutcome:
        outcome = ModeOutcome(self.mode, self.seed)
        plan_files = []
        for idx, (pid, pi) in enumerate(self.problems.items()):
            seed = derive_seed(self.seed, idx)
            with self.stage("embed", pid, seed):
                options = self.cfg.embedding_options()
                emb = find_embedding(pi.problem.embedding_graph(), self.hardware, seed, **options)
                if emb is None:
                    raise ArgumentError(f"{pid} does not embed on the hardware")
            plan = ParallelPlan((PlanEntry(pid, emb),), False, self.hardware)
            if self.plan_dir is not None:
                path = self.plan_dir / f"single-{pid}.json"
                save_plan(plan, path, self.cfg.topology)
                plan_files.append(f"{self.plan_dir.name}/{path.name}")

            single = self._sample_plan(plan, seed)
            outcome.instances.extend(single.instances)
            outcome.sampler_runs.extend(single.sampler_runs)

        outcome.packed = _packed_counts([i.kind for i in outcome.instances])
        if plan_files:
            outcome.extra["plan_files"] = plan_files
        return outcome


class LogicalSAWorker(ExperimentWorker):
    """Simulated annealing on each logical Ising model; no embedding or chains."""

    def __init__(
        self, seed: int, cfg: ExperimentConfig, problems: Sequence[ProblemInstance], **kwargs
    ):
        super().__init__(MODE_SA_LOGICAL, seed, **kwargs)
        self.cfg = cfg
        self.problems = list(problems)

    def run_mode(self) -> ModeOutcome:
        outcome = ModeOutcome(self.mode, self.seed)
        for idx, pi in enumerate(self.problems):
            seed = derive_seed(self.seed, idx)
            key = f"{pi.problem_id}#0"
            with self.stage("sample", key, seed):
                samples = sa_sample(
                    pi.problem.ising, self.cfg.reads, self.cfg.sweeps, self.cfg.beta_range, seed
                )
                bits = sample_bits(samples, pi.problem.ising.variables)
                energies = pi.problem.qubo.energies(bits)
            outcome.instances.append(
                InstanceOutcome(
                    instance_id=key,
                    problem_id=pi.problem_id,
                    kind=pi.kind,
                    n=pi.n,
                    graph_seed=pi.graph_seed,
                    energies=energies,
                    assignments=bits,
                )
            )
            outcome.sampler_runs.append(_sampler_run(samples, [key]))
        outcome.packed = _packed_counts([i.kind for i in outcome.instances])
        return outcome
