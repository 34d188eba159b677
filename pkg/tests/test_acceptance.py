"""End-to-end checks across generation, packing, parameterization, sampling and metrics."""

import itertools
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from mtqa_manager.config_loader import load_config
from mtqa_manager.core import ExperimentConfig, ExperimentOrchestrator, run_experiment
from mtqa_manager.embedding import (
    Embedding,
    ParallelPlan,
    PlanEntry,
    parallel_embedding_search,
    validate_plan,
)
from mtqa_manager.graphs import ProblemGraph, gen_erdos_renyi
from mtqa_manager.metrics import gsp, optimal_hit_probability
from mtqa_manager.parameterize import LogicalProblem, compose_mtqa, compose_pqa
from mtqa_manager.qubo import minimum_vertex_cover_size, qubo_argmin_set
from mtqa_manager.sampling import exact_sample, sa_sample, unembed_majority_vote
from mtqa_manager.topology import HardwareGraph, gen_chimera

DESK_CONFIG = Path(__file__).parent.parent / "config" / "desk.json"
PRODUCTION_CONFIG = DESK_CONFIG.with_name("production.json")


def k_graph(n):
    return ProblemGraph.from_edges(n, itertools.combinations(range(n), 2))


def _mixed_plan():
    """K6 cover next to a K6 cut with heavy edge weight, singleton chains on K12."""
    hardware = HardwareGraph(frozenset(range(12)), frozenset(itertools.combinations(range(12), 2)))
    cover = LogicalProblem.build("cover", "mvcp", k_graph(6))
    cut = LogicalProblem.build("cut", "gpp", k_graph(6), B=40.0)
    entries = []
    for problem, start in ((cover, 0), (cut, 6)):
        chains = {v: {start + v} for v in range(6)}
        emb = Embedding(chains, problem.embedding_graph().edges, hardware)
        entries.append(PlanEntry(problem.problem_id, emb))
    return ParallelPlan(tuple(entries), False, hardware), {"cover": cover, "cut": cut}


def test_packed_mtqa_program_recovers_each_optimum():
    hardware = gen_chimera(2, 2, 4)
    problems = {
        "tri": LogicalProblem.build("tri", "mvcp", k_graph(3)),
        "sq": LogicalProblem.build(
            "sq", "mvcp", ProblemGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
        ),
    }
    plan = parallel_embedding_search(
        [p.embedding_graph() for p in problems.values()],
        hardware,
        False,
        seed=4,
        problem_ids=list(problems),
        timeout_ms=None,
    )
    assert validate_plan(plan)
    assert {e.problem_id for e in plan.entries} == {"tri", "sq"}

    program = compose_mtqa(plan, problems, prefactors={"mvcp": 2.0})
    samples = sa_sample(program.combined, reads=200, sweeps=300, beta_range=(0.1, 20.0), seed=1)
    solutions = unembed_majority_vote(
        samples, plan, problems, {i.instance_id: i.scale_factor for i in program.instances}, seed=1
    )

    optima = {pid: qubo_argmin_set(p.qubo)[1] for pid, p in problems.items()}
    assert optima["tri"] == pytest.approx(minimum_vertex_cover_size(k_graph(3)))
    hits = [optimal_hit_probability(s.energies, optima[s.problem_id]) for s in solutions]
    assert len(hits) == len(plan)
    assert min(hits) >= 0.5
    assert gsp(hits) >= 0.8


def test_global_scaling_shrinks_mvcp_next_to_heavy_gpp():
    """A GPP instance with large edge weight forces PQA to rescale its MVCP neighbour."""
    plan, lookup = _mixed_plan()
    mtqa = {i.problem_id: i for i in compose_mtqa(plan, lookup).instances}
    pqa = {i.problem_id: i for i in compose_pqa(plan, lookup).instances}

    # K6 cover: |h| = 2, |J| = 0.5 fits the ranges; K6 cut with B=40: |J| = 5
    assert mtqa["cover"].scale_factor == 1.0
    assert mtqa["cut"].scale_factor == pytest.approx(5.0)
    assert pqa["cover"].scale_factor / mtqa["cover"].scale_factor >= 5.0 - 1e-9
    assert pqa["cover"].physical.max_abs_j() == pytest.approx(0.1)
    assert mtqa["cover"].physical.max_abs_j() == pytest.approx(0.5)
    assert pqa["cut"].physical.max_abs_j() == pytest.approx(mtqa["cut"].physical.max_abs_j())


def test_global_scaling_costs_the_small_instance_its_optimum():
    plan, lookup = _mixed_plan()
    optimum = qubo_argmin_set(lookup["cover"].qubo)[1]
    # finite final beta: rescaled coefficients sit closer to the sampling temperature
    wins = losses = 0
    for seed in range(20):
        rates = {}
        for name, compose in (("mtqa", compose_mtqa), ("pqa", compose_pqa)):
            program = compose(plan, lookup)
            samples = sa_sample(
                program.combined, reads=200, sweeps=100, beta_range=(0.1, 3.0), seed=seed
            )
            scales = {i.instance_id: i.scale_factor for i in program.instances}
            solutions = unembed_majority_vote(samples, plan, lookup, scales, seed=seed)
            cover = next(s for s in solutions if s.problem_id == "cover")
            rates[name] = optimal_hit_probability(cover.energies, optimum)
        if rates["pqa"] < rates["mtqa"]:
            wins += 1
        elif rates["pqa"] > rates["mtqa"]:
            losses += 1
    assert stats.binomtest(wins, wins + losses, 0.5, alternative="greater").pvalue < 0.05


def test_single_mode_matches_logical_optimum_on_random_instances():
    cfg = ExperimentConfig.from_dict(
        {
            "schema_version": 1,
            "master_seed": 2,
            "topology": "chimera:4,4,4",
            "modes": ["QA-single", "SA-logical"],
            "problems": [{"kind": "mvcp", "n": 6, "p": 0.5, "seeds": [0, 1, 2]}],
            "embedding": {"timeout_ms": None, "tries": 4},
            "sampler": {"reads": 100, "sweeps": 200, "beta_range": [0.1, 20.0]},
            "parameterize": {"alpha_mvcp": 2.0},
        }
    )
    report = run_experiment(cfg, write_artifacts=False)
    for pid, record in report.problems.items():
        seed = record["graph_seed"]
        cover = minimum_vertex_cover_size(gen_erdos_renyi(6, 0.5, seed))
        assert record["optimum"] == pytest.approx(cover)
    assert report.gsp("SA-logical") >= 0.8
    assert report.gsp("QA-single") > 0.0


@pytest.mark.slow
def test_desk_experiment():
    cfg = ExperimentConfig.from_dict(load_config(config_file=str(DESK_CONFIG)))
    report = run_experiment(cfg, write_artifacts=False)
    report.validate()
    assert report.gsp("SA-logical") > 0.5
    for mode in ("MTQA-isolated", "MTQA-nonisolated", "PQA"):
        assert report.modes[mode]["packed"]["total"] >= 5
    energies = [
        inst["best_energy"] - report.problems[inst["problem_id"]]["optimum"]
        for inst in report.modes["MTQA-nonisolated"]["instances"].values()
    ]
    assert np.min(energies) == pytest.approx(0.0, abs=1e-9)


@pytest.mark.slow
def test_production_config_packs_both_plans():
    cfg = ExperimentConfig.from_dict(load_config(config_file=str(PRODUCTION_CONFIG)))
    orchestrator = ExperimentOrchestrator(cfg, write_artifacts=False)
    orchestrator.build_problems()
    plans = orchestrator.build_plans()
    for isolation in (False, True):
        plan, _ = plans[isolation]
        assert len(plan) >= 1
        assert validate_plan(plan)


def _small_program(seed):
    hardware = gen_chimera(2, 2, 4)
    problems = {
        "cover": LogicalProblem.build("cover", "mvcp", gen_erdos_renyi(4, 0.7, seed)),
        "cut": LogicalProblem.build("cut", "gpp", gen_erdos_renyi(4, 0.7, seed)),
    }
    plan = parallel_embedding_search(
        [p.embedding_graph() for p in problems.values()],
        hardware,
        False,
        seed,
        problem_ids=list(problems),
        timeout_ms=None,
    )
    first_sweep = ParallelPlan(plan.entries[:2], False, hardware)
    assert first_sweep.order == ["cover", "cut"]
    return compose_mtqa(first_sweep, problems)


@pytest.mark.slow
def test_sa_reaches_exact_ground_energy_on_small_programs():
    trials = 50
    hits = 0
    for seed in range(trials):
        program = _small_program(seed)
        assert program.combined.size <= 20
        _, ground = exact_sample(program.combined)
        samples = sa_sample(program.combined, reads=2500, sweeps=300, seed=seed)
        if samples.energies.min() <= ground + 1e-9 * max(1.0, abs(ground)):
            hits += 1
    assert hits >= 0.99 * trials


def _singleton_plan(problems, hardware):
    entries = []
    start = 0
    for problem in problems:
        n = problem.graph.node_count
        chains = {v: {start + v} for v in range(n)}
        emb = Embedding(chains, problem.embedding_graph().edges, hardware)
        entries.append(PlanEntry(problem.problem_id, emb))
        start += n
    return ParallelPlan(tuple(entries), False, hardware)


def test_instance_energies_do_not_depend_on_co_composed_instances():
    hardware = HardwareGraph(frozenset(range(20)), frozenset(itertools.combinations(range(20), 2)))
    target = LogicalProblem.build("target", "mvcp", gen_erdos_renyi(10, 0.5, 1))
    partners = [
        LogicalProblem.build("left", "mvcp", gen_erdos_renyi(10, 0.9, 2)),
        LogicalProblem.build("right", "gpp", gen_erdos_renyi(10, 0.3, 3)),
    ]
    energies = []
    for layout in ([target, partners[0]], [partners[1], target]):
        plan = _singleton_plan(layout, hardware)
        lookup = {p.problem_id: p for p in layout}
        program = compose_mtqa(plan, lookup)
        # fixed schedule: the default range depends on the partner's coefficients
        samples = sa_sample(program.combined, reads=1000, sweeps=50, beta_range=(0.1, 2.0), seed=5)
        scales = {i.instance_id: i.scale_factor for i in program.instances}
        solutions = unembed_majority_vote(samples, plan, lookup, scales, seed=5)
        energies.append(next(s for s in solutions if s.problem_id == "target").energies)
    assert stats.ks_2samp(energies[0], energies[1]).pvalue > 0.01
