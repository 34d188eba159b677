"""Metrics report: assembly from mode outcomes, schema checks and artifact files.

Every wall-clock dependent number lives under a mode's ``timing`` key, so
``MetricsReport.deterministic_view()`` is identical across reruns of the same
configuration.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..exceptions import ParseError, ValidationError
from ..metrics import cut_edge_summary, energy_summary, gsp, optimal_hit_probability, t_run, tts
from ..qubo import partition_balanced, cut_edges
from .experiment_config import ExperimentConfig, ProblemInstance
from .experiment_worker import InstanceOutcome, ModeOutcome

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

REPORT_SCHEMA_VERSION = 1
TIMING_KEY = "timing"

REQUIRED_KEYS = ("schema_version", "master_seed", "config_hash", "config", "problems", "modes")
PROBLEM_KEYS = ("kind", "n", "p", "graph_seed", "optimum", "optimum_source", "flags")
MODE_KEYS = ("seed", "gsp", "tts_undefined", "packed", "instances", TIMING_KEY)
INSTANCE_KEYS = (
    "problem_id",
    "kind",
    "n",
    "graph_seed",
    "p_optimal",
    "best_energy",
    "energy_summary",
)
TIMING_KEYS = ("sampler_seconds", "unembed_seconds", "t_run_seconds", "tts_seconds")

_OPTIMUM_TOL = 1e-9


@dataclass
class OptimumRecord:
    """Reference optimum of a logical QUBO and where it came from."""

    energy: Optional[float]
    source: str  # "exact" or "best_known"
    flags: List[str] = field(default_factory=list)


@dataclass
class MetricsReport:
    master_seed: int
    config_hash: str
    config: Dict[str, Any]
    problems: Dict[str, Dict[str, Any]]
    modes: Dict[str, Dict[str, Any]]
    schema_version: int = REPORT_SCHEMA_VERSION

    def to_dict(self, include_timing: bool = True) -> Dict[str, Any]:
        modes = {}
        for name, data in self.modes.items():
            modes[name] = dict(data) if include_timing else {
                k: v for k, v in data.items() if k != TIMING_KEY
            }
        return {
            "schema_version": self.schema_version,
            "master_seed": self.master_seed,
            "config_hash": self.config_hash,
            "config": self.config,
            "problems": self.problems,
            "modes": modes,
        }

    def deterministic_view(self) -> Dict[str, Any]:
        """The report without wall-time fields."""
        return self.to_dict(include_timing=False)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def gsp(self, mode: str) -> float:
        return float(self.modes[mode]["gsp"])

    def validate(self) -> None:
        validate_report(self.to_dict())

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MetricsReport":
        validate_report(data)
        return cls(
            master_seed=int(data["master_seed"]),
            config_hash=str(data["config_hash"]),
            config=dict(data["config"]),
            problems=dict(data["problems"]),
            modes=dict(data["modes"]),
            schema_version=int(data["schema_version"]),
        )


def _require(data: Mapping[str, Any], keys: Sequence[str], where: str) -> None:
    missing = [k for k in keys if k not in data]
    if missing:
        raise ValidationError(f"{where}: missing keys {missing}")


def validate_report(data: Mapping[str, Any]) -> None:
    """Check the published report layout and the metric invariants.

    Raises:
        ValidationError: naming the first offending location
    """
    _require(data, REQUIRED_KEYS, "report")
    if data["schema_version"] != REPORT_SCHEMA_VERSION:
        raise ValidationError(f"report: unsupported schema_version {data['schema_version']!r}")
    for pid, problem in data["problems"].items():
        _require(problem, PROBLEM_KEYS, f"problems.{pid}")
    for name, mode in data["modes"].items():
        _require(mode, MODE_KEYS, f"modes.{name}")
        if not 0.0 <= mode["gsp"] <= 1.0:
            raise ValidationError(f"modes.{name}.gsp outside [0, 1]: {mode['gsp']}")
        for key, inst in mode["instances"].items():
            _require(inst, INSTANCE_KEYS, f"modes.{name}.instances.{key}")
            if inst["problem_id"] not in data["problems"]:
                raise ValidationError(f"modes.{name}.instances.{key}: unknown problem")
        timing = mode[TIMING_KEY]
        _require(timing, TIMING_KEYS, f"modes.{name}.{TIMING_KEY}")
        tts_value, run = timing["tts_seconds"], timing["t_run_seconds"]
        if mode["tts_undefined"] != (tts_value is None):
            raise ValidationError(f"modes.{name}: tts_undefined disagrees with tts_seconds")
        p_success = data["config"].get("metrics", {}).get("p_success", 0.99)
        if tts_value is not None and mode["gsp"] < p_success and tts_value < run * (1 - 1e-12):
            raise ValidationError(f"modes.{name}: TTS below t_run although GSP < P_success")


# --- assembly ---------------------------------------------------------------------


def _instance_record(
    inst: InstanceOutcome, optimum: OptimumRecord, problem: ProblemInstance, mode: str
) -> Dict[str, Any]:
    energies = np.asarray(inst.energies, dtype=float)
    best = float(energies.min())
    p_opt = optimal_hit_probability(energies, optimum.energy) if optimum.energy is not None else 0.0
    record: Dict[str, Any] = {
        "problem_id": inst.problem_id,
        "kind": inst.kind,
        "n": inst.n,
        "graph_seed": inst.graph_seed,
        "p_optimal": p_opt,
        "best_energy": best,
        "energy_summary": energy_summary(energies),
        "flags": list(optimum.flags),
    }
    if inst.chain_break_fraction is not None:
        record["chain_break_fraction"] = inst.chain_break_fraction
        record["chain_strength"] = inst.chain_strength
        record["scale_factor"] = inst.scale_factor
        record["chain_stats"] = inst.chain_stats
    if inst.kind == "gpp":
        record["cut_edges"] = cut_edge_summary(problem.graph, inst.assignments)

    if (
        optimum.source == "exact"
        and optimum.energy is not None
        and best < optimum.energy - _OPTIMUM_TOL * max(1.0, abs(optimum.energy))
    ):
        logger.warning(
            f"{mode} {inst.instance_id}: sampled energy {best} below exact optimum {optimum.energy}"
        )
    return record


def _timing(outcome: ModeOutcome, reads: int, p_avg: float, p_success: float) -> Dict[str, Any]:
    """Per-read run time averaged over sampler calls, and the TTS it implies."""
    unembed = {inst.instance_id: inst.unembed_seconds for inst in outcome.instances}
    kinds = {inst.instance_id: inst.kind for inst in outcome.instances}
    runs = []
    for run in outcome.sampler_runs:
        ids = run["instances"]
        n_mvcp = sum(1 for i in ids if kinds[i] == "mvcp")
        wall = float(run["wall_seconds"])
        runs.append(t_run(reads, wall, n_mvcp, len(ids) - n_mvcp, [unembed[i] for i in ids]))
    t_run_seconds = float(np.mean(runs)) if runs else 0.0
    tts_seconds = tts(t_run_seconds, p_avg, p_success) if t_run_seconds > 0 else None
    return {
        "sampler_seconds": float(sum(run["wall_seconds"] for run in outcome.sampler_runs)),
        "sampler_runs": [dict(run) for run in outcome.sampler_runs],
        "unembed_seconds": unembed,
        "t_run_seconds": t_run_seconds,
        "tts_seconds": tts_seconds,
    }


def assemble_report(
    cfg: ExperimentConfig,
    problems: Sequence[ProblemInstance],
    optima: Mapping[str, OptimumRecord],
    outcomes: Mapping[str, ModeOutcome],
) -> MetricsReport:
    """Merge mode outcomes into one report, in configured mode order."""
    by_id = {pi.problem_id: pi for pi in problems}
    problem_records = {}
    for pi in problems:
        opt = optima[pi.problem_id]
        problem_records[pi.problem_id] = {
            "kind": pi.kind,
            "n": pi.n,
            "p": pi.p,
            "graph_seed": pi.graph_seed,
            "optimum": opt.energy,
            "optimum_source": opt.source,
            "flags": list(opt.flags),
        }

    modes: Dict[str, Dict[str, Any]] = {}
    for mode in cfg.modes:
        outcome = outcomes[mode]
        instances = {
            inst.instance_id: _instance_record(
                inst, optima[inst.problem_id], by_id[inst.problem_id], mode
            )
            for inst in outcome.instances
        }
        p_list = [rec["p_optimal"] for rec in instances.values()]
        mode_gsp = gsp(p_list) if p_list else 0.0
        timing = _timing(outcome, cfg.reads, mode_gsp, cfg.p_success)
        modes[mode] = {
            "seed": outcome.seed,
            "gsp": mode_gsp,
            "tts_undefined": timing["tts_seconds"] is None,
            "packed": dict(outcome.packed),
            "plan_file": outcome.plan_file,
            "chain_stats": outcome.extra.get("chain_stats"),
            "instances": instances,
            TIMING_KEY: timing,
        }
        if "plan_files" in outcome.extra:
            modes[mode]["plan_files"] = list(outcome.extra["plan_files"])
        if mode_gsp == 0.0:
            logger.info(f"{mode}: no optimal read in any instance, TTS undefined")
        else:
            logger.info(f"{mode}: GSP={mode_gsp:.4f} over {len(instances)} instances")

    report = MetricsReport(
        master_seed=cfg.master_seed,
        config_hash=cfg.get_hash(),
        config=cfg.to_dict(),
        problems=problem_records,
        modes=modes,
    )
    report.validate()
    return report


# --- artifacts --------------------------------------------------------------------


def _instance_frame(report: MetricsReport) -> pd.DataFrame:
    rows = []
    for mode, data in report.modes.items():
        for key, inst in data["instances"].items():
            rows.append(
                {
                    "mode": mode,
                    "instance": key,
                    "kind": inst["kind"],
                    "n": inst["n"],
                    "p_optimal": inst["p_optimal"],
                }
            )
    return pd.DataFrame(rows, columns=["mode", "instance", "kind", "n", "p_optimal"])


def gsp_by_size(report: MetricsReport) -> pd.DataFrame:
    """GSP per (mode, kind, n)."""
    df = _instance_frame(report)
    return (
        df.groupby(["mode", "kind", "n"], sort=True)["p_optimal"]
        .mean()
        .rename("gsp")
        .reset_index()
    )


def tts_by_size(report: MetricsReport) -> pd.DataFrame:
    """TTS per (mode, kind, n) from the mode's run time and the group's GSP."""
    df = gsp_by_size(report)
    p_success = float(report.config.get("metrics", {}).get("p_success", 0.99))
    t_runs = {m: d[TIMING_KEY]["t_run_seconds"] for m, d in report.modes.items()}
    df["t_run_seconds"] = df["mode"].map(t_runs)
    df["tts_seconds"] = [
        tts(run, p, p_success) if run > 0 else None
        for run, p in zip(df["t_run_seconds"], df["gsp"])
    ]
    return df


def capacity_by_size(report: MetricsReport) -> pd.DataFrame:
    """Packed instance counts per (mode, kind, n)."""
    rows = []
    for mode, data in report.modes.items():
        counts: Dict[tuple, int] = {}
        for inst in data["instances"].values():
            counts[(inst["kind"], inst["n"])] = counts.get((inst["kind"], inst["n"]), 0) + 1
        for (kind, n), packed in sorted(counts.items()):
            rows.append({"mode": mode, "kind": kind, "n": n, "packed": packed})
    return pd.DataFrame(rows, columns=["mode", "kind", "n", "packed"])


def chain_stats_frame(report: MetricsReport) -> pd.DataFrame:
    rows = []
    for mode, data in report.modes.items():
        for key, inst in data["instances"].items():
            stats = inst.get("chain_stats")
            if stats:
                rows.append(
                    {
                        "mode": mode,
                        "instance": key,
                        "kind": inst["kind"],
                        "n": inst["n"],
                        "chain_mean": stats["mean"],
                        "chain_std": stats["std"],
                        "chain_max": stats["max"],
                        "chain_break_fraction": inst.get("chain_break_fraction"),
                    }
                )
    columns = [
        "mode",
        "instance",
        "kind",
        "n",
        "chain_mean",
        "chain_std",
        "chain_max",
        "chain_break_fraction",
    ]
    return pd.DataFrame(rows, columns=columns)


def gpp_energy_frame(
    outcomes: Mapping[str, ModeOutcome], problems: Sequence[ProblemInstance]
) -> pd.DataFrame:
    """Per-read GPP energies, cut sizes and balance, for distribution plots."""
    graphs = {pi.problem_id: pi.graph for pi in problems}
    frames = []
    for mode, outcome in outcomes.items():
        for inst in outcome.instances:
            if inst.kind != "gpp":
                continue
            g = graphs[inst.problem_id]
            frames.append(
                pd.DataFrame(
                    {
                        "mode": mode,
                        "instance": inst.instance_id,
                        "read": np.arange(len(inst.energies)),
                        "energy": inst.energies,
                        "cut_edges": [cut_edges(g, row) for row in inst.assignments],
                        "balanced": [int(partition_balanced(row)) for row in inst.assignments],
                    }
                )
            )
    columns = ["mode", "instance", "read", "energy", "cut_edges", "balanced"]
    return pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=columns)


def write_report(
    report: MetricsReport,
    out_dir: PathLike,
    outcomes: Optional[Mapping[str, ModeOutcome]] = None,
    problems: Optional[Sequence[ProblemInstance]] = None,
) -> Dict[str, Path]:
    """Write ``report.json`` and the CSV plot data; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"report": out / "report.json"}
    paths["report"].write_text(report.to_json() + "\n", encoding="utf-8")

    frames = {
        "capacity": capacity_by_size(report),
        "chain_stats": chain_stats_frame(report),
        "gsp_vs_n": gsp_by_size(report),
        "tts_vs_n": tts_by_size(report),
    }
    if outcomes is not None and problems is not None:
        frames["gpp_energies"] = gpp_energy_frame(outcomes, problems)
    for name, df in frames.items():
        paths[name] = out / f"{name}.csv"
        df.to_csv(paths[name], index=False, encoding="utf-8")
    logger.info(f"Wrote report and {len(frames)} CSV files to {out}")
    return paths


def load_report(path: PathLike) -> MetricsReport:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, str(path), e.lineno) from None
    return MetricsReport.from_dict(data)


def summarize_reports(root: PathLike) -> pd.DataFrame:
    """One row per (report, mode) for every ``report.json`` below ``root``."""
    rows = []
    for path in sorted(Path(root).rglob("report.json")):
        report = load_report(path)
        for mode, data in report.modes.items():
            timing = data[TIMING_KEY]
            rows.append(
                {
                    "report": str(path.relative_to(root)),
                    "master_seed": report.master_seed,
                    "config_hash": report.config_hash[:12],
                    "mode": mode,
                    "instances": len(data["instances"]),
                    "gsp": data["gsp"],
                    "t_run_seconds": timing["t_run_seconds"],
                    "tts_seconds": timing["tts_seconds"],
                }
            )
    columns = [
        "report",
        "master_seed",
        "config_hash",
        "mode",
        "instances",
        "gsp",
        "t_run_seconds",
        "tts_seconds",
    ]
    return pd.DataFrame(rows, columns=columns)
