"""Command-line interface for the multi-task annealing manager.

Usage:
    # Generate Erdős–Rényi instances
    python -m mtqa_manager.cli gen --n 10 --p 0.9 --count 5

    # Pack one instance repeatedly, or sweep packing capacity over sizes
    python -m mtqa_manager.cli embed --kind mvcp --n 10 --isolation
    python -m mtqa_manager.cli embed --kind mvcp --sweep --sizes 5,10,15 --count 20

    # Run an experiment
    python -m mtqa_manager.cli run --config config/desk.json --mode PQA --mode MTQA-nonisolated

    # Spectral gap and transition probabilities of a small instance
    python -m mtqa_manager.cli spectrum --kind mvcp --n 6

    # Re-aggregate reports
    python -m mtqa_manager.cli report runs/
"""

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, List, Optional

import pandas as pd

from .config_loader import load_config, print_config_sources
from .core import MODES, ExperimentConfig, run_experiment, summarize_reports
from .embedding import capacity_sweep, chain_stats, parallel_embedding_search, save_plan
from .exceptions import ArgumentError, MTQAError
from .graphs import gen_erdos_renyi, save_graph
from .kind_registry import KindRegistry
from .log_config import LogConfig
from .parameterize import LogicalProblem
from .qubo import save_model
from .spectrum import (
    combine_different,
    combine_identical,
    default_schedule,
    eigencurves,
    export_spectrum_csv,
    load_schedule_csv,
    transition_probabilities,
)
from .topology import parse_topology_spec

logger = logging.getLogger("mtqa_manager.cli")


def setup_logging(level: Optional[str] = None) -> None:
    """Attach the configured backends to the package logger (LOG_LEVEL when level is None)."""
    config = LogConfig.get_config()
    if level:
        config["level"] = level
    LogConfig.setup_logger("mtqa_manager", config=config)


def _settings(args) -> Dict[str, Any]:
    """Loaded config with the common command-line overrides applied."""
    config = load_config(config_file=args.config)
    if args.seed is not None:
        config["master_seed"] = args.seed
    if args.out_dir is not None:
        config["out_dir"] = args.out_dir
    if args.topology is not None:
        config["topology"] = args.topology
    return config


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _instance(kind: str, n: int, p: float, seed: int) -> LogicalProblem:
    g = gen_erdos_renyi(n, p, seed)
    return LogicalProblem.build(f"{kind}-n{n}-p{p:g}-s{seed}", kind, g)


def cmd_gen(args) -> int:
    """Write graph files (and optionally their QUBOs)."""
    config = _settings(args)
    out = Path(config["out_dir"]) / "graphs"
    out.mkdir(parents=True, exist_ok=True)
    first = config["master_seed"]
    for seed in range(first, first + args.count):
        g = gen_erdos_renyi(args.n, args.p, seed)
        path = out / f"er-n{args.n}-p{args.p:g}-s{seed}.txt"
        save_graph(g, path)
        print(f"✅ {path} ({len(g.edges)} edges)")
        if args.qubo:
            problem = LogicalProblem.build(path.stem, args.qubo, g)
            model_path = path.with_suffix(f".{args.qubo}.json")
            save_model(problem.qubo, model_path)
            print(f"   QUBO: {model_path}")
    return 0


def cmd_embed(args) -> int:
    """Pack one instance with the parallel embedding search, or sweep capacity."""
    config = _settings(args)
    hardware = parse_topology_spec(config["topology"])
    options = dict(config["embedding"])
    out = Path(config["out_dir"])
    out.mkdir(parents=True, exist_ok=True)

    if args.sweep:
        seeds = list(range(config["master_seed"], config["master_seed"] + args.count))
        isolations = {"on": [True], "off": [False], "both": [True, False]}[args.isolation]
        rows = []
        for isolation in isolations:
            rows.extend(
                capacity_sweep(args.sizes, seeds, hardware, isolation, args.kind, args.p, **options)
            )
        df = pd.DataFrame([asdict(row) for row in rows])
        path = out / f"capacity-{args.kind}.csv"
        df.to_csv(path, index=False, encoding="utf-8")
        summary = df.groupby(["isolation", "n"])["packed"].median()
        print(summary.to_string())
        print(f"✅ Capacity sweep written to {path}")
        return 0

    if args.isolation == "both":
        raise ArgumentError("--isolation both is only valid with --sweep")
    isolation = args.isolation == "on"
    n = args.sizes[0]
    seed = config["master_seed"]
    problem = _instance(args.kind, n, args.p, seed)
    plan = parallel_embedding_search(
        [problem.embedding_graph()], hardware, isolation, seed, [problem.problem_id], **options
    )
    path = out / f"plan-{problem.problem_id}-{'isolated' if isolation else 'nonisolated'}.json"
    save_plan(plan, path, config["topology"])
    print(f"Packed {len(plan)} copies of {problem.problem_id} (isolation={isolation})")
    if plan.entries:
        stats = chain_stats(plan)
        print(f"Chain length: mean={stats.mean:.2f} std={stats.std:.2f} max={stats.max}")
    print(f"✅ Plan written to {path}")
    return 0


def cmd_run(args) -> int:
    """Run an experiment and write its report."""
    config = _settings(args)
    if args.mode:
        config["modes"] = args.mode
    cfg = ExperimentConfig.from_dict(config)

    print("=" * 80)
    modes = ", ".join(cfg.modes)
    print(f"Experiment {cfg.get_hash()[:12]} | modes={modes} | seed={cfg.master_seed}")
    print("=" * 80)
    report = run_experiment(cfg)

    for mode, data in report.modes.items():
        timing = data["timing"]
        tts_text = "undefined" if timing["tts_seconds"] is None else f"{timing['tts_seconds']:.4g}s"
        print(
            f"{mode:18s} instances={len(data['instances']):4d} GSP={data['gsp']:.4f} "
            f"t_run={timing['t_run_seconds']:.4g}s TTS={tts_text}"
        )
    print(f"✅ Report written to {Path(cfg.out_dir) / 'report.json'}")
    return 0


def cmd_spectrum(args) -> int:
    """Eigencurves, minimum gap and transition probabilities of a small logical instance."""
    config = _settings(args)
    spec_cfg = config["spectrum"]
    anneal_time = float(spec_cfg["anneal_time_seconds"])
    if spec_cfg.get("schedule_csv"):
        sched = load_schedule_csv(spec_cfg["schedule_csv"], anneal_time)
    else:
        sched = default_schedule(int(spec_cfg["grid_points"]), anneal_time)

    problem = _instance(args.kind, args.n, args.p, config["master_seed"])
    result = eigencurves(problem.ising, sched)
    label = problem.problem_id
    if args.copies == 2:
        result = combine_identical(result)
        label += "-x2"
    if args.pair_kind:
        other = _instance(args.pair_kind, args.pair_n or args.n, args.p, config["master_seed"] + 1)
        result = combine_different(result, eigencurves(other.ising, sched))
        label += f"+{other.problem_id}"
    result = transition_probabilities(result, sched, float(spec_cfg["temperature_kelvin"]))

    out = Path(config["out_dir"])
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"spectrum-{label}.csv"
    export_spectrum_csv(result, path)
    s_min, gap_min = result.min_gap
    s_peak, p_peak = result.max_p_total()
    print(f"Minimum gap {gap_min:.6g} GHz at s={s_min:.4f}")
    print(f"Peak P_total {p_peak:.4g} at s={s_peak:.3f}")
    print(f"✅ Spectrum written to {path}")
    return 0


def cmd_report(args) -> int:
    """Re-aggregate every report.json below a directory into summary.csv."""
    config = _settings(args)
    root = Path(args.directory or config["out_dir"])
    df = summarize_reports(root)
    if df.empty:
        print(f"❌ No report.json found below {root}")
        return 1
    path = root / "summary.csv"
    df.to_csv(path, index=False, encoding="utf-8")
    print(df.to_string(index=False))
    print(f"✅ Summary written to {path}")
    return 0


def cmd_config(args) -> int:
    """Show configuration sources and loaded values."""
    print_config_sources(args.config_dir)

    if args.show:
        config = load_config(config_dir=args.config_dir, config_file=args.config)
        print("\nLoaded Configuration Values:")
        print("=" * 80)
        print(json.dumps(config, indent=2, default=str))
        print("=" * 80)

    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Multi-task annealing manager - parallel embedding experiments",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Desk experiment
  python -m mtqa_manager.cli run --config config/desk.json

  # Compare PQA and MTQA on the same plan
  python -m mtqa_manager.cli run --config config/desk.json --mode PQA --mode MTQA-nonisolated

  # Show configuration sources
  python -m mtqa_manager.cli config --show
        """,
    )

    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        help="Logging level (default: LOG_LEVEL or INFO)",
    )

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to config JSON file")
    common.add_argument("--seed", type=int, help="Master seed (overrides config)")
    common.add_argument("--out-dir", help="Output directory (overrides config)")
    common.add_argument("--topology", help="chimera:R,C[,T] or hardware file path")

    kinds = sorted(KindRegistry.list_kinds())
    subparsers = parser.add_subparsers(dest="command", help="Command to run")

    gen_parser = subparsers.add_parser("gen", parents=[common], help="Generate random graphs")
    gen_parser.add_argument("--n", type=int, required=True, help="Number of nodes")
    gen_parser.add_argument("--p", type=float, default=0.9, help="Edge probability")
    gen_parser.add_argument("--count", type=int, default=1, help="Graphs, seeds from --seed up")
    gen_parser.add_argument("--qubo", choices=kinds, help="Also write this problem's QUBO")

    embed_parser = subparsers.add_parser(
        "embed", parents=[common], help="Parallel embedding plans and capacity sweeps"
    )
    embed_parser.add_argument("--kind", choices=kinds, default="mvcp")
    embed_parser.add_argument(
        "--n", "--sizes", dest="sizes", type=_int_list, default=[10], help="Sizes, comma-separated"
    )
    embed_parser.add_argument("--p", type=float, default=0.9, help="Edge probability")
    embed_parser.add_argument(
        "--isolation", nargs="?", const="on", default="off", choices=["on", "off", "both"]
    )
    embed_parser.add_argument("--sweep", action="store_true", help="Sweep sizes and seeds")
    embed_parser.add_argument("--count", type=int, default=20, help="Seeds per size in a sweep")

    run_parser = subparsers.add_parser("run", parents=[common], help="Run an experiment")
    run_parser.add_argument(
        "--mode", action="append", choices=list(MODES), help="Mode to run (repeatable)"
    )

    spectrum_parser = subparsers.add_parser(
        "spectrum", parents=[common], help="Eigen analysis of a small instance"
    )
    spectrum_parser.add_argument("--kind", choices=kinds, default="mvcp")
    spectrum_parser.add_argument("--n", type=int, default=6)
    spectrum_parser.add_argument("--p", type=float, default=0.9)
    spectrum_parser.add_argument("--copies", type=int, choices=[1, 2], default=1)
    spectrum_parser.add_argument("--pair-kind", choices=kinds, help="Second instance kind")
    spectrum_parser.add_argument("--pair-n", type=int, help="Size of the second instance")

    report_parser = subparsers.add_parser("report", parents=[common], help="Re-aggregate reports")
    report_parser.add_argument("directory", nargs="?", help="Directory searched for report.json")

    config_parser = subparsers.add_parser("config", help="Show configuration sources")
    config_parser.add_argument("--config", help="Path to config JSON file")
    config_parser.add_argument("--config-dir", default="config", help="Config directory")
    config_parser.add_argument("--show", action="store_true", help="Show loaded config values")

    return parser


COMMANDS = {
    "gen": cmd_gen,
    "embed": cmd_embed,
    "run": cmd_run,
    "spectrum": cmd_spectrum,
    "report": cmd_report,
    "config": cmd_config,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for CLI."""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    setup_logging(args.log_level)

    try:
        return COMMANDS[args.command](args)
    except MTQAError as e:
        print(f"❌ {e}", file=sys.stderr)
        logger.debug("Command failed", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
