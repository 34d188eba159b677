"""Experiment configuration: which problems, which modes, which settings."""

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from ..config_loader import DEFAULTS, merge_config
from ..exceptions import ConfigError
from ..graphs import ProblemGraph
from ..kind_registry import KindRegistry
from ..parameterize import CONVENTIONS, LogicalProblem

SCHEMA_VERSION = 1

MODE_MTQA_ISOLATED = "MTQA-isolated"
MODE_MTQA_NONISOLATED = "MTQA-nonisolated"
MODE_PQA = "PQA"
MODE_QA_SINGLE = "QA-single"
MODE_SA_LOGICAL = "SA-logical"
MODES = (MODE_MTQA_ISOLATED, MODE_MTQA_NONISOLATED, MODE_PQA, MODE_QA_SINGLE, MODE_SA_LOGICAL)

GPP_PENALTIES = ("bound", "strict")


@dataclass(frozen=True)
class ProblemSpec:
    """A family of Erdős–Rényi instances: one per seed."""

    kind: str
    n: int
    p: float
    seeds: Tuple[int, ...]

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any], index: int = 0) -> "ProblemSpec":
        where = f"problems[{index}]"
        kind = str(doc.get("kind", ""))
        if not KindRegistry.is_valid_kind(kind):
            raise ConfigError(f"{where}.kind: unknown problem kind {kind!r}")
        try:
            n = int(doc["n"])
            p = float(doc.get("p", 0.9))
        except KeyError:
            raise ConfigError(f"{where}.n is required") from None
        except (TypeError, ValueError) as e:
            raise ConfigError(f"{where}: {e}") from None
        if n < 1:
            raise ConfigError(f"{where}.n must be >= 1, got {n}")
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"{where}.p must lie in [0, 1], got {p}")

        if "seeds" in doc:
            seeds = tuple(int(s) for s in doc["seeds"])
        elif "count" in doc:
            seeds = tuple(range(int(doc["count"])))
        else:
            seeds = (0,)
        if not seeds:
            raise ConfigError(f"{where}.seeds must not be empty")
        return cls(kind, n, p, seeds)

    def problem_id(self, seed: int) -> str:
        return f"{self.kind}-n{self.n}-p{self.p:g}-s{seed}"

    def to_dict(self) -> Dict[str, Any]:
        return {"kind": self.kind, "n": self.n, "p": self.p, "seeds": list(self.seeds)}


@dataclass(frozen=True)
class ProblemInstance:
    """A generated logical problem plus the lineage that produced it."""

    problem: LogicalProblem
    p: float
    graph_seed: int

    @property
    def problem_id(self) -> str:
        return self.problem.problem_id

    @property
    def kind(self) -> str:
        return self.problem.kind

    @property
    def n(self) -> int:
        return self.problem.graph.node_count

    @property
    def graph(self) -> ProblemGraph:
        return self.problem.graph


@dataclass
class ExperimentConfig:
    """Validated experiment settings; nested sections keep the loader's dict shape."""

    problems: List[ProblemSpec]
    modes: List[str]
    topology: str = DEFAULTS["topology"]
    master_seed: int = DEFAULTS["master_seed"]
    out_dir: str = DEFAULTS["out_dir"]
    threads: int = DEFAULTS["threads"]
    embedding: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULTS["embedding"]))
    parameterize: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULTS["parameterize"]))
    sampler: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULTS["sampler"]))
    metrics: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULTS["metrics"]))
    spectrum: Dict[str, Any] = field(default_factory=lambda: dict(DEFAULTS["spectrum"]))
    schema_version: int = SCHEMA_VERSION

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "ExperimentConfig":
        """Build from a loaded config dict, filling unset sections from DEFAULTS.

        Raises:
            ConfigError: naming the offending key
        """
        if "schema_version" not in doc:
            raise ConfigError("schema_version is required")
        if doc["schema_version"] != SCHEMA_VERSION:
            raise ConfigError(
                f"schema_version: unsupported version {doc['schema_version']!r} "
                f"(expected {SCHEMA_VERSION})"
            )
        merged = merge_config(copy.deepcopy(DEFAULTS), dict(doc))

        problems_doc = merged.get("problems") or []
        if not isinstance(problems_doc, list) or not problems_doc:
            raise ConfigError("problems: at least one problem spec is required")
        problems = [ProblemSpec.from_dict(p, i) for i, p in enumerate(problems_doc)]

        modes = merged.get("modes")
        if isinstance(modes, str):
            modes = [modes]
        if not modes:
            raise ConfigError("modes: at least one mode is required")
        for mode in modes:
            if mode not in MODES:
                raise ConfigError(f"modes: unknown mode {mode!r}, expected one of {MODES}")

        try:
            cfg = cls(
                problems=problems,
                modes=list(dict.fromkeys(modes)),
                topology=str(merged["topology"]),
                master_seed=int(merged["master_seed"]),
                out_dir=str(merged["out_dir"]),
                threads=int(merged["threads"]),
                embedding=dict(merged["embedding"]),
                parameterize=dict(merged["parameterize"]),
                sampler=dict(merged["sampler"]),
                metrics=dict(merged["metrics"]),
                spectrum=dict(merged["spectrum"]),
                schema_version=SCHEMA_VERSION,
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid top-level value: {e}") from None
        cfg.validate()
        return cfg

    def validate(self) -> None:
        reads = self.sampler.get("reads")
        if not isinstance(reads, int) or reads < 1:
            raise ConfigError(f"sampler.reads must be an integer >= 1, got {reads!r}")
        sweeps = self.sampler.get("sweeps")
        if not isinstance(sweeps, int) or sweeps < 1:
            raise ConfigError(f"sampler.sweeps must be an integer >= 1, got {sweeps!r}")
        beta_range = self.sampler.get("beta_range")
        if beta_range is not None and (
            len(beta_range) != 2 or not 0 < beta_range[0] < beta_range[1]
        ):
            raise ConfigError(
                f"sampler.beta_range must be [beta_min, beta_max], got {beta_range!r}"
            )

        p_success = self.metrics.get("p_success")
        if not isinstance(p_success, (int, float)) or not 0.0 < p_success < 1.0:
            raise ConfigError(f"metrics.p_success must lie in (0, 1), got {p_success!r}")

        if self.parameterize.get("chain_strength_convention") not in CONVENTIONS:
            raise ConfigError(
                f"parameterize.chain_strength_convention must be one of {CONVENTIONS}"
            )
        if self.parameterize.get("gpp_penalty") not in GPP_PENALTIES:
            raise ConfigError(f"parameterize.gpp_penalty must be one of {GPP_PENALTIES}")
        for key in ("h_max", "j_max"):
            if not float(self.parameterize.get(key, 0)) > 0:
                raise ConfigError(f"parameterize.{key} must be positive")

        if int(self.embedding.get("tries", 0)) < 1:
            raise ConfigError("embedding.tries must be >= 1")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    @property
    def reads(self) -> int:
        return int(self.sampler["reads"])

    @property
    def sweeps(self) -> int:
        return int(self.sampler["sweeps"])

    @property
    def beta_range(self) -> Optional[Tuple[float, float]]:
        beta_range = self.sampler.get("beta_range")
        return None if beta_range is None else (float(beta_range[0]), float(beta_range[1]))

    @property
    def p_success(self) -> float:
        return float(self.metrics["p_success"])

    def embedding_options(self) -> Dict[str, Any]:
        timeout = self.embedding.get("timeout_ms")
        return {
            "tries": int(self.embedding["tries"]),
            "timeout_ms": None if timeout is None else int(timeout),
            "max_passes": int(self.embedding["max_passes"]),
            "overuse_base": float(self.embedding["overuse_base"]),
        }

    def prefactors(self) -> Dict[str, float]:
        """Chain-strength prefactor per registered kind, from its configured key."""
        out = {}
        for kind, spec in KindRegistry.list_kinds().items():
            if spec.prefactor_key in self.parameterize:
                out[kind] = float(self.parameterize[spec.prefactor_key])
        return out

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema_version": self.schema_version,
            "problems": [p.to_dict() for p in self.problems],
            "modes": list(self.modes),
            "topology": self.topology,
            "master_seed": self.master_seed,
            "out_dir": self.out_dir,
            "threads": self.threads,
            "embedding": dict(self.embedding),
            "parameterize": dict(self.parameterize),
            "sampler": dict(self.sampler),
            "metrics": dict(self.metrics),
            "spectrum": dict(self.spectrum),
        }

    def get_hash(self) -> str:
        """Hash of the settings that determine results (thread count and paths excluded)."""
        data = self.to_dict()
        data.pop("out_dir")
        data.pop("threads")
        json_str = json.dumps(data, sort_keys=True, default=str)
        return hashlib.sha256(json_str.encode("utf-8")).hexdigest()


def derive_seed(master_seed: int, *keys: int) -> int:
    """Independent 64-bit child seed for a position in the experiment tree."""
    entropy = [master_seed & ((1 << 64) - 1), *keys]
    state = np.random.SeedSequence(entropy).generate_state(2, dtype=np.uint32)
    return int(state[0]) << 32 | int(state[1])
