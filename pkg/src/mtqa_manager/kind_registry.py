"""Problem-kind registry mapping kind keys to objective builders and chain-strength rules.

Builders are stored as dotted paths and resolved on demand, so registering a
kind does not import its implementation.
"""

import importlib
import logging
from dataclasses import dataclass
from typing import Callable, Dict

from .exceptions import ConfigError
from .graphs import ProblemGraph
from .qubo import interaction_graph

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KindSpec:
    """How one problem kind is built and parameterized."""

    qubo_builder: str
    chain_rule: str
    prefactor: float
    prefactor_key: str


class KindRegistry:
    """Registry of problem kinds known to the pipeline."""

    # Kind key -> builder path, chain-strength rule, default prefactor
    _KINDS: Dict[str, KindSpec] = {
        "mvcp": KindSpec("mtqa_manager.qubo.build_mvcp_qubo", "utc", 0.5, "alpha_mvcp"),
        "gpp": KindSpec("mtqa_manager.qubo.build_gpp_qubo", "scaled", 1.5, "alpha_gpp"),
    }

    @classmethod
    def get(cls, kind: str) -> KindSpec:
        """
        Look up a kind.

        Raises:
            ConfigError: the kind has no registered rule
        """
        try:
            return cls._KINDS[kind]
        except KeyError:
            raise ConfigError(
                f"problem kind {kind!r} has no chain-strength rule; known: {sorted(cls._KINDS)}"
            ) from None

    @classmethod
    def register_kind(
        cls,
        kind: str,
        qubo_builder: str,
        chain_rule: str,
        prefactor: float,
        prefactor_key: str = "",
    ) -> None:
        """
        Register a new problem kind (useful for extensions).

        Args:
            kind: Kind key used in experiment configs
            qubo_builder: Dotted path of a ``(ProblemGraph, **options) -> Qubo`` callable
            chain_rule: ``"utc"`` or ``"scaled"``
            prefactor: Default chain-strength prefactor
            prefactor_key: Config key overriding the prefactor
        """
        if chain_rule not in ("utc", "scaled"):
            raise ConfigError(f"unknown chain-strength rule {chain_rule!r}")
        cls._KINDS[kind] = KindSpec(qubo_builder, chain_rule, float(prefactor), prefactor_key)
        logger.info(f"Registered problem kind {kind} ({chain_rule}, prefactor {prefactor})")

    @classmethod
    def list_kinds(cls) -> Dict[str, KindSpec]:
        return cls._KINDS.copy()

    @classmethod
    def is_valid_kind(cls, kind: str) -> bool:
        return kind in cls._KINDS

    @classmethod
    def builder(cls, kind: str) -> Callable:
        path = cls.get(kind).qubo_builder
        module_name, _, attr = path.rpartition(".")
        try:
            return getattr(importlib.import_module(module_name), attr)
        except (ImportError, AttributeError) as e:
            raise ConfigError(f"cannot resolve builder {path!r} for kind {kind!r}: {e}") from None

    @classmethod
    def embedding_graph(cls, kind: str, g: ProblemGraph, **options) -> ProblemGraph:
        """Graph to embed for ``g``: the interaction graph of its objective."""
        return interaction_graph(cls.builder(kind)(g, **options))
