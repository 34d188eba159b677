"""Unified configuration loader with env var override support.

Load order (highest priority first):
1. Environment variables (MTQA_THREADS, MTQA_SEED, MTQA_TOPOLOGY, etc.)
2. .env file (config/.env)
3. JSON config file (config/production.json or custom path)
4. Hardcoded defaults

Nested sections (``sampler``, ``embedding``, ...) are merged key by key, so a
JSON file that sets only ``sampler.reads`` keeps the default ``sampler.sweeps``.

Usage:
    from mtqa_manager.config_loader import load_config

    # Load with defaults
    cfg = load_config()

    # Load from specific JSON file
    cfg = load_config(config_file="config/desk.json")
"""

import copy
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .exceptions import ConfigError

logger = logging.getLogger(__name__)


# Hardcoded defaults (lowest priority)
DEFAULTS: Dict[str, Any] = {
    "master_seed": 0,
    "out_dir": "runs",
    "threads": 4,
    "topology": "chimera:16,16,4",
    "modes": ["MTQA-nonisolated"],
    "problems": [],
    "embedding": {
        "tries": 10,
        "timeout_ms": 1000,
        "max_passes": 32,
        "overuse_base": 10.0,
    },
    "parameterize": {
        "h_max": 4.0,
        "j_max": 1.0,
        "alpha_mvcp": 0.5,
        "alpha_gpp": 1.5,
        "chain_strength_convention": "ising",
        "gpp_penalty": "bound",
    },
    "sampler": {
        "reads": 2500,
        "sweeps": 1000,
        "beta_range": None,
    },
    "metrics": {
        "p_success": 0.99,
    },
    "spectrum": {
        "grid_points": 201,
        "anneal_time_seconds": 20e-6,
        "temperature_kelvin": 0.016,
        "schedule_csv": None,
    },
    "log_level": "INFO",
}

_NESTED = ("embedding", "parameterize", "sampler", "metrics", "spectrum")


def load_config(
    config_dir: Optional[str] = None,
    config_file: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Load configuration with env var override support.

    Args:
        config_dir: Path to config directory (default: ./config)
        config_file: Path to JSON config file (overrides config_dir/production.json)

    Returns:
        Merged configuration dict

    Raises:
        ConfigError: an explicitly requested config file is missing or unreadable
    """
    config = copy.deepcopy(DEFAULTS)
    config_dir = config_dir or "config"

    # 1. Load JSON config file
    if config_file:
        if not Path(config_file).exists():
            raise ConfigError(f"config file not found: {config_file}")
        merge_config(config, _load_json_file(config_file))
        logger.info(f"Loaded config from: {config_file}")
    else:
        default_config_file = Path(config_dir) / "production.json"
        if default_config_file.exists():
            merge_config(config, _load_json_file(str(default_config_file)))
            logger.info(f"Loaded config from: {default_config_file}")
        else:
            logger.debug(f"No config file found at {default_config_file}, using defaults")

    # 2. Load .env file (if exists)
    env_file = Path(config_dir) / ".env"
    if env_file.exists():
        load_dotenv(env_file)
        logger.info(f"Loaded .env from: {env_file}")
    else:
        logger.debug(f"No .env file found at {env_file}")

    # 3. Override with environment variables (highest priority)
    return _apply_env_overrides(config)


def merge_config(base: Dict[str, Any], overrides: Dict[str, Any]) -> Dict[str, Any]:
    """Merge ``overrides`` into ``base`` in place; nested sections merge per key."""
    for key, value in overrides.items():
        if key in _NESTED and isinstance(value, dict) and isinstance(base.get(key), dict):
            base[key].update(value)
        else:
            base[key] = value
    return base


def _load_json_file(path: str) -> Dict[str, Any]:
    """Load and parse JSON config file."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Failed to load config file {path}: {e}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return data


def _apply_env_overrides(config: Dict[str, Any]) -> Dict[str, Any]:
    """Apply environment variable overrides (highest priority)."""
    # env var -> (section or None, key, type)
    env_mappings = {
        "MTQA_THREADS": (None, "threads", int),
        "MTQA_SEED": (None, "master_seed", int),
        "MTQA_OUT_DIR": (None, "out_dir", str),
        "MTQA_TOPOLOGY": (None, "topology", str),
        "MTQA_READS": ("sampler", "reads", int),
        "MTQA_SWEEPS": ("sampler", "sweeps", int),
        "LOG_LEVEL": (None, "log_level", str),
    }

    for env_key, (section, cfg_key, val_type) in env_mappings.items():
        env_val = os.getenv(env_key)
        if env_val is None or env_val == "":
            continue
        try:
            value = val_type(env_val)
        except ValueError:
            logger.warning(f"Invalid {val_type.__name__} value for {env_key}: {env_val}")
            continue
        target = config[section] if section else config
        target[cfg_key] = value
        logger.debug(f"Override {cfg_key} from env {env_key}")

    return config


def print_config_sources(config_dir: str = "config") -> None:
    """Print where configuration is loaded from (for debugging)."""
    config_file = Path(config_dir) / "production.json"
    env_file = Path(config_dir) / ".env"

    print("\n" + "=" * 80)
    print("Configuration Sources (load order, high to low priority):")
    print("=" * 80)
    print("\n1. Environment Variables:")
    print("   • MTQA_THREADS, MTQA_SEED, MTQA_OUT_DIR, MTQA_TOPOLOGY")
    print("   • MTQA_READS, MTQA_SWEEPS, LOG_LEVEL, LOG_BACKENDS")

    print(f"\n2. .env file: {env_file}")
    print("   ✅ Found (will be loaded)" if env_file.exists() else "   ❌ Not found")

    print(f"\n3. JSON config: {config_file}")
    print("   ✅ Found (will be loaded)" if config_file.exists() else "   ❌ Not found")

    print(f"\n4. Hardcoded defaults: {list(DEFAULTS.keys())}")
    print("=" * 80 + "\n")
