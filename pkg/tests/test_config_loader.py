"""Test config loader with env variable override."""

import json
import os

import pytest

from mtqa_manager.config_loader import DEFAULTS, load_config, merge_config, print_config_sources
from mtqa_manager.exceptions import ConfigError

ENV_KEYS = (
    "MTQA_THREADS",
    "MTQA_SEED",
    "MTQA_OUT_DIR",
    "MTQA_TOPOLOGY",
    "MTQA_READS",
    "MTQA_SWEEPS",
)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    for key in ENV_KEYS + ("LOG_LEVEL",):
        monkeypatch.delenv(key, raising=False)


def write_json(path, data):
    path.write_text(json.dumps(data), encoding="utf-8")
    return path


def test_defaults_without_files(tmp_path):
    config = load_config(config_dir=str(tmp_path))
    assert config == DEFAULTS
    assert config["sampler"] is not DEFAULTS["sampler"]


def test_production_json_in_config_dir(tmp_path):
    write_json(tmp_path / "production.json", {"master_seed": 3, "sampler": {"reads": 10}})
    config = load_config(config_dir=str(tmp_path))
    assert config["master_seed"] == 3
    assert config["sampler"]["reads"] == 10
    # nested sections keep the keys the file does not set
    assert config["sampler"]["sweeps"] == DEFAULTS["sampler"]["sweeps"]


def test_explicit_file_wins_over_config_dir(tmp_path):
    write_json(tmp_path / "production.json", {"master_seed": 3})
    custom = write_json(tmp_path / "desk.json", {"master_seed": 9})
    config = load_config(config_dir=str(tmp_path), config_file=str(custom))
    assert config["master_seed"] == 9


def test_missing_or_broken_file_is_a_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_config(config_file=str(tmp_path / "absent.json"))

    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(config_file=str(broken))

    listing = write_json(tmp_path / "list.json", [1, 2])
    with pytest.raises(ConfigError):
        load_config(config_file=str(listing))


def test_env_overrides(tmp_path, monkeypatch):
    write_json(tmp_path / "production.json", {"threads": 2, "sampler": {"reads": 10}})
    monkeypatch.setenv("MTQA_THREADS", "8")
    monkeypatch.setenv("MTQA_SEED", "123")
    monkeypatch.setenv("MTQA_TOPOLOGY", "chimera:2,2,4")
    monkeypatch.setenv("MTQA_READS", "77")
    monkeypatch.setenv("LOG_LEVEL", "DEBUG")

    config = load_config(config_dir=str(tmp_path))
    assert config["threads"] == 8, "MTQA_THREADS env override failed"
    assert config["master_seed"] == 123, "MTQA_SEED env override failed"
    assert config["topology"] == "chimera:2,2,4", "MTQA_TOPOLOGY env override failed"
    assert config["sampler"]["reads"] == 77, "MTQA_READS env override failed"
    assert config["log_level"] == "DEBUG"


def test_invalid_env_value_is_ignored(tmp_path, monkeypatch, caplog):
    monkeypatch.setenv("MTQA_THREADS", "many")
    config = load_config(config_dir=str(tmp_path))
    assert config["threads"] == DEFAULTS["threads"]
    assert "MTQA_THREADS" in caplog.text


def test_dotenv_file_is_loaded(tmp_path):
    (tmp_path / ".env").write_text("MTQA_SWEEPS=42\n")
    try:
        config = load_config(config_dir=str(tmp_path))
        assert config["sampler"]["sweeps"] == 42
    finally:
        os.environ.pop("MTQA_SWEEPS", None)


def test_merge_config_replaces_top_level_values():
    base = {"modes": ["PQA"], "sampler": {"reads": 1, "sweeps": 2}}
    merge_config(base, {"modes": ["SA-logical"], "sampler": {"reads": 5}})
    assert base == {"modes": ["SA-logical"], "sampler": {"reads": 5, "sweeps": 2}}


def test_print_config_sources(tmp_path, capsys):
    write_json(tmp_path / "production.json", {})
    print_config_sources(str(tmp_path))
    out = capsys.readouterr().out
    assert "production.json" in out
    assert "MTQA_THREADS" in out
