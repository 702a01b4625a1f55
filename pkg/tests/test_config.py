import json
from pathlib import Path

import pytest

from src.core.config_manager import ConfigManager, build_config
from src.errors import ValidationError


def test_defaults():
    config = build_config({})
    assert config.alpha == 1.5
    assert config.domain.kind == "interval"
    assert config.threads == 1
    assert config.dimension == 1


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError, match="colour"):
        build_config({"domain": {"modes": 8, "colour": "red"}})


@pytest.mark.parametrize("alpha", [1.0, 2.0, 0.5])
def test_order_range(alpha):
    with pytest.raises(ValidationError, match="alpha"):
        build_config({"alpha": alpha})


def test_ell_window():
    with pytest.raises(ValidationError):
        build_config({"alpha": 1.5, "exponents": {"ell": 2.0}})


def test_echo_excludes_run_settings():
    echo = build_config({"threads": 4, "output_dir": "elsewhere"}).report_echo()
    assert "threads" not in echo
    assert "output_dir" not in echo
    assert echo["alpha"] == 1.5


def test_priority_cli_over_env_over_file(tmp_path, monkeypatch):
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"rng_seed": 1, "threads": 2, "output_dir": "from_file"}), encoding="utf-8")
    monkeypatch.setenv("FWAVE_RNG_SEED", "5")
    monkeypatch.setenv("FWAVE_THREADS", "3")

    config = ConfigManager(str(path)).load(threads=8, output_dir=None)
    assert config.rng_seed == 5
    assert config.threads == 8
    assert config.output_dir == "from_file"


def test_missing_file(tmp_path):
    with pytest.raises(ValidationError, match="不存在"):
        ConfigManager(str(tmp_path / "nope.json")).load()


def test_malformed_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(ValidationError):
        ConfigManager(str(path)).load()


@pytest.mark.parametrize("name", ["FWAVE_THREADS", "FWAVE_RNG_SEED"])
def test_non_integer_env_value_rejected(tmp_path, monkeypatch, name):
    path = tmp_path / "config.json"
    path.write_text("{}", encoding="utf-8")
    monkeypatch.setenv(name, "four")
    with pytest.raises(ValidationError, match=name):
        ConfigManager(str(path)).load()


def test_shipped_config_is_three_dimensional_box():
    path = Path(__file__).resolve().parents[1] / "experiment_config.json"
    config = ConfigManager(str(path)).load()
    assert config.domain.kind == "rectangle"
    assert config.domain.dimension == 3
    assert config.exponents.d is None
    assert config.dimension == 3
