import json
import math

import numpy as np
import pytest

from src.numerics.linear import SourceTerm, TimeGrid
from src.numerics.spectral import build_interval_basis, build_rectangle_basis


@pytest.fixture(autouse=True)
def quiet_env(monkeypatch):
    """测试中关闭逐次迭代输出，并屏蔽本地 .env 的覆盖"""
    monkeypatch.setenv("VERBOSE_LOGGING", "false")
    monkeypatch.setenv("DEBUG_MODE", "false")
    for name in ("FWAVE_OUTPUT_DIR", "FWAVE_THREADS", "FWAVE_RNG_SEED"):
        monkeypatch.delenv(name, raising=False)


@pytest.fixture
def interval_basis():
    return build_interval_basis(math.pi, 8)


@pytest.fixture
def box_basis():
    return build_rectangle_basis([math.pi, math.pi], 6)


@pytest.fixture
def unit_grid():
    return TimeGrid.uniform(1.0, 64)


@pytest.fixture
def smooth_data(interval_basis):
    n = interval_basis.mode_count
    u0 = np.zeros(n)
    u0[:3] = [1.0, 0.5, 0.25]
    u1 = np.zeros(n)
    u1[:2] = [0.5, -0.25]
    return u0, u1


@pytest.fixture
def constant_source(interval_basis, unit_grid):
    coeffs = np.zeros(interval_basis.mode_count)
    coeffs[0] = 1.0
    return SourceTerm.constant(unit_grid, coeffs)


@pytest.fixture
def write_config(tmp_path):
    """把字典写成配置文件，输出目录指向临时目录"""

    def _write(overrides=None, name="experiment_config.json"):
        config = {
            "domain": {"kind": "interval", "modes": 6},
            "alpha": 1.5,
            "data": {"u0": "mode:1", "u0_scale": 0.01},
            "time": {"T": 1.0, "T0": 1.0, "steps": 32},
            "exponents": {"d": 3},
            "strichartz": {"horizons": [1.0, 2.0], "trials": 3, "steps": 16, "c0": 1.0},
            "output_dir": str(tmp_path / "results"),
        }
        for key, value in (overrides or {}).items():
            if isinstance(value, dict) and isinstance(config.get(key), dict):
                config[key] = {**config[key], **value}
            else:
                config[key] = value
        path = tmp_path / name
        path.write_text(json.dumps(config), encoding="utf-8")
        return path

    return _write
