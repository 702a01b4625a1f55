import json
import math

import numpy as np
import pandas as pd
import pytest

from src.core.data_persistence import (
    DataPersistence,
    atomic_write_text,
    dumps_report,
    load_report,
    to_jsonable,
    trajectory_frame,
)
from src.errors import DivergenceError, ValidationError


def test_floats_use_seventeen_digits():
    text = dumps_report({"x": 0.1, "y": [1.0 / 3.0, 2]})
    assert '"x": 0.10000000000000001' in text
    assert "0.33333333333333331" in text
    assert json.loads(text)["y"][1] == 2


def test_non_finite_values_become_strings():
    data = json.loads(dumps_report({"a": math.inf, "b": -math.inf, "c": math.nan}))
    assert data == {"a": "inf", "b": "-inf", "c": "nan"}


def test_numpy_values_are_converted():
    value = to_jsonable({"arr": np.array([1.5, 2.5]), "flag": np.bool_(True), "n": np.int64(3)})
    assert value == {"arr": [1.5, 2.5], "flag": True, "n": 3}
    assert isinstance(value["n"], int)


def test_dump_is_deterministic():
    payload = {"b": [0.1, 0.2], "a": {"nested": [{"k": 1.0}]}}
    assert dumps_report(payload) == dumps_report(payload)
    assert json.loads(dumps_report(payload)) == payload


def test_atomic_write_leaves_no_temporary_files(tmp_path):
    target = tmp_path / "sub" / "report.json"
    atomic_write_text(target, "{}\n")
    atomic_write_text(target, "[]\n")
    assert target.read_text(encoding="utf-8") == "[]\n"
    assert [p.name for p in target.parent.iterdir()] == ["report.json"]


def test_save_report_header(tmp_path):
    persistence = DataPersistence(str(tmp_path))
    path = persistence.save_report("linear", "solve-linear", {"value": 1.25})
    data = load_report(str(path))
    assert list(data) == ["schema_version", "command", "value"]
    assert data["command"] == "solve-linear"


def test_trajectory_csv(tmp_path):
    persistence = DataPersistence(str(tmp_path))
    times = np.array([0.0, 0.5])
    frame = trajectory_frame(times, np.array([[1.0, 2.0], [0.1, 0.2]]), np.array([[0.0, -1.0], [0.3, 0.4]]))
    path = persistence.save_csv("trajectory", frame)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "t,mode_index,u_k,du_k"
    assert len(lines) == 5
    assert lines[2] == "0,2,2,-1"
    assert lines[3] == "0.5,1,0.10000000000000001,0.29999999999999999"
    pd.testing.assert_frame_equal(pd.read_csv(path), frame)


def test_trajectory_shapes_must_agree():
    with pytest.raises(ValidationError):
        trajectory_frame(np.array([0.0, 0.5]), np.zeros((2, 3)), np.zeros((2, 2)))


def test_save_error_includes_report(tmp_path):
    persistence = DataPersistence(str(tmp_path))
    path = persistence.save_error("solve-semilinear", DivergenceError("迭代离开球", report={"iterate_count": 3}))
    data = load_report(str(path))
    assert data["error_type"] == "DivergenceError"
    assert data["report"] == {"iterate_count": 3}


def test_load_report_missing_file(tmp_path):
    assert load_report(str(tmp_path / "missing.json")) is None
