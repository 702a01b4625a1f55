import json
import math
import os
import uuid
from enum import Enum
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..errors import ValidationError

SCHEMA_VERSION = "1.0"
FLOAT_FORMAT = "%.17g"


def to_jsonable(value: Any) -> Any:
    """pydantic 模型、numpy 数组/标量、枚举 → 纯 Python 结构"""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump(mode="python"))
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    return value


def _format_float(value: float) -> str:
    """17 位有效数字；非有限值写成字符串 "inf" / "-inf" / "nan" """
    if math.isnan(value):
        return '"nan"'
    if math.isinf(value):
        return '"inf"' if value > 0 else '"-inf"'
    return format(value, ".17g")


def dumps_report(value: Any, indent: int = 2, _level: int = 0) -> str:
    """确定性的 JSON 文本：键按插入顺序，浮点数统一 17 位有效数字"""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {dumps_report(v, indent, _level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + f"\n{end}}}"
    if isinstance(value, list):
        if not value:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
            return "[" + ", ".join(dumps_report(v, indent, _level + 1) for v in value) + "]"
        items = [f"{pad}{dumps_report(v, indent, _level + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + f"\n{end}]"
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        return _format_float(value)
    if isinstance(value, int):
        return str(value)
    return json.dumps(value, ensure_ascii=False)


def atomic_write_text(path: Path, text: str) -> None:
    """先写同目录临时文件，再 os.replace 原子替换"""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(f".{path.name}.{uuid.uuid4().hex}.tmp")
    try:
        with open(tmp_path, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        os.replace(tmp_path, path)
    finally:
        if tmp_path.exists():
            tmp_path.unlink()


class DataPersistence:
    """实验产物的持久化：报告 JSON、CSV 表格与错误 JSON"""

    def __init__(self, output_dir: str = "results"):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def save_report(self, name: str, command: str, payload: Dict[str, Any]) -> Path:
        """报告中不含时间戳，同一配置与种子得到逐字节相同的文件"""
        document = {"schema_version": SCHEMA_VERSION, "command": command}
        document.update(to_jsonable(payload))
        path = self.output_dir / f"{name}.json"
        atomic_write_text(path, dumps_report(document) + "\n")
        print(f"💾 已保存报告: {path}")
        return path

    def save_csv(self, name: str, frame: pd.DataFrame) -> Path:
        path = self.output_dir / f"{name}.csv"
        atomic_write_text(path, frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n"))
        print(f"💾 已保存表格: {path} ({len(frame)} 行)")
        return path

    def save_error(self, command: str, error: BaseException) -> Path:
        """机器可读的错误报告"""
        payload = {"error_type": type(error).__name__, "message": str(error)}
        report = getattr(error, "report", None)
        if report is not None:
            payload["report"] = report
        return self.save_report("error", command, payload)


def trajectory_frame(times: np.ndarray, modal_u: np.ndarray, modal_du: np.ndarray) -> pd.DataFrame:
    """轨道 CSV（长表）：每个 (t_j, k) 一行，列 t, mode_index, u_k, du_k；k 从 1 开始"""
    times = np.asarray(times, dtype=float)
    if modal_u.shape != modal_du.shape or modal_u.shape[0] != times.size:
        raise ValidationError(f"轨道形状不一致: t {times.shape}, u {modal_u.shape}, du {modal_du.shape}")
    steps, modes = modal_u.shape
    return pd.DataFrame(
        {
            "t": np.repeat(times, modes),
            "mode_index": np.tile(np.arange(1, modes + 1), steps),
            "u_k": modal_u.ravel(),
            "du_k": modal_du.ravel(),
        }
    )


def load_report(path: str) -> Optional[Dict[str, Any]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        print(f"❌ 读取报告失败: {e}")
        return None
