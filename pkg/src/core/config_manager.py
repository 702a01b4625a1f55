#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置管理器
读取 experiment_config.json，叠加 .env 环境变量与命令行参数，校验为 ExperimentConfig
优先级: 命令行 > 环境变量 > 配置文件
"""

import json
import math
import os
import re
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import pydantic
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..errors import ValidationError

PROFILE_PATTERN = re.compile(r"^(zero|bump|mode:\d+|random:\d+)$")
COEFF_PATTERN = re.compile(r"^(zero|one|linear|const:[-+0-9.eE]+)$")

Profile = Union[str, List[float]]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DomainConfig(_Section):
    """空间区域与离散"""

    kind: Literal["interval", "rectangle", "fd"] = "interval"
    lengths: List[float] = Field(default_factory=lambda: [math.pi])
    modes: int = 16
    mesh: int = 128  # 有限差分网格数
    oversampling: int = 1
    coeff_a: Union[str, List[float]] = "one"
    potential_v: Union[str, List[float]] = "zero"

    @field_validator("lengths")
    @classmethod
    def _positive_lengths(cls, value: List[float]) -> List[float]:
        if not value or any(not L > 0 for L in value):
            raise ValueError(f"区域边长必须为正: {value}")
        return value

    @field_validator("modes")
    @classmethod
    def _modes(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"模态数 N={value} 至少为 1")
        return value

    @field_validator("coeff_a", "potential_v")
    @classmethod
    def _coefficient(cls, value):
        if isinstance(value, str) and not COEFF_PATTERN.match(value):
            raise ValueError(f"系数 {value!r} 不合法: 支持 zero / one / linear / const:<v> 或数值表")
        return value

    @model_validator(mode="after")
    def _lengths_match_kind(self) -> "DomainConfig":
        expected = (2, 3) if self.kind == "rectangle" else (1,)
        if len(self.lengths) not in expected:
            raise ValueError(f"{self.kind} 区域需要 {expected} 个边长，收到 {len(self.lengths)} 个")
        return self

    @property
    def dimension(self) -> int:
        return len(self.lengths)


class DataConfig(_Section):
    """初值与源项：zero / bump / mode:k / random:seed 或模态系数表"""

    u0: Profile = "mode:1"
    u1: Profile = "zero"
    f: Profile = "zero"
    u0_scale: float = 1.0
    u1_scale: float = 1.0
    f_scale: float = 1.0
    decay: float = 1.0  # random 数据的谱衰减 λ^{-decay}

    @field_validator("u0", "u1", "f")
    @classmethod
    def _profile(cls, value):
        if isinstance(value, str) and not PROFILE_PATTERN.match(value):
            raise ValueError(f"数据类型 {value!r} 不合法: 支持 zero / bump / mode:k / random:seed 或系数表")
        return value


class NonlinearityConfig(_Section):
    b: float = 2.0
    mu: float = 1.0
    cb: Optional[float] = None

    @field_validator("b")
    @classmethod
    def _b(cls, value: float) -> float:
        if not value > 1:
            raise ValueError(f"b={value} 不合法: 要求 b > 1")
        return value


class TimeConfig(_Section):
    T: float = 1.0
    T0: float = 1.0
    steps: int = 128
    grading: float = 1.0

    @model_validator(mode="after")
    def _check(self) -> "TimeConfig":
        if not (self.T > 0 and self.T0 > 0):
            raise ValueError(f"时间区间必须为正: T={self.T}, T0={self.T0}")
        if self.steps < 1:
            raise ValueError(f"时间步数 steps={self.steps} 至少为 1")
        if self.grading < 1:
            raise ValueError(f"网格加密指数 grading={self.grading} 必须 ≥ 1")
        return self


class ExponentConfig(_Section):
    """指数覆盖；d 缺省时取区域维数"""

    d: Optional[int] = None
    gamma: Optional[float] = None
    p: Optional[float] = None
    q: Optional[float] = None
    ell: Optional[float] = None


class ProbeConfig(_Section):
    p_min: float = 0.5
    p_max: float = 20.0
    count: int = 16
    horizon_factor: float = 5.0
    min_horizon: float = 24.0  # T_max 的下限，p_min·T_max 过小时截断误差超出容差
    panels: int = 40

    @model_validator(mode="after")
    def _check(self) -> "ProbeConfig":
        if not (0 < self.p_min <= self.p_max):
            raise ValueError(f"Laplace 探测区间不合法: [{self.p_min}, {self.p_max}]，要求 0 < p_min ≤ p_max")
        if self.horizon_factor < 1:
            raise ValueError(f"horizon_factor={self.horizon_factor} 必须 ≥ 1（T_max ≥ T）")
        if self.min_horizon < 0:
            raise ValueError(f"min_horizon={self.min_horizon} 不能为负")
        return self


class StrichartzConfig(_Section):
    horizons: List[float] = Field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0])
    trials: int = 100
    steps: int = 64
    rho: float = 0.51
    c0: Optional[float] = None  # 给定时跳过经验估计
    include_u1: bool = True
    include_f: bool = True

    @model_validator(mode="after")
    def _check(self) -> "StrichartzConfig":
        if self.trials < 1:
            raise ValueError(f"trials={self.trials} 至少为 1")
        if not self.horizons or any(not T > 0 for T in self.horizons):
            raise ValueError(f"horizons 必须是非空的正数列表: {self.horizons}")
        return self


class ToleranceConfig(_Section):
    picard: float = 1e-10
    max_iter: int = 25
    laplace: float = 1e-4
    refinement: float = 1e-6


class ExperimentConfig(_Section):
    """一次实验的全部参数"""

    domain: DomainConfig = Field(default_factory=DomainConfig)
    alpha: float = 1.5
    data: DataConfig = Field(default_factory=DataConfig)
    nonlinearity: NonlinearityConfig = Field(default_factory=NonlinearityConfig)
    time: TimeConfig = Field(default_factory=TimeConfig)
    exponents: ExponentConfig = Field(default_factory=ExponentConfig)
    probe: ProbeConfig = Field(default_factory=ProbeConfig)
    strichartz: StrichartzConfig = Field(default_factory=StrichartzConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    stability_r: float = 0.2
    epsilon_sweep: List[float] = Field(default_factory=list)
    rng_seed: int = 0
    threads: int = 1
    output_dir: str = "results"
    corruption: float = 1.0

    @field_validator("alpha")
    @classmethod
    def _alpha(cls, value: float) -> float:
        if not (1.0 < value < 2.0):
            raise ValueError(f"α={value} 不合法: 要求 1 < α < 2")
        return value

    @field_validator("stability_r")
    @classmethod
    def _r(cls, value: float) -> float:
        if not (0.0 < value < 0.25):
            raise ValueError(f"stability_r={value} 不合法: 要求 0 < r < 1/4")
        return value

    @field_validator("threads")
    @classmethod
    def _threads(cls, value: int) -> int:
        if value < 1:
            raise ValueError(f"threads={value} 至少为 1")
        return value

    @model_validator(mode="after")
    def _ell_window(self) -> "ExperimentConfig":
        ell = self.exponents.ell
        if ell is not None and not (1.0 <= ell < 1.0 / (2.0 - self.alpha)):
            raise ValueError(f"ℓ={ell} 不合法: 要求 1 ≤ ℓ < 1/(2-α) = {1.0 / (2.0 - self.alpha):.6g}")
        gamma = self.exponents.gamma
        if gamma is not None and not (0.0 < gamma < 1.0):
            raise ValueError(f"γ={gamma} 不合法: 要求 0 < γ < 1")
        return self

    @property
    def dimension(self) -> int:
        return self.exponents.d or self.domain.dimension

    def report_echo(self) -> Dict[str, Any]:
        """写入报告的配置副本；不含线程数与输出目录，保证报告与它们无关"""
        return self.model_dump(mode="json", exclude={"threads", "output_dir"})


def _format_errors(exc: pydantic.ValidationError) -> str:
    parts = []
    for err in exc.errors():
        location = ".".join(str(x) for x in err.get("loc", ())) or "config"
        message = str(err.get("msg", "")).removeprefix("Value error, ")
        parts.append(f"{location}: {message}")
    return "; ".join(parts)


class ConfigManager:
    """配置管理器"""

    def __init__(self, config_file: Optional[str] = "experiment_config.json"):
        self.config_file = Path(config_file) if config_file else None
        load_dotenv()

    def _load_file(self) -> Dict[str, Any]:
        if self.config_file is None:
            return {}
        if not self.config_file.exists():
            raise ValidationError(f"配置文件不存在: {self.config_file}")
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError(f"配置文件格式错误: {e}") from e

    @staticmethod
    def _env_overrides() -> Dict[str, Any]:
        overrides: Dict[str, Any] = {}
        if os.getenv("FWAVE_OUTPUT_DIR"):
            overrides["output_dir"] = os.getenv("FWAVE_OUTPUT_DIR")
        for name, key in (("FWAVE_THREADS", "threads"), ("FWAVE_RNG_SEED", "rng_seed")):
            value = os.getenv(name)
            if not value:
                continue
            try:
                overrides[key] = int(value)
            except ValueError as exc:
                raise ValidationError(f"环境变量 {name} 必须是整数，实际为 {value!r}") from exc
        return overrides

    def load(self, **cli_overrides: Any) -> ExperimentConfig:
        """合并三层来源并校验；违反约束时抛出 ValidationError，消息列出违反的条件"""
        raw = self._load_file()
        raw.update(self._env_overrides())
        raw.update({k: v for k, v in cli_overrides.items() if v is not None})
        return build_config(raw)


def build_config(raw: Dict[str, Any]) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(raw)
    except pydantic.ValidationError as exc:
        raise ValidationError(f"配置校验失败: {_format_errors(exc)}") from exc


def verbose_logging() -> bool:
    return os.getenv("VERBOSE_LOGGING", "true").lower() == "true"


def debug_mode() -> bool:
    return os.getenv("DEBUG_MODE", "false").lower() == "true"
