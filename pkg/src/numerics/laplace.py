"""
弱解（Laplace 意义）的数值检验
对零延拓源项的表示公式解做时间 Laplace 变换，逐模态检查
(p^α + λ_k) V_k(p) = p^{α-1} u0k + p^{α-2} u1k + F_k(p)。
"""

import math
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.integrate import trapezoid

from ..errors import DomainError, ValidationError
from .linear import SourceTerm, TimeGrid, evaluate_representation
from .mlf import MLParams, mlf_bound_constant
from .spectral import EigenBasis, as_coeffs

RESIDUAL_GUARD = 1e-14
DEFAULT_TOLERANCE = 1e-4

# 每批计算的求积节点数，控制乘积积分中间数组的大小
_EVAL_BATCH = 128


class LaplaceProbe(BaseModel):
    """探测点 p 与变换截断时刻 T_max"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p_values: np.ndarray
    horizon: float  # T_max
    panels: int = 40  # [0, T_max] 上面板宽度的上限为 T_max/panels
    order: int = 16
    depth: int = 20  # t=0 与 t=T 两侧几何加密的层数

    @field_validator("p_values")
    @classmethod
    def _check_p(cls, value: np.ndarray) -> np.ndarray:
        p = np.atleast_1d(np.asarray(value, dtype=float))
        if p.size == 0 or not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise DomainError("Laplace 探测点必须全部为正的有限数")
        return p

    @field_validator("horizon")
    @classmethod
    def _check_horizon(cls, value: float) -> float:
        if not value > 0:
            raise DomainError(f"截断时刻 T_max={value} 必须为正")
        return float(value)

    @classmethod
    def default(
        cls,
        solution_horizon: float,
        p_min: float = 0.5,
        p_max: float = 20.0,
        count: int = 16,
        horizon_factor: float = 5.0,
        panels: int = 40,
        min_horizon: float = 0.0,
    ) -> "LaplaceProbe":
        """[p_min, p_max] 上的对数等距探测点，T_max = max(horizon_factor·T, min_horizon)"""
        if not (0 < p_min <= p_max):
            raise DomainError(f"探测区间 [{p_min}, {p_max}] 不合法")
        if horizon_factor < 1.0:
            raise ValidationError(f"horizon_factor={horizon_factor} 必须 ≥ 1（T_max ≥ T）")
        return cls(
            p_values=np.geomspace(p_min, p_max, count),
            horizon=max(horizon_factor * solution_horizon, min_horizon),
            panels=panels,
        )


class LaplaceTransforms(BaseModel):
    """V_k(p) 及其截断误差界，并保留求积节点上的 u_k(t) 供衰减检查"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    p_values: np.ndarray
    values: np.ndarray  # (P, N)
    tails: np.ndarray  # (P, N)
    nodes: np.ndarray  # (Q,)
    samples: np.ndarray  # (Q, N)


class WeakSolutionReport(BaseModel):
    """预解方程残差报告"""

    p_values: List[float]
    per_p_max: List[float]
    per_mode_max: List[float]
    tail_bounds: List[float]  # 每个模态在所有 p 上的最大截断误差界
    max_residual: float
    tolerance: float
    passed: bool
    decay_consistent: bool
    corruption: float = 1.0


def _breakpoints(horizon: float, t_max: float, depth: int, panels: int) -> np.ndarray:
    """向 t=0 与 t=T 两侧几何加密的面板端点"""
    scale = 0.5 ** np.arange(depth + 1)
    half = 0.5 * horizon
    points = [np.array([0.0, horizon, t_max]), half * scale, horizon - half * scale]
    if t_max > horizon:
        points.append(horizon + (t_max - horizon) * scale)
    edges = np.unique(np.concatenate(points))

    max_width = t_max / panels
    refined = [edges[:1]]
    for left, right in zip(edges[:-1], edges[1:]):
        pieces = max(1, int(math.ceil((right - left) / max_width)))
        refined.append(np.linspace(left, right, pieces + 1)[1:])
    return np.concatenate(refined)


def quadrature_nodes(horizon: float, probe: LaplaceProbe) -> Tuple[np.ndarray, np.ndarray]:
    """[0, T_max] 上的复合 Gauss-Legendre 节点与权重"""
    edges = _breakpoints(horizon, probe.horizon, probe.depth, probe.panels)
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(probe.order)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    nodes = (mid[:, None] + half[:, None] * ref_nodes[None, :]).ravel()
    weights = (half[:, None] * ref_weights[None, :]).ravel()
    return nodes, weights


def _phi1(z: np.ndarray) -> np.ndarray:
    return -np.expm1(-z) / z


def _phi2(z: np.ndarray) -> np.ndarray:
    """(1 - e^{-z}(1+z))/z²，小 z 用级数避免抵消"""
    small = z < 1e-2
    zs = np.where(small, z, 1.0)
    zl = np.where(small, 1.0, z)
    series = 0.5 - zs / 3.0 + zs**2 / 8.0 - zs**3 / 30.0 + zs**4 / 144.0
    direct = (1.0 - np.exp(-zl) * (1.0 + zl)) / zl**2
    return np.where(small, series, direct)


def transform_source(f: SourceTerm, grid: TimeGrid, p_values: np.ndarray) -> np.ndarray:
    """分片线性 f_k 的精确 Laplace 变换，返回 (P, N)"""
    p = np.atleast_1d(np.asarray(p_values, dtype=float))
    if np.any(p <= 0):
        raise DomainError("Laplace 变换要求 p > 0")
    s = grid.nodes
    h = np.diff(s)
    samples = f.modal_samples
    z = p[:, None] * h[None, :]  # (P, M)
    phi1, phi2 = _phi1(z), _phi2(z)
    decay = np.exp(-p[:, None] * s[None, :-1]) * h[None, :]
    left = decay * (phi1 - phi2)
    right = decay * phi2
    return left @ samples[:-1] + right @ samples[1:]


def modal_laplace(
    basis: EigenBasis,
    alpha: float,
    u0: np.ndarray,
    u1: np.ndarray,
    f: Optional[SourceTerm],
    grid: TimeGrid,
    probe: LaplaceProbe,
) -> LaplaceTransforms:
    """V_k(p) = ∫₀^{T_max} e^{-pt} u_k(t) dt，u 在 T 之后用零延拓的源项继续计算"""
    u0 = as_coeffs(basis, u0)
    u1 = as_coeffs(basis, u1)
    if f is None:
        f = SourceTerm.zero(grid, basis.mode_count)
    f.check(grid, basis)
    if probe.horizon < grid.horizon:
        raise ValidationError(f"截断时刻 T_max={probe.horizon} 小于解的时间区间 T={grid.horizon}")

    nodes, weights = quadrature_nodes(grid.horizon, probe)
    samples = np.empty((nodes.size, basis.mode_count))
    for start in range(0, nodes.size, _EVAL_BATCH):
        batch = nodes[start : start + _EVAL_BATCH]
        samples[start : start + batch.size] = evaluate_representation(
            basis.eigenvalues, alpha, u0, u1, f, grid, batch
        )

    p = probe.p_values
    kernel = np.exp(-np.outer(p, nodes)) * weights
    values = kernel @ samples
    sup = np.max(np.abs(samples), axis=0)
    tails = np.exp(-p * probe.horizon)[:, None] * sup[None, :] / p[:, None]
    return LaplaceTransforms(p_values=p, values=values, tails=tails, nodes=nodes, samples=samples)


def check_decay(
    transforms: LaplaceTransforms,
    basis: EigenBasis,
    alpha: float,
    u0: np.ndarray,
    u1: np.ndarray,
    f: SourceTerm,
    grid: TimeGrid,
) -> bool:
    """|u_k(t)| ≤ C(|u0k| + t^{1-α/2}λ_k^{-1/2}|u1k| + t^{α-1}‖f_k‖_{L¹}) 在全部求积节点上成立"""
    constant = max(
        mlf_bound_constant(MLParams(alpha=alpha, beta=beta), x_max=1e4, grid_size=400) for beta in (1.0, 2.0, alpha)
    )
    t = transforms.nodes[:, None]
    lam = basis.eigenvalues
    f_l1 = trapezoid(np.abs(f.modal_samples), x=grid.nodes, axis=0)
    bound = constant * (
        np.abs(u0) + t ** (1.0 - 0.5 * alpha) * np.abs(u1) / np.sqrt(lam) + t ** (alpha - 1.0) * f_l1
    )
    return bool(np.all(np.abs(transforms.samples) <= bound * (1.0 + 1e-8) + 1e-14))


def verify_weak_solution(
    basis: EigenBasis,
    alpha: float,
    u0: np.ndarray,
    u1: np.ndarray,
    f: Optional[SourceTerm],
    grid: TimeGrid,
    probe: LaplaceProbe,
    tolerance: float = DEFAULT_TOLERANCE,
    corruption: float = 1.0,
) -> WeakSolutionReport:
    """相对残差 |(p^α+λ)V - RHS| / (S + ε) 的逐 p、逐模态最大值

    S = |p^{α-1}u0k| + |p^{α-2}u1k| + |F_k(p)|，右端各项相消使 RHS≈0 时尺度仍不为零。

    corruption ≠ 1 时把 V 整体放大，作为必然失败的对照。
    """
    u0 = as_coeffs(basis, u0)
    u1 = as_coeffs(basis, u1)
    if f is None:
        f = SourceTerm.zero(grid, basis.mode_count)
    transforms = modal_laplace(basis, alpha, u0, u1, f, grid, probe)

    p = transforms.p_values[:, None]
    lam = basis.eigenvalues[None, :]
    terms = (p ** (alpha - 1.0) * u0, p ** (alpha - 2.0) * u1, transform_source(f, grid, transforms.p_values))
    rhs = terms[0] + terms[1] + terms[2]
    scale = sum(np.abs(term) for term in terms)
    lhs = (p**alpha + lam) * corruption * transforms.values
    residual = np.abs(lhs - rhs) / (scale + RESIDUAL_GUARD)

    max_residual = float(residual.max())
    return WeakSolutionReport(
        p_values=transforms.p_values.tolist(),
        per_p_max=residual.max(axis=1).tolist(),
        per_mode_max=residual.max(axis=0).tolist(),
        tail_bounds=transforms.tails.max(axis=0).tolist(),
        max_residual=max_residual,
        tolerance=tolerance,
        passed=max_residual <= tolerance,
        decay_consistent=check_decay(transforms, basis, alpha, u0, u1, f, grid),
        corruption=corruption,
    )


def compare_transforms(first: LaplaceTransforms, second: LaplaceTransforms) -> Tuple[float, float]:
    """两条轨道的 V_k(p) 最大差异与两者截断误差界之和（唯一性探测）"""
    if first.values.shape != second.values.shape or not np.allclose(first.p_values, second.p_values):
        raise ValidationError("两组变换的探测点或模态数不一致")
    discrepancy = float(np.max(np.abs(first.values - second.values)))
    tail = float(np.max(first.tails + second.tails))
    return discrepancy, tail


__all__ = [
    "DEFAULT_TOLERANCE",
    "LaplaceProbe",
    "LaplaceTransforms",
    "WeakSolutionReport",
    "check_decay",
    "compare_transforms",
    "modal_laplace",
    "quadrature_nodes",
    "transform_source",
    "verify_weak_solution",
]
