"""
估计式中用到的全部范数
谱 Sobolev 范数 D(A^σ)、混合 L^p(0,T;L^q)、C([0,T];·)、W^{1,ℓ}(0,T;L²) 以及 X_T / Y_T。
连续时间范数一律用网格求积代替，上确界取网格最大值。
"""

import math
from typing import Any, List, Tuple, Union

import numpy as np
from pydantic import BaseModel, field_validator
from scipy.integrate import simpson

from ..errors import DomainError, ParameterError
from .linear import SolutionTrajectory, SourceTerm, TimeGrid, solve_linear_derivative
from .spectral import EigenBasis, as_coeffs

# 合成到求积节点时每批处理的时间节点数
_SYNTHESIS_BATCH = 64


class MixedNormSpec(BaseModel):
    """L^p(0,T;L^q(Ω)) 的指数对"""

    p: float
    q: float

    @field_validator("p", "q")
    @classmethod
    def _check_exponent(cls, value: float) -> float:
        if math.isnan(value) or value < 1.0:
            raise ParameterError(f"Lebesgue 指数 {value} 不合法: 要求 ≥ 1")
        return float(value)


def sobolev_norm(basis: EigenBasis, coeffs: np.ndarray, sigma: float) -> Union[float, np.ndarray]:
    """(Σ λ_k^{2σ} c_k²)^{1/2}；二维输入按行计算"""
    coeffs = as_coeffs(basis, coeffs)
    weights = basis.eigenvalues ** (2.0 * sigma)
    values = np.sqrt(np.sum(weights * coeffs**2, axis=-1))
    return float(values) if values.ndim == 0 else values


def _lq_of_samples(samples: np.ndarray, weights: np.ndarray, q: float) -> np.ndarray:
    if math.isinf(q):
        return np.max(np.abs(samples), axis=-1)
    return np.sum(weights * np.abs(samples) ** q, axis=-1) ** (1.0 / q)


def spatial_lq(basis: EigenBasis, coeffs: np.ndarray, q: float) -> Union[float, np.ndarray]:
    """合成到求积网格后的 L^q(Ω) 范数；q=∞ 取节点最大值"""
    MixedNormSpec(p=1.0, q=q)
    coeffs = as_coeffs(basis, coeffs)
    if coeffs.ndim == 1:
        return float(_lq_of_samples(coeffs @ basis.phi_samples, basis.weights, q))

    out = np.empty(coeffs.shape[0])
    for start in range(0, coeffs.shape[0], _SYNTHESIS_BATCH):
        block = coeffs[start : start + _SYNTHESIS_BATCH]
        out[start : start + block.shape[0]] = _lq_of_samples(block @ basis.phi_samples, basis.weights, q)
    return out


def temporal_lp(values: np.ndarray, grid: TimeGrid, p: float) -> float:
    """节点值序列的 L^p(0,T) 范数（复合 Simpson），p=∞ 取最大值"""
    values = np.abs(np.asarray(values, dtype=float))
    if math.isinf(p):
        return float(values.max())
    integral = simpson(values**p, x=grid.nodes)
    return float(max(integral, 0.0) ** (1.0 / p))


def mixed_lp_lq(trajectory: SolutionTrajectory, spec: MixedNormSpec) -> float:
    """‖u‖_{L^p(0,T;L^q(Ω))}"""
    per_node = spatial_lq(trajectory.basis, trajectory.modal_u, spec.q)
    return temporal_lp(per_node, trajectory.grid, spec.p)


def lp_l2_norm(modal: np.ndarray, grid: TimeGrid, p: float) -> float:
    """模态历史的 L^p(0,T;L²)，空间 L² 由正交性化为系数的欧氏范数"""
    MixedNormSpec(p=p, q=2.0)
    return temporal_lp(np.linalg.norm(modal, axis=-1), grid, p)


def l1_l2_norm(source: SourceTerm, grid: TimeGrid) -> float:
    """‖f‖_{L¹(0,T;L²)}"""
    return lp_l2_norm(source.modal_samples, grid, 1.0)


def c_norm(trajectory: SolutionTrajectory, sigma: float = 0.0) -> float:
    """‖u‖_{C([0,T];D(A^σ))}"""
    return float(np.max(sobolev_norm(trajectory.basis, trajectory.modal_u, sigma)))


class NodeNorms(BaseModel):
    """逐时间节点的范数，写入 JSON 报告"""

    t: List[float]
    l2: List[float]
    h1: List[float]  # ‖A^{1/2}u‖
    du_l2: List[float]


def node_norms(trajectory: SolutionTrajectory) -> NodeNorms:
    if trajectory.modal_du is None:
        trajectory = solve_linear_derivative(trajectory)
    basis = trajectory.basis
    return NodeNorms(
        t=trajectory.grid.nodes.tolist(),
        l2=np.linalg.norm(trajectory.modal_u, axis=1).tolist(),
        h1=np.atleast_1d(sobolev_norm(basis, trajectory.modal_u, 0.5)).tolist(),
        du_l2=np.linalg.norm(trajectory.modal_du, axis=1).tolist(),
    )


def w1l_norm(trajectory: SolutionTrajectory, ell: float) -> float:
    """‖u‖_{L^ℓ(0,T;L²)} + ‖∂t u‖_{L^ℓ(0,T;L²)}，要求 1 ≤ ℓ < 1/(2-α)"""
    upper = 1.0 / (2.0 - trajectory.alpha) if trajectory.alpha < 2.0 else math.inf
    if not (1.0 <= ell < upper):
        raise DomainError(f"ℓ={ell} 不合法: 要求 1 ≤ ℓ < 1/(2-α) = {upper:.6g}")
    if trajectory.modal_du is None:
        trajectory = solve_linear_derivative(trajectory)
    return lp_l2_norm(trajectory.modal_u, trajectory.grid, ell) + lp_l2_norm(
        trajectory.modal_du, trajectory.grid, ell
    )


def xt_norm(trajectory: SolutionTrajectory, b: float) -> float:
    """X_T = C([0,T];L²) ∩ L^b(0,T;L^{2b})"""
    return c_norm(trajectory, 0.0) + mixed_lp_lq(trajectory, MixedNormSpec(p=b, q=2.0 * b))


def yt_norm(trajectory: SolutionTrajectory, exponents: Any) -> float:
    """Y_T = L^p(0,T;L^q) ∩ C([0,T];D(A^r))；exponents 需提供 p, q, r"""
    spec = MixedNormSpec(p=exponents.p, q=exponents.q)
    return mixed_lp_lq(trajectory, spec) + c_norm(trajectory, exponents.r)


def holder_bound(trajectory: SolutionTrajectory, b: float, p: float) -> Tuple[float, float]:
    """(‖u‖_{L^b L^{2b}}, T^{(p-b)/(bp)}‖u‖_{L^p L^{2b}})，p > b 时前者不超过后者"""
    if not p > b:
        raise DomainError(f"Hölder 嵌入要求 p > b，收到 p={p}, b={b}")
    lhs = mixed_lp_lq(trajectory, MixedNormSpec(p=b, q=2.0 * b))
    inner = mixed_lp_lq(trajectory, MixedNormSpec(p=p, q=2.0 * b))
    exponent = 1.0 / b if math.isinf(p) else (p - b) / (b * p)
    return lhs, trajectory.grid.horizon**exponent * inner


__all__ = [
    "MixedNormSpec",
    "NodeNorms",
    "c_norm",
    "holder_bound",
    "l1_l2_norm",
    "lp_l2_norm",
    "mixed_lp_lq",
    "node_norms",
    "sobolev_norm",
    "spatial_lq",
    "temporal_lp",
    "w1l_norm",
    "xt_norm",
    "yt_norm",
]
