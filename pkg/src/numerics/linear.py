#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
线性分数阶波动方程求解
u(t) = S1(t)u0 + S2(t)u1 + ∫₀ᵗ S3(t-s)f(s)ds，Duhamel 项用乘积积分计算：
f 在每个子区间上线性插值，核的奇性因子通过零阶/一阶矩的闭式精确积分。
"""

from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import special

from ..errors import ParameterError, ValidationError
from .mlf import evaluate
from .propagators import PropagatorKind, kernel_table
from .spectral import EigenBasis, as_coeffs


def check_order(alpha: float, allow_wave_limit: bool = False) -> None:
    """求解器要求 1 < α < 2；α = 2 仅作为经典波动方程的恒等式检验"""
    upper_ok = alpha < 2.0 or (allow_wave_limit and alpha == 2.0)
    if not (alpha > 1.0 and upper_ok):
        raise ParameterError(f"α={alpha} 不合法: 要求 1 < α < 2（Caputo 导数的阶）")


class TimeGrid(BaseModel):
    """时间网格 0 = t_0 < t_1 < … < t_M = T"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    nodes: np.ndarray
    grading: float = 1.0  # 1 为均匀网格

    @field_validator("nodes")
    @classmethod
    def _check_nodes(cls, value: np.ndarray) -> np.ndarray:
        nodes = np.asarray(value, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValidationError("时间网格至少需要两个节点")
        if nodes[0] != 0.0:
            raise ValidationError("时间网格必须从 0 开始")
        if np.any(np.diff(nodes) <= 0):
            raise ValidationError("时间网格必须严格递增")
        nodes = nodes.copy()
        nodes.setflags(write=False)
        return nodes

    @classmethod
    def uniform(cls, horizon: float, steps: int = 256) -> "TimeGrid":
        return cls.graded(horizon, steps, 1.0)

    @classmethod
    def graded(cls, horizon: float, steps: int = 256, grading: float = 2.0) -> "TimeGrid":
        """t_j = T (j/M)^χ"""
        if not horizon > 0:
            raise ValidationError(f"时间区间长度 T={horizon} 必须为正")
        if steps < 1:
            raise ValidationError(f"时间步数 M={steps} 至少为 1")
        if grading < 1.0:
            raise ValidationError(f"网格加密指数 χ={grading} 必须 ≥ 1")
        ratio = np.arange(steps + 1, dtype=float) / steps
        return cls(nodes=horizon * ratio**grading, grading=float(grading))

    @property
    def horizon(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> int:
        return int(self.nodes.size - 1)

    @property
    def is_uniform(self) -> bool:
        gaps = np.diff(self.nodes)
        return bool(np.allclose(gaps, gaps[0], rtol=1e-12, atol=0.0))

    def refined(self) -> "TimeGrid":
        """同一分布律、步数加倍；偶数号新节点与原节点重合"""
        return TimeGrid.graded(self.horizon, 2 * self.steps, self.grading)


class SourceTerm(BaseModel):
    """源项的模态采样 f_k(t_j)，节点间线性插值，(0,T) 之外取零"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    modal_samples: np.ndarray  # (M+1, N)

    @classmethod
    def zero(cls, grid: TimeGrid, mode_count: int) -> "SourceTerm":
        return cls(modal_samples=np.zeros((grid.nodes.size, mode_count)))

    @classmethod
    def constant(cls, grid: TimeGrid, coeffs: np.ndarray) -> "SourceTerm":
        coeffs = np.asarray(coeffs, dtype=float)
        return cls(modal_samples=np.tile(coeffs, (grid.nodes.size, 1)))

    @classmethod
    def from_modal(cls, grid: TimeGrid, basis: EigenBasis, samples: np.ndarray) -> "SourceTerm":
        """已知节点上的模态值 (M+1, N)"""
        source = cls(modal_samples=np.asarray(samples, dtype=float))
        source.check(grid, basis)
        return source

    def check(self, grid: TimeGrid, basis: EigenBasis) -> None:
        expected = (grid.nodes.size, basis.mode_count)
        if self.modal_samples.shape != expected:
            raise ValidationError(f"源项形状 {self.modal_samples.shape} 与期望 {expected} 不一致")

    def refined(self, grid: TimeGrid) -> "SourceTerm":
        """在加密网格上重新采样同一个分片线性函数"""
        fine = grid.refined()
        columns = [np.interp(fine.nodes, grid.nodes, col) for col in self.modal_samples.T]
        return SourceTerm(modal_samples=np.stack(columns, axis=1))

    def scaled(self, factor: float) -> "SourceTerm":
        return SourceTerm(modal_samples=factor * self.modal_samples)


class SolutionTrajectory(BaseModel):
    """逐模态的系数历史 u_k(t_j)，可选 ∂t u_k(t_j)"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    basis: EigenBasis
    alpha: float
    grid: TimeGrid
    modal_u: np.ndarray  # (M+1, N)
    modal_du: Optional[np.ndarray] = None
    u0: np.ndarray
    u1: np.ndarray
    source: SourceTerm

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes


def _moment_tables(alpha: float, lam: np.ndarray, tau: np.ndarray, derivative: bool) -> Tuple[np.ndarray, np.ndarray]:
    """核的一次与二次原函数 P0(τ)=∫₀^τ g，P1(τ)=∫₀^τ P0

    g 为 S3 核时: P0 = τ^α E_{α,α+1}，P1 = τ^{α+1} E_{α,α+2}；
    g 为导数核 τ^{α-2}E_{α,α-1} 时: P0 = τ^{α-1} E_{α,α}，P1 = τ^α E_{α,α+1}。
    """
    tt = tau[..., None]
    x = -lam * tt**alpha
    if derivative:
        p0 = tt ** (alpha - 1.0) * evaluate(alpha, alpha, x)
        p1 = tt**alpha * evaluate(alpha, alpha + 1.0, x)
    else:
        p0 = tt**alpha * evaluate(alpha, alpha + 1.0, x)
        p1 = tt ** (alpha + 1.0) * evaluate(alpha, alpha + 2.0, x)
    return p0, p1


def _product_weights(p0b, p1b, p0a, p1a, h):
    """线性插值 f 在一个子区间上的两个权重 (左端点, 右端点)"""
    w0 = p0b - p0a
    w1 = (p1b - p1a - h * p0a) / h
    return w0 - w1, w1


class LinearSolver:
    """固定基与时间网格的线性求解器，缓存全部核值表

    同一网格上的多组数据（Monte-Carlo 试验、Picard 迭代）共用这些表。
    """

    def __init__(self, basis: EigenBasis, alpha: float, grid: TimeGrid, allow_wave_limit: bool = False):
        check_order(alpha, allow_wave_limit)
        self.basis = basis
        self.alpha = alpha
        self.grid = grid
        self._tables: Dict[str, np.ndarray] = {}

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.basis.eigenvalues

    def _table(self, name: str) -> np.ndarray:
        if name not in self._tables:
            self._tables.update(self._build(name))
        return self._tables[name]

    def prepare(self, source: bool = True, derivative: bool = False) -> "LinearSolver":
        """预先生成核值表，之后 solve 只读缓存，可在多线程间共享"""
        names = ["S1", "S2"] + (["W_left"] if source else [])
        if derivative:
            names += ["dS1"] + (["dW_left"] if source else [])
        for name in names:
            self._table(name)
        return self

    def _build(self, name: str) -> Dict[str, np.ndarray]:
        t = self.grid.nodes
        lam = self.eigenvalues
        if name == "S1":
            return {"S1": kernel_table(PropagatorKind.S1, self.alpha, lam, t)}
        if name == "S2":
            return {"S2": kernel_table(PropagatorKind.S2, self.alpha, lam, t)}
        if name == "dS1":
            table = np.zeros((t.size, lam.size))
            table[1:] = kernel_table(PropagatorKind.DS1, self.alpha, lam, t[1:])
            return {"dS1": table}
        derivative = name.startswith("d")
        left, right = self._duhamel_weights(derivative)
        prefix = "dW" if derivative else "W"
        return {f"{prefix}_left": left, f"{prefix}_right": right}

    def _duhamel_weights(self, derivative: bool) -> Tuple[np.ndarray, np.ndarray]:
        t = self.grid.nodes
        lam = self.eigenvalues
        if self.grid.is_uniform:
            # 均匀网格上权重只依赖 n-j，形状 (M+1, N)，第 0 行不用
            h = t[1] - t[0]
            tau = h * np.arange(t.size, dtype=float)
            p0, p1 = _moment_tables(self.alpha, lam, tau, derivative)
            left = np.zeros_like(p0)
            right = np.zeros_like(p0)
            left[1:], right[1:] = _product_weights(p0[1:], p1[1:], p0[:-1], p1[:-1], h)
            return left, right

        # 一般网格: 对所有 j ≤ n 计算 P(t_n - t_j)，形状 (M+1, M+1, N)
        rows, cols = np.tril_indices(t.size)
        p0_flat, p1_flat = _moment_tables(self.alpha, lam, t[rows] - t[cols], derivative)
        p0 = np.zeros((t.size, t.size, lam.size))
        p1 = np.zeros_like(p0)
        p0[rows, cols] = p0_flat
        p1[rows, cols] = p1_flat
        h = np.diff(t)[None, :, None]
        left, right = _product_weights(p0[:, :-1], p1[:, :-1], p0[:, 1:], p1[:, 1:], h)
        mask = np.tril(np.ones((t.size, t.size - 1), dtype=bool), k=-1)[:, :, None]
        return np.where(mask, left, 0.0), np.where(mask, right, 0.0)

    def _duhamel(self, samples: np.ndarray, derivative: bool) -> np.ndarray:
        prefix = "dW" if derivative else "W"
        left = self._table(f"{prefix}_left")
        right = self._tables[f"{prefix}_right"]
        out = np.zeros_like(samples)
        if self.grid.is_uniform:
            for n in range(1, samples.shape[0]):
                out[n] = np.sum(left[n:0:-1] * samples[:n], axis=0) + np.sum(right[n:0:-1] * samples[1 : n + 1], axis=0)
            return out
        for n in range(1, samples.shape[0]):
            out[n] = np.sum(left[n, :n] * samples[:n], axis=0) + np.sum(right[n, :n] * samples[1 : n + 1], axis=0)
        return out

    def solve(self, u0: np.ndarray, u1: np.ndarray, f: Optional[SourceTerm] = None) -> SolutionTrajectory:
        """逐模态: u_k = E_{α,1}u0k + t E_{α,2} u1k + Duhamel_k"""
        u0 = as_coeffs(self.basis, u0)
        u1 = as_coeffs(self.basis, u1)
        if f is None:
            f = SourceTerm.zero(self.grid, self.basis.mode_count)
        f.check(self.grid, self.basis)

        modal_u = self._table("S1") * u0 + self._table("S2") * u1
        if np.any(f.modal_samples != 0):
            modal_u = modal_u + self._duhamel(f.modal_samples, derivative=False)
        modal_u[0] = u0
        return SolutionTrajectory(
            basis=self.basis,
            alpha=self.alpha,
            grid=self.grid,
            modal_u=modal_u,
            u0=u0.copy(),
            u1=u1.copy(),
            source=f,
        )

    def derivative(self, trajectory: SolutionTrajectory) -> SolutionTrajectory:
        """∂t u_k = -λ t^{α-1}E_{α,α} u0k + E_{α,1} u1k + ∫(t-s)^{α-2}E_{α,α-1} f_k"""
        du = self._table("dS1") * trajectory.u0 + self._table("S1") * trajectory.u1
        samples = trajectory.source.modal_samples
        if np.any(samples != 0):
            du = du + self._duhamel(samples, derivative=True)
        du[0] = trajectory.u1
        return trajectory.model_copy(update={"modal_du": du})


def solve_linear(
    basis: EigenBasis,
    alpha: float,
    u0: np.ndarray,
    u1: np.ndarray,
    f: Optional[SourceTerm],
    grid: TimeGrid,
) -> SolutionTrajectory:
    """线性 IBVP 的表示公式解"""
    return LinearSolver(basis, alpha, grid).solve(u0, u1, f)


def solve_linear_derivative(trajectory: SolutionTrajectory) -> SolutionTrajectory:
    """补全 modal_du"""
    solver = LinearSolver(trajectory.basis, trajectory.alpha, trajectory.grid, allow_wave_limit=True)
    return solver.derivative(trajectory)


def evaluate_representation(
    eigenvalues: np.ndarray,
    alpha: float,
    u0: np.ndarray,
    u1: np.ndarray,
    f: SourceTerm,
    source_grid: TimeGrid,
    times: np.ndarray,
) -> np.ndarray:
    """在任意时刻计算表示公式，f 在 (0,T) 之外取零；返回 (len(times), N)

    α = 1 也被允许（指数核），供 Laplace 检验的恒等式使用。
    """
    if not (1.0 <= alpha <= 2.0):
        raise ParameterError(f"α={alpha} 超出表示公式的适用范围 [1, 2]")
    lam = np.asarray(eigenvalues, dtype=float)
    times = np.asarray(times, dtype=float)
    x = -lam * times[:, None] ** alpha
    values = evaluate(alpha, 1.0, x) * u0 + times[:, None] * evaluate(alpha, 2.0, x) * u1

    samples = f.modal_samples
    if not np.any(samples != 0):
        return values

    s = source_grid.nodes
    eval_idx, interval = np.nonzero(times[:, None] > s[None, :-1])
    t = times[eval_idx]
    right_end = np.minimum(s[interval + 1], t)
    width = right_end - s[interval]
    full = s[interval + 1] - s[interval]
    b = t - s[interval]
    a = t - right_end

    p0b, p1b = _moment_tables(alpha, lam, b, derivative=False)
    p0a, p1a = _moment_tables(alpha, lam, a, derivative=False)
    w_left, w_right = _product_weights(p0b, p1b, p0a, p1a, width[:, None])
    f_left = samples[interval]
    f_right = f_left + (samples[interval + 1] - f_left) * (width / full)[:, None]
    contrib = w_left * f_left + w_right * f_right
    np.add.at(values, eval_idx, contrib)
    return values


def caputo_l1_residual(trajectory: SolutionTrajectory, t_min: Optional[float] = None) -> np.ndarray:
    """离散 Caputo 导数 + λ_k u_k - f_k 在 t ≥ t_min 的节点上的逐模态最大残差

    二阶导数在中点网格上取分片常数: 中点斜率 w_k=(u_k-u_{k-1})/Δt_k，
    第一段 [0, m_1] 用初速度 u1，最后一段 [m_n, t_n] 沿用前一段的值。
    """
    alpha = trajectory.alpha
    t = trajectory.grid.nodes
    u = trajectory.modal_u
    lam = trajectory.basis.eigenvalues
    f = trajectory.source.modal_samples
    t_min = 0.25 * t[-1] if t_min is None else t_min

    mid = 0.5 * (t[1:] + t[:-1])
    slopes = np.diff(u, axis=0) / np.diff(t)[:, None]
    breaks = np.concatenate([[0.0], mid])
    jumps = np.diff(np.vstack([trajectory.u1[None, :], slopes]), axis=0)
    levels = jumps / np.diff(breaks)[:, None]  # 第 i 段 [breaks_i, breaks_{i+1}] 上的 u''

    scale = 1.0 / special.gamma(3.0 - alpha)
    worst = np.zeros(lam.size)
    for n in range(1, t.size):
        if t[n] < t_min:
            continue
        edges = np.concatenate([breaks[: n + 1], [t[n]]])
        piece_levels = np.vstack([levels[:n], levels[n - 1 : n]])
        dist = (t[n] - edges) ** (2.0 - alpha)
        caputo = scale * np.sum(piece_levels * (dist[:-1] - dist[1:])[:, None], axis=0)
        residual = caputo + lam * u[n] - f[n]
        worst = np.maximum(worst, np.abs(residual))
    return worst


class StabilityReport(BaseModel):
    """(t1a) 与 W^{1,1} 估计的左右两端及比值"""

    sup_l2: float
    data_norm: float
    ratio: float
    w11_norm: float
    w11_data_norm: float
    w11_ratio: float
    r_order: float


def stability_report(
    trajectory: SolutionTrajectory,
    u0: np.ndarray,
    u1: np.ndarray,
    f: SourceTerm,
    r_order: float = 0.2,
) -> StabilityReport:
    """LHS/RHS 比值；零数据时比值定义为 0"""
    from .norms import c_norm, l1_l2_norm, lp_l2_norm, sobolev_norm

    if not (0.0 < r_order < 0.25):
        raise ParameterError(f"r={r_order} 不合法: 要求 0 < r < 1/4")
    basis = trajectory.basis
    if trajectory.modal_du is None:
        trajectory = solve_linear_derivative(trajectory)

    source_norm = l1_l2_norm(f, trajectory.grid)
    sup_l2 = c_norm(trajectory, 0.0)
    data_norm = sobolev_norm(basis, u0, 0.0) + sobolev_norm(basis, u1, -0.5) + source_norm

    w11 = lp_l2_norm(trajectory.modal_u, trajectory.grid, 1.0) + lp_l2_norm(trajectory.modal_du, trajectory.grid, 1.0)
    w11_data = sobolev_norm(basis, u0, r_order) + sobolev_norm(basis, u1, -0.5) + source_norm

    return StabilityReport(
        sup_l2=sup_l2,
        data_norm=data_norm,
        ratio=sup_l2 / data_norm if data_norm > 0 else 0.0,
        w11_norm=w11,
        w11_data_norm=w11_data,
        w11_ratio=w11 / w11_data if w11_data > 0 else 0.0,
        r_order=r_order,
    )


def refinement_difference(solver: LinearSolver, u0: np.ndarray, u1: np.ndarray, f: SourceTerm) -> float:
    """网格 M 与 2M 在公共节点上的最大模态差"""
    coarse = solver.solve(u0, u1, f)
    fine_solver = LinearSolver(solver.basis, solver.alpha, solver.grid.refined(), allow_wave_limit=True)
    fine = fine_solver.solve(u0, u1, f.refined(solver.grid))
    return float(np.max(np.abs(fine.modal_u[::2] - coarse.modal_u))) if coarse.modal_u.size else 0.0


def closed_form_mode(alpha: float, lam: float, times: np.ndarray, u0: float, u1: float, c: float) -> np.ndarray:
    """单模态、常数源项的闭式解 u0 E_{α,1} + u1 t E_{α,2} + c t^α E_{α,α+1}"""
    times = np.asarray(times, dtype=float)
    x = -lam * times**alpha
    return (
        u0 * evaluate(alpha, 1.0, x)
        + u1 * times * evaluate(alpha, 2.0, x)
        + c * times**alpha * evaluate(alpha, alpha + 1.0, x)
    )


__all__ = [
    "LinearSolver",
    "SolutionTrajectory",
    "SourceTerm",
    "StabilityReport",
    "TimeGrid",
    "caputo_l1_residual",
    "check_order",
    "closed_form_mode",
    "evaluate_representation",
    "refinement_difference",
    "solve_linear",
    "solve_linear_derivative",
    "stability_report",
]

