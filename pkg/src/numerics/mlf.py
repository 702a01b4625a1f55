#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Mittag-Leffler 函数模块
在负实轴上计算 E_{α,β}(x) = Σ x^k / Γ(αk+β)，以及求解器需要的矩积分和衰减常数
"""

import math
from typing import Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator
from scipy import special
from scipy.optimize import minimize_scalar

from ..errors import DomainError, ParameterError

# |x| 超过该值时改用远场表示
SERIES_SWITCH = 10.0
CROSSCHECK_BAND = (5.0, 20.0)
# y^{1/α} 超过该值时级数抵消损失过多有效位
_SERIES_CANCEL = 11.0

# 渐近展开最小项误差必须低于该相对量，否则改用围道积分
_ASYMPTOTIC_TOL = 2e-16
_ASYMPTOTIC_TERMS = 80
# e^{-60} 之后的割线积分尾部忽略不计
_CONTOUR_CUTOFF = 60.0
_GRADING_LEVELS = 50
_MAX_PANELS = 4000
_CONTOUR_CHUNK = 256
_HIGH_ORDER, _LOW_ORDER = 20, 14
_GAUSS_RULES = {n: np.polynomial.legendre.leggauss(n) for n in (_HIGH_ORDER, _LOW_ORDER)}
# 两阶求积的相对差超过该值时退回扩展精度级数
_CONTOUR_TOL = 1e-12

ArrayLike = Union[float, Sequence[float], np.ndarray]


class MLParams(BaseModel):
    """E_{α,β} 的参数"""

    model_config = ConfigDict(frozen=True)

    alpha: float
    beta: float

    @field_validator("alpha")
    @classmethod
    def _check_alpha(cls, value: float) -> float:
        if not (0.0 < value <= 2.0) or not math.isfinite(value):
            raise ParameterError(f"α={value} 不合法: 要求 0 < α ≤ 2")
        return value

    @field_validator("beta")
    @classmethod
    def _check_beta(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ParameterError(f"β={value} 必须是有限实数")
        return value


def _series(alpha: float, beta: float, y: np.ndarray) -> np.ndarray:
    """幂级数 Σ (-y)^k / Γ(αk+β)

    最大项约为 e^{y^{1/α}}，抵消过重的点改用扩展精度求和。
    """
    out = np.empty_like(y)
    zero = y == 0.0
    out[zero] = special.rgamma(beta)
    heavy = ~zero & (y ** (1.0 / alpha) > _SERIES_CANCEL)
    for i in np.flatnonzero(heavy):
        out[i] = mlf_series_reference(alpha, beta, -float(y[i]), dps=20)
    plain = ~zero & ~heavy
    rest = y[plain]
    if rest.size == 0:
        return out

    kmax = 20 + int(math.ceil(4.0 * float(rest.max()) ** (1.0 / alpha)))
    k = np.arange(kmax + 1, dtype=float)
    args = alpha * k + beta
    alternating = np.where(k % 2 == 0, 1.0, -1.0)
    if kmax * math.log10(max(float(rest.max()), 1.0)) < 300.0 and args[-1] < 170.0:
        # rgamma 在极点处为 0
        terms = np.power(rest[:, None], k[None, :]) * (alternating * special.rgamma(args))[None, :]
    else:
        poles = (args <= 0) & (args == np.round(args))
        safe = np.where(poles, 0.5, args)
        sign = np.where(poles, 0.0, special.gammasgn(safe)) * alternating
        terms = sign[None, :] * np.exp(np.log(rest)[:, None] * k[None, :] - special.gammaln(safe)[None, :])
    out[plain] = np.sum(terms, axis=1)
    return out


def _pole_terms(alpha: float, beta: float, y: np.ndarray) -> np.ndarray:
    """两个共轭指数项 (2/α) Re[ζ^{1-β} e^ζ]，ζ = y^{1/α} e^{iπ/α}"""
    if alpha <= 1.0:
        return np.zeros_like(y)
    rho = y ** (1.0 / alpha)
    theta = math.pi / alpha
    return (
        (2.0 / alpha)
        * y ** ((1.0 - beta) / alpha)
        * np.exp(rho * math.cos(theta))
        * np.cos(rho * math.sin(theta) + theta * (1.0 - beta))
    )


def _algebraic(alpha: float, beta: float, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """代数渐近展开 -Σ (-y)^{-k}/Γ(β-αk)，按最小项规则截断

    Returns:
        (截断和, 第一个被舍弃项的模作为误差估计)
    """
    k = np.arange(1, _ASYMPTOTIC_TERMS + 1, dtype=float)
    args = beta - alpha * k
    poles = (args <= 0) & (args == np.round(args))
    safe = np.where(poles, 0.5, args)
    sign = np.where(poles, 0.0, special.gammasgn(safe)) * np.where(k % 2 == 0, 1.0, -1.0)
    log_mag = -np.log(y)[:, None] * k[None, :] - special.gammaln(safe)[None, :]
    mags = np.where(poles[None, :], 0.0, np.exp(log_mag))
    terms = -sign[None, :] * mags

    if alpha == 2.0 and float(beta).is_integer():
        # 有限多项非零，和是精确的
        return terms.sum(axis=1), np.zeros_like(y)

    ranked = np.where(poles[None, :], np.inf, mags)
    smallest = np.argmin(ranked, axis=1)
    keep = k[None, :] - 1 < smallest[:, None]
    total = np.sum(np.where(keep, terms, 0.0), axis=1)
    error = ranked[np.arange(y.size), smallest]
    error = np.where(np.isinf(error), 0.0, error)
    return total, error


def _panel_rule(edges: np.ndarray, order: int) -> Tuple[np.ndarray, np.ndarray]:
    """相邻断点之间各放一组 Gauss-Legendre 节点"""
    ref_nodes, ref_weights = _GAUSS_RULES[order]
    left, right = edges[:-1, None], edges[1:, None]
    half = 0.5 * (right - left)
    return (0.5 * (left + right) + half * ref_nodes).ravel(), (half * ref_weights).ravel()


def _pole_distance(alpha: float, y_min: float) -> float:
    """分母在复 r 平面的零点 y^{1/α} e^{±iφ} 到正实轴的距离，φ = π|α-1|/α"""
    r0 = y_min ** (1.0 / alpha)
    phi = math.pi * abs(alpha - 1.0) / alpha
    return r0 if phi >= 0.5 * math.pi else r0 * math.sin(phi)


def _cut_integral(alpha: float, beta: float, y: np.ndarray, order: int) -> np.ndarray:
    """(1/π)∫₀^∞ e^{-r} r^{α-β} K(r, y) dr，K = (r^α sin πβ - y sin π(α-β)) / |r^α e^{-iπα} + y|²

    [0, 1] 上对 w 做几何加密（e < 0 时 r = w^q 消去端点奇性），
    [1, 截断] 上按极点距离取等宽子区间。
    """
    e = alpha - beta
    s_beta = math.sin(math.pi * beta)
    s_gap = math.sin(math.pi * e)
    c_alpha = math.cos(math.pi * alpha)

    def kernel(r: np.ndarray) -> np.ndarray:
        ra = r**alpha
        yy = y[:, None]
        return (ra * s_beta - yy * s_gap) / (ra * ra + 2.0 * yy * ra * c_alpha + yy * yy)

    # 靠近原点
    q = 1.0 / (1.0 + e) if e < 0 else 1.0
    w_edges = np.concatenate([[0.0], 2.0 ** -np.arange(_GRADING_LEVELS, -1, -1, dtype=float)])
    w, w_weights = _panel_rule(w_edges, order)
    r = w**q
    jacobian = np.full_like(w, q) if e < 0 else w**e
    near = kernel(r) @ (w_weights * jacobian * np.exp(-r))

    # 远离原点
    width = min(1.0, _pole_distance(alpha, float(y.min())))
    panels = min(_MAX_PANELS, int(math.ceil((_CONTOUR_CUTOFF - 1.0) / width)))
    r, r_weights = _panel_rule(np.linspace(1.0, _CONTOUR_CUTOFF, panels + 1), order)
    far = kernel(r) @ (r_weights * r**e * np.exp(-r))
    return (near + far) / math.pi


def _contour(alpha: float, beta: float, y: np.ndarray) -> np.ndarray:
    """极点项 + 割线积分（要求 β < α+1）

    高低两阶求积结果不一致的点改用 mpmath 级数。
    """
    out = np.empty_like(y)
    for start in range(0, y.size, _CONTOUR_CHUNK):
        part = y[start : start + _CONTOUR_CHUNK]
        poles = _pole_terms(alpha, beta, part)
        fine = poles + _cut_integral(alpha, beta, part, _HIGH_ORDER)
        coarse = poles + _cut_integral(alpha, beta, part, _LOW_ORDER)
        suspect = ~(np.abs(fine - coarse) <= _CONTOUR_TOL * np.abs(fine))
        for i in np.flatnonzero(suspect):
            fine[i] = mlf_series_reference(alpha, beta, -float(part[i]), dps=30)
        out[start : start + part.size] = fine
    return out


def _contour_value(alpha: float, beta: float, y: np.ndarray) -> np.ndarray:
    """β ≥ α+1 时先降到基准 β 再向上递推"""
    shifts = 0
    base = beta
    while base >= alpha + 1.0:
        base -= alpha
        shifts += 1
    value = _contour(alpha, base, y)
    for _ in range(shifts):
        # E_{α,β+α}(-y) = (1/Γ(β) - E_{α,β}(-y)) / y
        value = (special.rgamma(base) - value) / y
        base += alpha
    return value


def _unit_order_far(beta: float, y: np.ndarray) -> np.ndarray:
    """α=1 的远场：从 e^{-y} 出发对整数 β 递推"""
    if not float(beta).is_integer() or beta < 1:
        raise ParameterError(f"α=1 时仅支持正整数 β（收到 β={beta}）")
    value = np.exp(-y)
    for n in range(1, int(beta)):
        value = (special.rgamma(n) - value) / y
    return value


def _far_field(alpha: float, beta: float, y: np.ndarray) -> np.ndarray:
    if alpha == 1.0:
        return _unit_order_far(beta, y)
    alg, err = _algebraic(alpha, beta, y)
    value = _pole_terms(alpha, beta, y) + alg
    loose = err > _ASYMPTOTIC_TOL * np.maximum(np.abs(value), np.abs(alg))
    if np.any(loose):
        value[loose] = _contour_value(alpha, beta, y[loose])
    return value


def _switch_point(alpha: float) -> float:
    return SERIES_SWITCH if alpha >= 1.0 else 1.0


def evaluate(alpha: float, beta: float, x: ArrayLike) -> np.ndarray:
    """向量化计算 E_{α,β}(x)，x ≤ 0，供传播子与求解器使用"""
    arr = np.asarray(x, dtype=float)
    if np.any(arr > 0):
        raise DomainError("Mittag-Leffler 求值只支持 x ≤ 0")
    if not np.all(np.isfinite(arr)):
        raise DomainError("Mittag-Leffler 求值收到非有限自变量")
    y = -arr.ravel()
    if alpha == 1.0 and beta == 1.0:
        return np.exp(-y).reshape(arr.shape)

    out = np.empty_like(y)
    near = y <= _switch_point(alpha)
    if np.any(near):
        out[near] = _chunked(_series, alpha, beta, y[near])
    if np.any(~near):
        out[~near] = _chunked(_far_field, alpha, beta, y[~near])
    return out.reshape(arr.shape)


def _chunked(method, alpha: float, beta: float, y: np.ndarray, chunk: int = 8192) -> np.ndarray:
    if y.size <= chunk:
        return method(alpha, beta, y)
    return np.concatenate([method(alpha, beta, y[i : i + chunk]) for i in range(0, y.size, chunk)])


def mlf_eval(params: MLParams, x: ArrayLike) -> Union[float, np.ndarray]:
    """计算 E_{α,β}(x)，x ≤ 0；标量输入返回 float"""
    value = evaluate(params.alpha, params.beta, x)
    if np.ndim(x) == 0:
        return float(value)
    return value


def _check_moment_args(alpha: float, lam: float, t: float) -> None:
    MLParams(alpha=alpha, beta=alpha + 1.0)
    if not lam > 0:
        raise DomainError(f"λ={lam} 必须为正")
    if not t > 0:
        raise DomainError(f"t={t} 必须为正")


def mlf_moment(alpha: float, lam: float, t: float) -> float:
    """∫₀ᵗ s^{α-1} E_{α,α}(-λ s^α) ds = t^α E_{α,α+1}(-λ t^α)"""
    _check_moment_args(alpha, lam, t)
    return float(t**alpha * evaluate(alpha, alpha + 1.0, -lam * t**alpha))


def mlf_first_moment(alpha: float, lam: float, t: float) -> float:
    """零阶矩再积分一次: t^{α+1} E_{α,α+2}(-λ t^α)"""
    _check_moment_args(alpha, lam, t)
    return float(t ** (alpha + 1.0) * evaluate(alpha, alpha + 2.0, -lam * t**alpha))


def mlf_bound_constant(params: MLParams, x_max: float = 1e6, grid_size: int = 2000) -> float:
    """估计 |E_{α,β}(-x)| ≤ C/(1+x) 中的 C：对数网格上 (1+x)|E| 的上确界

    网格上的内部局部极大值再用有界一维优化精修。
    """
    if not x_max > 0:
        raise ParameterError("x_max 必须为正")
    if grid_size < 3:
        raise ParameterError("grid_size 至少为 3")

    x = np.concatenate([[0.0], np.logspace(-6.0, math.log10(x_max), grid_size)])
    profile = (1.0 + x) * np.abs(evaluate(params.alpha, params.beta, -x))
    best = float(profile.max())

    interior = np.arange(1, x.size - 1)
    peaks = interior[(profile[interior] >= profile[interior - 1]) & (profile[interior] >= profile[interior + 1])]
    peaks = peaks[np.argsort(profile[peaks])[::-1][:5]]

    def objective(s: float) -> float:
        return -(1.0 + s) * abs(float(evaluate(params.alpha, params.beta, -s)))

    for i in peaks:
        lo, hi = float(x[i - 1]), float(x[i + 1])
        found = minimize_scalar(objective, bounds=(lo, hi), method="bounded", options={"xatol": 1e-9 * hi})
        best = max(best, -float(found.fun))
    return best


def mlf_series_reference(alpha: float, beta: float, x: float, dps: int = 50) -> float:
    """扩展精度级数求和（mpmath），作为独立的参照值"""
    MLParams(alpha=alpha, beta=beta)
    if x > 0:
        raise DomainError("参照级数只支持 x ≤ 0")
    y = -float(x)
    if y == 0.0:
        return float(special.rgamma(beta))

    # 最大项约为 exp(y^{1/α})，按其量级补足有效位
    guard = int(y ** (1.0 / alpha) / math.log(10.0)) + 10
    with mpmath.workdps(dps + guard):
        a = mpmath.mpf(alpha)
        b = mpmath.mpf(beta)
        z = -mpmath.mpf(y)
        peak = int(y ** (1.0 / alpha) / alpha) + 5
        threshold = mpmath.mpf(10) ** (-(dps + 5))
        total = mpmath.mpf(0)
        k = 0
        while True:
            term = z**k * mpmath.rgamma(a * k + b)
            total += term
            if k > peak and abs(term) < threshold:
                break
            k += 1
        return float(total)


def mlf_crosscheck(params: MLParams, x_values: Optional[ArrayLike] = None) -> float:
    """在切换带 |x| ∈ [5, 20] 上比较幂级数与远场表示，返回最大逐点差"""
    if x_values is None:
        y = np.linspace(CROSSCHECK_BAND[0], CROSSCHECK_BAND[1], 61)
    else:
        y = np.abs(np.asarray(x_values, dtype=float)).ravel()
    near = _series(params.alpha, params.beta, y)
    far = _far_field(params.alpha, params.beta, y.copy())
    return float(np.max(np.abs(near - far) / (1.0 + np.abs(far))))
