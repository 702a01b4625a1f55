"""
Strichartz 型估计的指数演算与常数的经验估计

可容许条件：
    (q) γ > d/4 时 q = ∞；γ = d/4 时 q ∈ (2, ∞)；γ < d/4 时 q = 2d/(d-4γ)
    (p) γ > 1-1/α 时 1 ≤ p < 1/(1-α(1-γ))；否则 p = ∞
导出阶 s = max(0, γ-1/α)，r = min(1-1/α, γ)，常数形如 C0(1+T)^δ。
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, model_validator

from ..errors import DomainError, ParameterError, ValidationError
from .linear import LinearSolver, SourceTerm, TimeGrid
from .norms import MixedNormSpec, c_norm, l1_l2_norm, mixed_lp_lq, sobolev_norm
from .spectral import EigenBasis

# 随机数据的额外谱衰减，保证 H^{2γ} 范数收敛
DEFAULT_RHO = 0.51
# 斜率拟合只使用 T ≥ 1 的时间区间
FIT_MIN_HORIZON = 1.0
_Q_TOL = 1e-12


def _check_inputs(d: int, alpha: float, gamma: float) -> None:
    if d not in (1, 2, 3):
        raise ParameterError(f"维数 d={d} 不合法: 只支持 1, 2, 3")
    if not (1.0 < alpha < 2.0):
        raise ParameterError(f"α={alpha} 不合法: 要求 1 < α < 2")
    if not (0.0 < gamma < 1.0):
        raise DomainError(f"γ={gamma} 不合法: 要求 0 < γ < 1")


class AdmissibleExponents(BaseModel):
    """(d, α, γ) 对应的 q 规则与 p 上界"""

    d: int
    alpha: float
    gamma: float
    q: Optional[float] = None  # γ = d/4 时为 None，q 可在 q_range 内任取
    q_range: Optional[Tuple[float, float]] = None
    p_sup: float  # p 的上确界，p = ∞ 分支时为 inf
    p_strict: bool  # True 表示 p < p_sup，False 表示只能取 p = ∞
    unproven_dimension: bool = False  # d = 1


def admissible_exponents(d: int, alpha: float, gamma: float) -> AdmissibleExponents:
    """按可容许条件给出 q 与 p 的取值范围"""
    _check_inputs(d, alpha, gamma)
    quarter = d / 4.0
    if gamma > quarter:
        q, q_range = math.inf, None
    elif gamma == quarter:
        q, q_range = None, (2.0, math.inf)
    else:
        q, q_range = 2.0 * d / (d - 4.0 * gamma), None

    if gamma > 1.0 - 1.0 / alpha:
        p_sup, p_strict = 1.0 / (1.0 - alpha * (1.0 - gamma)), True
    else:
        p_sup, p_strict = math.inf, False
    return AdmissibleExponents(
        d=d, alpha=alpha, gamma=gamma, q=q, q_range=q_range, p_sup=p_sup, p_strict=p_strict, unproven_dimension=d == 1
    )


def is_admissible(d: int, alpha: float, gamma: float, p: float, q: float) -> bool:
    """(p, q) 是否满足可容许条件"""
    try:
        rule = admissible_exponents(d, alpha, gamma)
    except (ParameterError, DomainError):
        return False

    if rule.q_range is not None:
        q_ok = rule.q_range[0] < q < rule.q_range[1]
    elif math.isinf(rule.q):
        q_ok = math.isinf(q)
    else:
        q_ok = math.isfinite(q) and math.isclose(q, rule.q, rel_tol=_Q_TOL)

    p_ok = 1.0 <= p < rule.p_sup if rule.p_strict else math.isinf(p)
    return q_ok and p_ok


def derived_orders(alpha: float, gamma: float) -> Tuple[float, float]:
    """(s, r) = (max(0, γ-1/α), min(1-1/α, γ))"""
    return max(0.0, gamma - 1.0 / alpha), min(1.0 - 1.0 / alpha, gamma)


def growth_exponent(alpha: float, gamma: float, s: float, r: float, p: float) -> float:
    """常数 C0(1+T)^δ 中的 δ"""
    if math.isinf(p):
        terms = [
            alpha * (1.0 - gamma) - 1.0,
            1.0 - alpha * (gamma - s),
            1.0 - alpha * (r - s),
            alpha * (1.0 - r) - 1.0,
        ]
    else:
        terms = [
            1.0 / p,
            1.0 - alpha * (gamma - s) + 1.0 / p,
            1.0 - alpha * (r - s),
            alpha * (1.0 - r) - 1.0,
            alpha * (1.0 - gamma) - 1.0 + 1.0 / p,
        ]
    return max(terms)


class ExponentSet(BaseModel):
    """一组满足可容许条件的指数"""

    d: int
    alpha: float
    gamma: float
    q: float
    p: float
    s: float
    r: float
    delta: float
    ell: float

    @model_validator(mode="after")
    def _check_admissible(self) -> "ExponentSet":
        if not is_admissible(self.d, self.alpha, self.gamma, self.p, self.q):
            raise ValidationError(
                f"指数不可容许: d={self.d}, α={self.alpha}, γ={self.gamma}, p={self.p}, q={self.q}"
            )
        upper = 1.0 / (2.0 - self.alpha)
        if not (1.0 <= self.ell < upper):
            raise ValidationError(f"ℓ={self.ell} 不合法: 要求 1 ≤ ℓ < 1/(2-α) = {upper:.6g}")
        return self

    @classmethod
    def build(
        cls,
        d: int,
        alpha: float,
        gamma: float,
        p: Optional[float] = None,
        q: Optional[float] = None,
        ell: Optional[float] = None,
    ) -> "ExponentSet":
        """补全 s, r, δ；q 缺省时按规则取唯一值，p 缺省时取可容许区间的中点"""
        rule = admissible_exponents(d, alpha, gamma)
        if q is None:
            if rule.q is None:
                raise ValidationError(f"γ = d/4 = {gamma} 时 q 可在 (2, ∞) 内任取，必须显式指定 q")
            q = rule.q
        if p is None:
            p = 0.5 * (1.0 + rule.p_sup) if rule.p_strict else math.inf
        if ell is None:
            ell = 0.5 * (1.0 + 1.0 / (2.0 - alpha))
        s, r = derived_orders(alpha, gamma)
        return cls(
            d=d,
            alpha=alpha,
            gamma=gamma,
            q=q,
            p=p,
            s=s,
            r=r,
            delta=growth_exponent(alpha, gamma, s, r, p),
            ell=ell,
        )


class TrialDraw(BaseModel):
    """一次随机试验的比值 (‖u‖_{C(H^{2r})} + ‖u‖_{L^pL^q}) / (数据范数)"""

    horizon: float
    trial: int
    numerator: float
    denominator: float
    ratio: Optional[float] = None
    degenerate: bool = False


class ConstantEstimate(BaseModel):
    """C(T) = C0(1+T)^δ 的经验估计"""

    horizons: List[float]
    max_ratios: List[Optional[float]]
    delta: float
    c0_hat: float
    delta_hat: Optional[float] = None
    log_c0_fit: Optional[float] = None
    c0_fit: Optional[float] = None
    trials: int
    degenerate: int
    draws: List[TrialDraw]


def build_solvers(
    basis: EigenBasis,
    alpha: float,
    horizons: Sequence[float],
    steps: int = 128,
    grading: float = 1.0,
    include_f: bool = True,
) -> List[LinearSolver]:
    """每个时间区间一个求解器，核值表预先生成"""
    return [
        LinearSolver(basis, alpha, TimeGrid.graded(T, steps, grading)).prepare(source=include_f) for T in horizons
    ]


def random_data(
    basis: EigenBasis,
    exponents: ExponentSet,
    grid: TimeGrid,
    rng: np.random.Generator,
    rho: float = DEFAULT_RHO,
    include_u1: bool = True,
    include_f: bool = True,
) -> Tuple[np.ndarray, np.ndarray, SourceTerm]:
    """c_k = ξ_k λ_k^{-γ-ρ}；u1 用 λ^{-s-ρ}，f 取时间常数、λ^{-ρ}"""
    lam = basis.eigenvalues
    n = basis.mode_count
    u0 = rng.standard_normal(n) * lam ** (-exponents.gamma - rho)
    u1 = rng.standard_normal(n) * lam ** (-exponents.s - rho) if include_u1 else np.zeros(n)
    if include_f:
        f = SourceTerm.constant(grid, rng.standard_normal(n) * lam ** (-rho))
    else:
        f = SourceTerm.zero(grid, n)
    return u0, u1, f


def strichartz_ratio(solver: LinearSolver, exponents: ExponentSet, u0, u1, f: SourceTerm) -> Tuple[float, float]:
    """(分子, 分母)"""
    basis = solver.basis
    trajectory = solver.solve(u0, u1, f)
    numerator = c_norm(trajectory, exponents.r) + mixed_lp_lq(trajectory, MixedNormSpec(p=exponents.p, q=exponents.q))
    denominator = (
        sobolev_norm(basis, u0, exponents.gamma) + sobolev_norm(basis, u1, exponents.s) + l1_l2_norm(f, solver.grid)
    )
    return numerator, denominator


def run_trial(
    solver: LinearSolver,
    exponents: ExponentSet,
    rng_seed: int,
    horizon_index: int,
    trial: int,
    rho: float = DEFAULT_RHO,
    include_u1: bool = True,
    include_f: bool = True,
) -> TrialDraw:
    """单次试验；随机数流只由 (种子, 区间序号, 试验序号) 决定"""
    rng = np.random.default_rng([rng_seed, horizon_index, trial])
    u0, u1, f = random_data(solver.basis, exponents, solver.grid, rng, rho, include_u1, include_f)
    numerator, denominator = strichartz_ratio(solver, exponents, u0, u1, f)
    degenerate = not denominator > 0
    return TrialDraw(
        horizon=solver.grid.horizon,
        trial=trial,
        numerator=numerator,
        denominator=denominator,
        ratio=None if degenerate else numerator / denominator,
        degenerate=degenerate,
    )


def summarize_trials(exponents: ExponentSet, horizons: Sequence[float], draws: Sequence[TrialDraw]) -> ConstantEstimate:
    """每个 T 取最大比值，C0_hat = max_T ratio/(1+T)^δ；对 T ≥ 1 拟合 log ratio ~ log(1+T)，截距给出 c0_fit"""
    draws = sorted(draws, key=lambda d: (d.horizon, d.trial))
    horizons = [float(T) for T in horizons]
    max_ratios: List[Optional[float]] = []
    for T in horizons:
        ratios = [d.ratio for d in draws if d.horizon == T and d.ratio is not None]
        max_ratios.append(max(ratios) if ratios else None)

    delta = exponents.delta
    scaled = [m / (1.0 + T) ** delta for T, m in zip(horizons, max_ratios) if m is not None]
    c0_hat = max(scaled) if scaled else 0.0

    fit = [(math.log1p(T), math.log(m)) for T, m in zip(horizons, max_ratios) if m and T >= FIT_MIN_HORIZON]
    delta_hat = log_c0_fit = None
    if len(fit) >= 2:
        x, y = np.array(fit).T
        slope, intercept = np.polyfit(x, y, 1)
        delta_hat, log_c0_fit = float(slope), float(intercept)

    trials = len({d.trial for d in draws})
    return ConstantEstimate(
        horizons=horizons,
        max_ratios=max_ratios,
        delta=delta,
        c0_hat=c0_hat,
        delta_hat=delta_hat,
        log_c0_fit=log_c0_fit,
        c0_fit=None if log_c0_fit is None else math.exp(log_c0_fit),
        trials=trials,
        degenerate=sum(d.degenerate for d in draws),
        draws=list(draws),
    )


def estimate_constant(
    basis: EigenBasis,
    exponents: ExponentSet,
    horizons: Sequence[float],
    trials: int,
    rng_seed: int,
    steps: int = 128,
    grading: float = 1.0,
    rho: float = DEFAULT_RHO,
    include_u1: bool = True,
    include_f: bool = True,
) -> ConstantEstimate:
    """顺序执行全部试验；并发版本由编排器用同样的 run_trial 完成"""
    if trials < 1:
        raise ValidationError(f"试验次数 trials={trials} 至少为 1")
    if not horizons:
        raise ValidationError("至少需要一个时间区间 T")
    solvers = build_solvers(basis, exponents.alpha, horizons, steps, grading, include_f)
    draws = [
        run_trial(solver, exponents, rng_seed, index, trial, rho, include_u1, include_f)
        for index, solver in enumerate(solvers)
        for trial in range(trials)
    ]
    return summarize_trials(exponents, horizons, draws)


__all__ = [
    "AdmissibleExponents",
    "ConstantEstimate",
    "ExponentSet",
    "TrialDraw",
    "admissible_exponents",
    "build_solvers",
    "derived_orders",
    "estimate_constant",
    "growth_exponent",
    "is_admissible",
    "random_data",
    "run_trial",
    "strichartz_ratio",
    "summarize_trials",
]
