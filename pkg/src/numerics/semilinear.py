"""
半线性问题 ∂_t^α u + A u = f_b(u) 的局部解
b 的可容许窗口、对应指数组、存在时间、小数据时间界，以及映射
G_b u = S1 u0 + S2 u1 + ∫ S3(t-s) f_b(u(s)) ds 的 Picard 迭代。
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from ..errors import BlowUpError, DivergenceError, DomainError, ParameterError, ValidationError
from .linear import LinearSolver, SolutionTrajectory, SourceTerm, TimeGrid, check_order
from .norms import sobolev_norm, w1l_norm, xt_norm, yt_norm
from .spectral import EigenBasis, as_coeffs, refine
from .strichartz import ExponentSet

CONTRACTION_FACTOR = 2.0 / 3.0
DIVERGENCE_FACTOR = 10.0
DEFAULT_TOLERANCE = 1e-10
DEFAULT_MAX_ITER = 25
# 相邻差的范数低于此相对量级时不再记录收缩比（舍入噪声）
_RATIO_FLOOR = 1e-12


class NonlinearitySpec(BaseModel):
    """f_b(u) = μ|u|^{b-1}u，|f_b'(u)| ≤ cb|u|^{b-1}"""

    b: float
    mu: float = 1.0
    cb: Optional[float] = None

    @field_validator("b")
    @classmethod
    def _check_b(cls, value: float) -> float:
        if not (math.isfinite(value) and value > 1.0):
            raise ParameterError(f"b={value} 不合法: 要求 b > 1")
        return float(value)

    @property
    def lipschitz(self) -> float:
        return abs(self.mu) * self.b if self.cb is None else float(self.cb)

    def apply(self, u: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return self.mu * np.abs(u) ** (self.b - 1.0) * u

    def derivative(self, u: np.ndarray) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return self.mu * self.b * np.abs(u) ** (self.b - 1.0)

    def bound_holds(self, u: np.ndarray) -> bool:
        """在给定采样点上检查 |f_b'(u)| ≤ cb|u|^{b-1}"""
        u = np.asarray(u, dtype=float)
        rhs = self.lipschitz * np.abs(u) ** (self.b - 1.0)
        return bool(np.all(np.abs(self.derivative(u)) <= rhs * (1.0 + 1e-12)))


class BWindow(BaseModel):
    """dα/D < b < (dα+4)/D，D = dα + 4(1-α)；D ≤ 0 时窗口为空"""

    d: int
    alpha: float
    b: Optional[float] = None
    lower: Optional[float] = None
    upper: Optional[float] = None
    empty: bool = False
    admissible: bool = False


def check_b_window(d: int, alpha: float, b: Optional[float] = None) -> BWindow:
    if d not in (1, 2, 3):
        raise ParameterError(f"维数 d={d} 不合法: 只支持 1, 2, 3")
    check_order(alpha)
    denominator = d * alpha + 4.0 * (1.0 - alpha)
    if denominator <= 0:
        return BWindow(d=d, alpha=alpha, b=b, empty=True)
    lower = d * alpha / denominator
    upper = (d * alpha + 4.0) / denominator
    admissible = b is not None and lower < b < upper
    return BWindow(d=d, alpha=alpha, b=b, lower=lower, upper=upper, admissible=admissible)


def exponent_set_for_b(
    d: int,
    alpha: float,
    b: float,
    p: Optional[float] = None,
    ell: Optional[float] = None,
) -> ExponentSet:
    """γ = d(b-1)/(4b)，q = 2b；p 缺省取 (max(b, 窗口上端), 1/(1-α(1-γ))) 的中点"""
    window = check_b_window(d, alpha, b)
    if not window.admissible:
        if window.empty:
            raise DomainError(f"d={d}, α={alpha} 时 b 的可容许窗口为空（dα + 4(1-α) ≤ 0）")
        raise DomainError(f"b={b} 不在窗口 ({window.lower:.6g}, {window.upper:.6g}) 内")

    gamma = d * (b - 1.0) / (4.0 * b)
    p_sup = 1.0 / (1.0 - alpha * (1.0 - gamma))
    p_low = max(b, window.upper)
    if p is None:
        p = 0.5 * (p_low + p_sup)
    elif not (b < p < p_sup):
        raise DomainError(f"p={p} 不合法: 要求 b < p < 1/(1-α(1-γ)) = {p_sup:.6g}")
    return ExponentSet.build(d, alpha, gamma, p=p, q=2.0 * b, ell=ell)


def assemble_contraction_constant(c0: float, delta: float, T0: float, cb: float, safety: float = 2.0) -> float:
    """C = C'(1 + cb) + 1，C' = safety·C0·(1+T0)^δ"""
    if c0 < 0 or T0 <= 0:
        raise DomainError(f"需要 C0 ≥ 0 且 T0 > 0，收到 C0={c0}, T0={T0}")
    return safety * c0 * (1.0 + T0) ** delta * (1.0 + cb) + 1.0


def tilde_constant(C: float, b: float) -> float:
    """C̃ = (3·2^{b-1})^{1/(b-1)} C^{b/(b-1)}，使 T = min((C̃n)^{-p(b-1)/(p-b)}, T0)"""
    return (3.0 * 2.0 ** (b - 1.0)) ** (1.0 / (b - 1.0)) * C ** (b / (b - 1.0))


def small_data_constant(c_tilde: float, T0: float, delta: float, b: float) -> float:
    """C̃0 = C̃ / (1+T0)^{δ/(b-1)}"""
    return c_tilde / (1.0 + T0) ** (delta / (b - 1.0))


class ExistenceTime(BaseModel):
    T: float
    M: float
    data_norm: float
    clamped: bool  # True 表示 T 取到了 T0


def _time_exponent(p: float, b: float) -> float:
    """-p/(p-b)"""
    if not p > b:
        raise DomainError(f"存在时间要求 p > b，收到 p={p}, b={b}")
    return -1.0 if math.isinf(p) else -p / (p - b)


def existence_time(
    u0_norm: float,
    u1_norm: float,
    exponents: ExponentSet,
    T0: float,
    C: float,
    b: Optional[float] = None,
) -> ExistenceTime:
    """M = 2C(‖u0‖+‖u1‖)，T = min((3C M^{b-1})^{-p/(p-b)}, T0)"""
    b = exponents.q / 2.0 if b is None else b
    if u0_norm < 0 or u1_norm < 0:
        raise DomainError("数据范数必须非负")
    if not (T0 > 0 and C > 0):
        raise DomainError(f"需要 T0 > 0 且 C > 0，收到 T0={T0}, C={C}")
    exponent = _time_exponent(exponents.p, b)
    n = u0_norm + u1_norm
    M = 2.0 * C * n
    if M == 0.0:
        return ExistenceTime(T=T0, M=0.0, data_norm=n, clamped=True)
    log_T = exponent * (math.log(3.0 * C) + (b - 1.0) * math.log(M))
    T = T0 if log_T >= math.log(T0) else math.exp(log_T)
    return ExistenceTime(T=T, M=M, data_norm=n, clamped=T == T0)


class SmallDataHorizon(BaseModel):
    bound: Optional[float] = None  # 严格上界；数据为零时为 inf
    hypothesis_holds: bool
    exponent: float
    data_norm: float


def small_data_horizon(
    u0_norm: float,
    u1_norm: float,
    exponents: ExponentSet,
    c0_tilde: float,
    b: Optional[float] = None,
) -> SmallDataHorizon:
    """T < [C̃0(‖u0‖+‖u1‖)]^{-p(b-1)/(p(1+δ)-b)}，要求括号内的界大于 1"""
    b = exponents.q / 2.0 if b is None else b
    p, delta = exponents.p, exponents.delta
    if math.isinf(p):
        exponent = -(b - 1.0) / (1.0 + delta)
    else:
        if not p * (1.0 + delta) > b:
            raise DomainError(f"要求 p(1+δ) > b，收到 p={p}, δ={delta}, b={b}")
        exponent = -p * (b - 1.0) / (p * (1.0 + delta) - b)

    n = u0_norm + u1_norm
    if n == 0.0:
        return SmallDataHorizon(bound=math.inf, hypothesis_holds=True, exponent=exponent, data_norm=n)
    base = c0_tilde * n
    if not base > 0:
        raise DomainError(f"C̃0={c0_tilde} 必须为正")
    bound = base**exponent
    holds = bound > 1.0
    return SmallDataHorizon(bound=bound if holds else None, hypothesis_holds=holds, exponent=exponent, data_norm=n)


class PicardReport(BaseModel):
    """Picard 迭代的诊断信息"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    iterate_count: int = 0
    converged: bool = False
    contraction_ratios: List[float] = []
    increments: List[float] = []  # ‖u^{m+1} - u^m‖_{X_T}
    iterate_norms: List[float] = []  # ‖u^m‖_{Y_T}
    in_ball: List[bool] = []
    reference_norm: float = 0.0  # ‖u^1‖_{X_T}
    final_residual: Optional[float] = None
    tolerance: float = DEFAULT_TOLERANCE
    chosen_T: float
    chosen_M: Optional[float] = None
    initial: str = "linear"
    w1l_norm: Optional[float] = None
    exponents: ExponentSet

    @property
    def max_ratio(self) -> Optional[float]:
        return max(self.contraction_ratios) if self.contraction_ratios else None


class NonlinearMap:
    """在加密求积网格上求 f_b(u) 的投影，再做一次线性求解"""

    def __init__(self, solver: LinearSolver, nonlinearity: NonlinearitySpec, u0: np.ndarray, u1: np.ndarray):
        self.solver = solver
        self.nonlinearity = nonlinearity
        self.u0 = u0
        self.u1 = u1
        fine = refine(solver.basis, 2)
        self._phi = fine.phi_samples
        self._analysis = (fine.phi_samples * fine.weights).T

    def source(self, modal_u: np.ndarray) -> SourceTerm:
        samples = self.nonlinearity.apply(modal_u @ self._phi)
        bad = ~np.all(np.isfinite(samples), axis=1)
        if np.any(bad):
            index = int(np.argmax(bad))
            raise BlowUpError(f"非线性项在时间节点 {index} (t={self.solver.grid.nodes[index]:.6g}) 处溢出", index)
        return SourceTerm(modal_samples=samples @ self._analysis)

    def __call__(self, trajectory: SolutionTrajectory) -> SolutionTrajectory:
        return self.solver.solve(self.u0, self.u1, self.source(trajectory.modal_u))


def _difference(a: SolutionTrajectory, b: SolutionTrajectory) -> SolutionTrajectory:
    return a.model_copy(update={"modal_u": a.modal_u - b.modal_u, "modal_du": None})


def picard_solve(
    basis: EigenBasis,
    alpha: float,
    nonlinearity: NonlinearitySpec,
    u0: np.ndarray,
    u1: np.ndarray,
    grid: TimeGrid,
    exponents: ExponentSet,
    M: Optional[float] = None,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    initial: str = "linear",
    verbose: bool = False,
    with_w1l: bool = False,
) -> Tuple[SolutionTrajectory, PicardReport]:
    """u^{m+1} = G_b u^m，直到 ‖u^{m+1} - u^m‖_X ≤ tolerance·‖u^1‖_X

    收缩比在 Y_T 范数下测量；M 给定时，‖u^m‖_Y > 10M 即中止。
    """
    check_order(alpha)
    if initial not in ("linear", "zero"):
        raise ValidationError(f"初始迭代 initial={initial} 不合法: 只支持 linear / zero")
    if max_iter < 1:
        raise ValidationError(f"max_iter={max_iter} 至少为 1")
    u0 = as_coeffs(basis, u0)
    u1 = as_coeffs(basis, u1)
    b = nonlinearity.b

    solver = LinearSolver(basis, alpha, grid).prepare()
    G = NonlinearMap(solver, nonlinearity, u0, u1)
    current = solver.solve(u0, u1, None)
    if initial == "zero":
        current = current.model_copy(update={"modal_u": np.zeros_like(current.modal_u)})

    report = PicardReport(
        chosen_T=grid.horizon, chosen_M=M, tolerance=tolerance, initial=initial, exponents=exponents
    )
    previous_step: Optional[float] = None
    for iteration in range(1, max_iter + 1):
        try:
            following = G(current)
        except BlowUpError as exc:
            exc.report = report
            raise
        step = _difference(following, current)
        step_x = xt_norm(step, b)
        step_y = yt_norm(step, exponents)
        norm_y = yt_norm(following, exponents)
        if iteration == 1:
            report.reference_norm = xt_norm(following, b)

        if previous_step is not None and previous_step > _RATIO_FLOOR * max(norm_y, 1e-300):
            report.contraction_ratios.append(step_y / previous_step)
        previous_step = step_y
        report.iterate_count = iteration
        report.increments.append(step_x)
        report.iterate_norms.append(norm_y)
        report.in_ball.append(M is None or norm_y <= M)
        if verbose:
            print(f"🔁 Picard 第 {iteration} 次迭代: ‖Δ‖_X = {step_x:.3e}, ‖u‖_Y = {norm_y:.3e}")

        if not math.isfinite(norm_y):
            raise BlowUpError("迭代出现非有限值", int(grid.steps), report)
        if M is not None and M > 0 and norm_y > DIVERGENCE_FACTOR * M:
            raise DivergenceError(f"迭代离开球 B_M: ‖u‖_Y = {norm_y:.6g} > {DIVERGENCE_FACTOR:g}·M", report)

        current = following
        if step_x <= tolerance * report.reference_norm:
            report.converged = True
            break

    if not report.converged:
        raise DivergenceError(f"Picard 迭代 {max_iter} 次内未收敛", report)

    report.final_residual = xt_norm(_difference(G(current), current), b)
    if with_w1l:
        report.w1l_norm = w1l_norm(solver.prepare(derivative=True).derivative(current), exponents.ell)
    return current, report


class SweepRow(BaseModel):
    epsilon: float
    data_norm: float
    T: float
    M: float
    clamped: bool
    converged: Optional[bool] = None
    iterations: Optional[int] = None
    max_ratio: Optional[float] = None


class EpsilonSweep(BaseModel):
    rows: List[SweepRow]
    slope: Optional[float] = None
    expected_slope: float


def epsilon_sweep(
    basis: EigenBasis,
    alpha: float,
    nonlinearity: NonlinearitySpec,
    u0: np.ndarray,
    u1: np.ndarray,
    exponents: ExponentSet,
    C: float,
    T0: float,
    epsilons: Sequence[float] = (1.0, 0.5, 0.25, 0.125),
    steps: int = 64,
    grading: float = 1.0,
    tolerance: float = DEFAULT_TOLERANCE,
    max_iter: int = DEFAULT_MAX_ITER,
    run_picard: bool = True,
) -> EpsilonSweep:
    """数据缩放为 ε·(u0, u1) 时的存在时间，log-log 斜率应为 -p(b-1)/(p-b)"""
    b = nonlinearity.b
    u0_norm = sobolev_norm(basis, u0, exponents.gamma)
    u1_norm = sobolev_norm(basis, u1, exponents.s)
    rows = []
    for eps in epsilons:
        timing = existence_time(eps * u0_norm, eps * u1_norm, exponents, T0, C, b)
        row = SweepRow(epsilon=eps, data_norm=timing.data_norm, T=timing.T, M=timing.M, clamped=timing.clamped)
        if run_picard:
            grid = TimeGrid.graded(timing.T, steps, grading)
            try:
                _, report = picard_solve(
                    basis, alpha, nonlinearity, eps * np.asarray(u0), eps * np.asarray(u1), grid, exponents,
                    M=timing.M, tolerance=tolerance, max_iter=max_iter,
                )
                row.converged, row.iterations, row.max_ratio = True, report.iterate_count, report.max_ratio
            except DivergenceError as exc:
                row.converged = False
                row.iterations = exc.report.iterate_count if exc.report is not None else None
        rows.append(row)

    expected = _time_exponent(exponents.p, b) * (b - 1.0)
    free = [(math.log(r.epsilon), math.log(r.T)) for r in rows if not r.clamped and r.data_norm > 0]
    slope = None
    if len(free) >= 2:
        x, y = np.array(free).T
        slope = float(np.polyfit(x, y, 1)[0])
    return EpsilonSweep(rows=rows, slope=slope, expected_slope=expected)


__all__ = [
    "BWindow",
    "CONTRACTION_FACTOR",
    "EpsilonSweep",
    "ExistenceTime",
    "NonlinearMap",
    "NonlinearitySpec",
    "PicardReport",
    "SmallDataHorizon",
    "SweepRow",
    "assemble_contraction_constant",
    "check_b_window",
    "epsilon_sweep",
    "existence_time",
    "exponent_set_for_b",
    "picard_solve",
    "small_data_constant",
    "small_data_horizon",
    "tilde_constant",
]
