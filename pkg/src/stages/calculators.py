import asyncio
import math
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from ..base_stage import BaseStage
from ..core.config_manager import StrichartzConfig
from ..lab_manager import LabManager
from ..lab_states import LabState
from ..numerics.mlf import MLParams, mlf_eval, mlf_series_reference
from ..numerics.semilinear import check_b_window, exponent_set_for_b
from ..numerics.spectral import EigenBasis
from ..numerics.strichartz import (
    ConstantEstimate,
    ExponentSet,
    admissible_exponents,
    build_solvers,
    derived_orders,
    growth_exponent,
    is_admissible,
    run_trial,
    summarize_trials,
)
from ..progress_tracker import ProgressTracker

# 参照级数只在 |x| 不太大时使用
REFERENCE_LIMIT = 50.0


async def estimate_constant_concurrent(
    basis: EigenBasis,
    exponents: ExponentSet,
    settings: StrichartzConfig,
    rng_seed: int,
    threads: int,
    grading: float = 1.0,
    verbose: bool = False,
    progress_tracker: Optional[ProgressTracker] = None,
    stage_name: str = "estimate_constant",
) -> ConstantEstimate:
    """试验在线程池中并发运行，并发度由信号量限制；结果排序后汇总，与线程数无关"""
    horizons = list(settings.horizons)
    solvers = await asyncio.to_thread(
        build_solvers, basis, exponents.alpha, horizons, settings.steps, grading, settings.include_f
    )
    semaphore = asyncio.Semaphore(threads)

    async def one(index: int, trial: int):
        async with semaphore:
            return await asyncio.to_thread(
                run_trial,
                solvers[index],
                exponents,
                rng_seed,
                index,
                trial,
                settings.rho,
                settings.include_u1,
                settings.include_f,
            )

    draws = []
    for index, T in enumerate(horizons):
        draws.extend(await asyncio.gather(*(one(index, trial) for trial in range(settings.trials))))
        ratios = [d.ratio for d in draws if d.horizon == T and d.ratio is not None]
        best = max(ratios) if ratios else None
        if progress_tracker:
            progress_tracker.record_step(stage_name, f"T={T:g}", index + 1, len(horizons), {"max_ratio": best})
        elif verbose:
            print(f"📈 T={T:g}: {settings.trials} 次试验完成，最大比值 {best}")
    return summarize_trials(exponents, horizons, draws)


def draws_frame(estimate: ConstantEstimate) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "T": [d.horizon for d in estimate.draws],
            "trial": [d.trial for d in estimate.draws],
            "numerator": [d.numerator for d in estimate.draws],
            "denominator": [d.denominator for d in estimate.draws],
            "ratio": [np.nan if d.ratio is None else d.ratio for d in estimate.draws],
            "degenerate": [d.degenerate for d in estimate.draws],
        }
    )


class ExponentsStage(BaseStage):
    """指数计算器：b 的窗口、对应指数组，以及给定 γ 时的可容许条件"""

    def __init__(self, manager: LabManager):
        super().__init__("exponents", manager, "可容许指数、导出阶 s/r、增长指数 δ 与 b 的窗口")

    async def process(self, state: LabState, progress_tracker=None, **options) -> LabState:
        config = self.manager.config
        d, alpha, b = config.dimension, config.alpha, config.nonlinearity.b
        overrides = config.exponents
        overridden = overrides.d is not None and overrides.d != config.domain.dimension
        payload = {
            "d": d,
            "domain_dimension": config.domain.dimension,
            "d_overridden": overridden,
            "alpha": alpha,
            "b": b,
        }
        if overridden:
            state.add_warning(f"指数按 exponents.d={d} 计算，与计算区域的维数 {config.domain.dimension} 不同")

        window = check_b_window(d, alpha, b)
        payload["window"] = window
        if window.admissible:
            exponents = exponent_set_for_b(d, alpha, b, overrides.p, overrides.ell)
            payload["semilinear"] = exponents
            payload["p_window"] = [max(b, window.upper), 1.0 / (1.0 - alpha * (1.0 - exponents.gamma))]
            print(
                f"✅ b={b} 在窗口 ({window.lower:.6g}, {window.upper:.6g}) 内: "
                f"γ={exponents.gamma:.6g}, q={exponents.q:.6g}, s={exponents.s:.6g}, r={exponents.r:.6g}, "
                f"p={exponents.p:.6g}, δ={exponents.delta:.6g}"
            )
        else:
            if window.empty:
                message = f"d={d}, α={alpha} 时 b 的窗口为空（dα + 4(1-α) ≤ 0）"
            else:
                message = f"b={b} 不在窗口 ({window.lower:.6g}, {window.upper:.6g}) 内"
            if overrides.gamma is None:
                state.add_error(message, 1)
            else:
                state.add_warning(message)
            print(f"❌ {message}")

        if overrides.gamma is not None:
            payload["strichartz"] = self._strichartz_block(state, d, alpha, overrides.gamma, overrides.p, overrides.q)

        state.add_stage_result(self.stage_name, payload)
        self.save_report(state, "exponents", payload)
        return state

    def _strichartz_block(
        self, state: LabState, d: int, alpha: float, gamma: float, p: Optional[float], q: Optional[float]
    ) -> dict:
        rule = admissible_exponents(d, alpha, gamma)
        s, r = derived_orders(alpha, gamma)
        block = {"rule": rule, "s": s, "r": r}
        if rule.q is None and q is None:
            state.add_warning(f"γ = d/4 = {gamma}: q 可在 (2, ∞) 内任取，需在配置中指定 q")
        if rule.unproven_dimension:
            state.add_warning("d = 1 超出理论结果覆盖的维数，仅作数值参考")
        if p is None and not rule.p_strict:
            p = math.inf
        if p is not None:
            block["p"] = p
            block["delta"] = growth_exponent(alpha, gamma, s, r, p)
            chosen_q = rule.q if q is None else q
            if chosen_q is not None:
                block["q"] = chosen_q
                block["admissible"] = is_admissible(d, alpha, gamma, p, chosen_q)
        print(f"📐 γ={gamma}: q 规则={rule.q if rule.q is not None else rule.q_range}, p 上确界={rule.p_sup:g}, s={s:.6g}, r={r:.6g}")
        return block


class EstimateConstantStage(BaseStage):
    """Strichartz 常数的 Monte-Carlo 估计"""

    def __init__(self, manager: LabManager):
        super().__init__("estimate_constant", manager, "随机数据下 C(T) = C0(1+T)^δ 的经验估计")

    async def process(self, state: LabState, progress_tracker=None, **options) -> LabState:
        config = self.manager.config
        exponents = self.manager.strichartz_exponents()
        threads = options.get("threads") or config.threads
        estimate = await estimate_constant_concurrent(
            self.manager.basis,
            exponents,
            config.strichartz,
            config.rng_seed,
            threads,
            config.time.grading,
            self.verbose,
            progress_tracker,
            self.stage_name,
        )
        if estimate.delta_hat is not None and estimate.delta_hat > exponents.delta + 0.15:
            state.add_warning(f"拟合斜率 δ̂={estimate.delta_hat:.4g} 超过 δ + 0.15 = {exponents.delta + 0.15:.4g}")
        if estimate.degenerate:
            state.add_warning(f"{estimate.degenerate} 次试验的数据范数为零，已跳过")

        summary = estimate.model_dump(exclude={"draws"})
        state.add_stage_result(self.stage_name, summary)
        self.save_report(state, "constant", {"exponents": exponents, "estimate": summary})
        self.save_csv(state, "draws", draws_frame(estimate))
        fit = "n/a" if estimate.c0_fit is None else f"{estimate.c0_fit:.6g}"
        print(f"✅ C0_hat={estimate.c0_hat:.6g}, C0_fit={fit}, δ={estimate.delta:.6g}, δ̂={estimate.delta_hat}")
        return state


class MlfEvalStage(BaseStage):
    """单点/多点求值 E_{α,β}(x)"""

    def __init__(self, manager: LabManager):
        super().__init__("mlf_eval", manager, "Mittag-Leffler 函数求值")

    async def process(self, state: LabState, progress_tracker=None, **options) -> LabState:
        params = MLParams(alpha=options["alpha"], beta=options["beta"])
        x: Sequence[float] = [float(v) for v in options["x"]]
        values = np.atleast_1d(mlf_eval(params, np.asarray(x)))
        rows: List[dict] = []
        for xi, value in zip(x, values):
            row = {"x": xi, "value": float(value)}
            if abs(xi) <= REFERENCE_LIMIT and xi <= 0:
                reference = mlf_series_reference(params.alpha, params.beta, xi)
                row["reference"] = reference
                row["error"] = abs(float(value) - reference) / (1.0 + abs(reference))
            rows.append(row)
            print(f"E_{{{params.alpha:g},{params.beta:g}}}({xi:g}) = {float(value):.17g}")

        payload = {"alpha": params.alpha, "beta": params.beta, "values": rows}
        state.add_stage_result(self.stage_name, payload)
        self.save_report(state, "mlf", payload)
        return state
