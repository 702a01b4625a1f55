import numpy as np

from ..base_stage import BaseStage
from ..core.data_persistence import trajectory_frame
from ..lab_manager import LabManager
from ..lab_states import LabState
from ..numerics.linear import (
    LinearSolver,
    caputo_l1_residual,
    refinement_difference,
    solve_linear_derivative,
    stability_report,
)
from ..numerics.norms import c_norm, node_norms, sobolev_norm, xt_norm
from ..numerics.semilinear import (
    CONTRACTION_FACTOR,
    assemble_contraction_constant,
    epsilon_sweep,
    existence_time,
    picard_solve,
    small_data_constant,
    small_data_horizon,
    tilde_constant,
)
from .calculators import estimate_constant_concurrent

# 收缩比允许的离散误差余量
RATIO_MARGIN = 0.05


def _basis_info(basis) -> dict:
    return {
        "kind": basis.kind,
        "dimension": basis.dimension,
        "modes": basis.mode_count,
        "quadrature_nodes": basis.node_count,
        "eigenvalues": basis.eigenvalues,
    }


class SolveLinearStage(BaseStage):
    """线性问题：表示公式解、稳定性估计与自加密检查"""

    def __init__(self, manager: LabManager):
        super().__init__("solve_linear", manager, "线性 IBVP 的表示公式解与稳定性估计")

    async def process(self, state: LabState, progress_tracker=None, **options) -> LabState:
        config = self.manager.config
        basis = self.manager.basis
        grid = self.manager.build_grid()
        u0, u1, f = self.manager.build_data(grid)

        solver = LinearSolver(basis, config.alpha, grid)
        trajectory = await self.run_blocking(solver.solve, u0, u1, f)
        trajectory = await self.run_blocking(solve_linear_derivative, trajectory)
        stability = await self.run_blocking(stability_report, trajectory, u0, u1, f, config.stability_r)
        refinement = await self.run_blocking(refinement_difference, solver, u0, u1, f)
        residual = caputo_l1_residual(trajectory)

        if refinement > config.tolerances.refinement:
            state.add_warning(
                f"网格 M 与 2M 的最大差 {refinement:.3e} 超过容差 {config.tolerances.refinement:.1e}，可增大 time.steps"
            )

        result = {
            "basis": _basis_info(basis),
            "grid": {"T": grid.horizon, "steps": grid.steps, "grading": grid.grading},
            "sup_l2": c_norm(trajectory, 0.0),
            "final_l2": float(np.linalg.norm(trajectory.modal_u[-1])),
            "stability": stability,
            "refinement_difference": refinement,
            "caputo_residual_max": float(residual.max()),
            "caputo_residual_per_mode": residual,
            "node_norms": node_norms(trajectory),
        }
        state.add_stage_result(self.stage_name, result)
        self.save_report(state, "linear", result)
        self.save_csv(state, "trajectory", trajectory_frame(grid.nodes, trajectory.modal_u, trajectory.modal_du))
        print(f"✅ 线性求解完成: sup‖u‖ = {result['sup_l2']:.6g}, 稳定性比值 = {stability.ratio:.6g}")
        return state


class SolveSemilinearStage(BaseStage):
    """半线性问题：常数装配、存在时间、Picard 迭代与 ε 扫描"""

    def __init__(self, manager: LabManager):
        super().__init__("solve_semilinear", manager, "Picard 迭代求解 ∂_t^α u + Au = μ|u|^{b-1}u")

    async def _strichartz_c0(self, exponents, threads: int, progress_tracker=None) -> float:
        config = self.manager.config
        if config.strichartz.c0 is not None:
            return config.strichartz.c0
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
        return estimate.c0_hat

    async def _uniqueness_check(self, basis, nonlinearity, u0, u1, grid, exponents, M, trajectory) -> dict:
        """从零初值重新迭代；球内解唯一时两条迭代收敛到同一轨道"""
        config = self.manager.config
        other, report = await self.run_blocking(
            picard_solve,
            basis,
            config.alpha,
            nonlinearity,
            u0,
            u1,
            grid,
            exponents,
            M=M,
            tolerance=config.tolerances.picard,
            max_iter=config.tolerances.max_iter,
            initial="zero",
        )
        scale = max(float(np.max(np.abs(trajectory.modal_u))), 1e-300)
        return {
            "iterate_count": report.iterate_count,
            "max_difference": float(np.max(np.abs(other.modal_u - trajectory.modal_u))) / scale,
        }

    async def process(self, state: LabState, progress_tracker=None, **options) -> LabState:
        config = self.manager.config
        basis = self.manager.basis
        exponents = self.manager.semilinear_exponents()
        nonlinearity = self.manager.build_nonlinearity()
        b, T0 = nonlinearity.b, config.time.T0

        if config.data.f != "zero":
            state.add_warning("半线性问题不含外源项，data.f 被忽略")
        u0 = self.manager.profile_coeffs(config.data.u0, config.data.u0_scale)
        u1 = self.manager.profile_coeffs(config.data.u1, config.data.u1_scale)

        c0 = await self._strichartz_c0(exponents, options.get("threads") or config.threads, progress_tracker)
        C = assemble_contraction_constant(c0, exponents.delta, T0, nonlinearity.lipschitz)
        c_tilde = tilde_constant(C, b)
        c0_tilde = small_data_constant(c_tilde, T0, exponents.delta, b)

        u0_norm = sobolev_norm(basis, u0, exponents.gamma)
        u1_norm = sobolev_norm(basis, u1, exponents.s)
        timing = existence_time(u0_norm, u1_norm, exponents, T0, C, b)
        horizon = small_data_horizon(u0_norm, u1_norm, exponents, c0_tilde, b)
        if not horizon.hypothesis_holds:
            state.add_warning("小数据条件不成立 (C̃0·(‖u0‖+‖u1‖))^{…} ≤ 1，不给出时间界")
        print(f"⏱️ 存在时间 T = {timing.T:.6g}, 球半径 M = {timing.M:.6g}, C = {C:.6g}")

        grid = self.manager.build_grid(timing.T)
        trajectory, report = await self.run_blocking(
            picard_solve,
            basis,
            config.alpha,
            nonlinearity,
            u0,
            u1,
            grid,
            exponents,
            M=timing.M,
            tolerance=config.tolerances.picard,
            max_iter=config.tolerances.max_iter,
            verbose=self.verbose,
            with_w1l=True,
        )
        if report.max_ratio is not None and all(report.in_ball) and report.max_ratio > CONTRACTION_FACTOR + RATIO_MARGIN:
            state.add_warning(f"最大收缩比 {report.max_ratio:.4g} 超过 2/3 + {RATIO_MARGIN}")
        trajectory = await self.run_blocking(solve_linear_derivative, trajectory)
        residual = caputo_l1_residual(trajectory)
        uniqueness = await self._uniqueness_check(basis, nonlinearity, u0, u1, grid, exponents, timing.M, trajectory)

        result = {
            "basis": _basis_info(basis),
            "exponents": exponents,
            "constants": {"c0": c0, "cb": nonlinearity.lipschitz, "C": C, "C_tilde": c_tilde, "C0_tilde": c0_tilde},
            "data_norms": {"u0": u0_norm, "u1": u1_norm},
            "existence": timing,
            "small_data": horizon,
            "picard": report,
            "uniqueness": uniqueness,
            "xt_norm": xt_norm(trajectory, b),
            "caputo_residual_max": float(residual.max()),
            "node_norms": node_norms(trajectory),
        }

        if config.epsilon_sweep:
            result["epsilon_sweep"] = await self.run_blocking(
                epsilon_sweep,
                basis,
                config.alpha,
                nonlinearity,
                u0,
                u1,
                exponents,
                C,
                T0,
                config.epsilon_sweep,
                config.time.steps,
                config.time.grading,
                config.tolerances.picard,
                config.tolerances.max_iter,
            )

        state.add_stage_result(self.stage_name, result)
        self.save_report(state, "semilinear", result)
        self.save_csv(state, "trajectory", trajectory_frame(grid.nodes, trajectory.modal_u, trajectory.modal_du))
        print(f"✅ Picard 迭代 {report.iterate_count} 次收敛, 残差 {report.final_residual:.3e}")
        return state
