from ..base_stage import BaseStage
from ..lab_manager import LabManager
from ..lab_states import LabState
from ..numerics.laplace import LaplaceProbe, compare_transforms, modal_laplace, verify_weak_solution


class VerifyLaplaceStage(BaseStage):
    """弱解的 Laplace 域检查：代数恒等式残差、衰减一致性，以及加密网格下变换的一致性"""

    def __init__(self, manager: LabManager):
        super().__init__("verify_laplace", manager, "Laplace 变换刻画下的弱解验证")

    def _probe(self, horizon: float) -> LaplaceProbe:
        probe = self.manager.config.probe
        return LaplaceProbe.default(
            horizon,
            p_min=probe.p_min,
            p_max=probe.p_max,
            count=probe.count,
            horizon_factor=probe.horizon_factor,
            panels=probe.panels,
            min_horizon=probe.min_horizon,
        )

    def _uniqueness(self, grid, probe, u0, u1, f) -> dict:
        """同一数据在 M 与 2M 网格上的变换之差应落在截断误差界内"""
        config = self.manager.config
        basis = self.manager.basis
        fine = grid.refined()
        coarse_t = modal_laplace(basis, config.alpha, u0, u1, f, grid, probe)
        fine_t = modal_laplace(basis, config.alpha, u0, u1, f.refined(grid), fine, probe)
        discrepancy, tail = compare_transforms(coarse_t, fine_t)
        return {"discrepancy": discrepancy, "tail_bound": tail, "consistent": discrepancy <= tail + config.tolerances.laplace}

    async def process(self, state: LabState, progress_tracker=None, **options) -> LabState:
        config = self.manager.config
        basis = self.manager.basis
        grid = self.manager.build_grid()
        u0, u1, f = self.manager.build_data(grid)
        probe = self._probe(grid.horizon)

        report = await self.run_blocking(
            verify_weak_solution,
            basis,
            config.alpha,
            u0,
            u1,
            f,
            grid,
            probe,
            config.tolerances.laplace,
            config.corruption,
        )
        uniqueness = await self.run_blocking(self._uniqueness, grid, probe, u0, u1, f)

        if not report.decay_consistent:
            state.add_warning("|V_k(p)| 超出由 E_{α,β} 上界推出的估计")
        if not uniqueness["consistent"]:
            state.add_warning(f"M 与 2M 网格的变换差 {uniqueness['discrepancy']:.3e} 超过截断误差界")

        result = {
            "probe": {
                "p_min": float(probe.p_values.min()),
                "p_max": float(probe.p_values.max()),
                "count": int(probe.p_values.size),
                "T_max": probe.horizon,
            },
            "report": report,
            "uniqueness": uniqueness,
            "verdict": "PASS" if report.passed else "FAIL",
        }
        state.add_stage_result(self.stage_name, result)
        self.save_report(state, "laplace", result)

        if report.passed:
            print(f"✅ Laplace 检查通过: 最大相对残差 {report.max_residual:.3e} ≤ {report.tolerance:.1e}")
        else:
            state.mark_failed_verification(
                f"Laplace 检查失败: 最大相对残差 {report.max_residual:.3e} > {report.tolerance:.1e}"
            )
            print(f"❌ Laplace 检查失败: 最大相对残差 {report.max_residual:.3e}")
        return state
