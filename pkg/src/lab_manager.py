import math
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from .core.config_manager import ExperimentConfig
from .errors import ValidationError
from .numerics.linear import SourceTerm, TimeGrid
from .numerics.semilinear import NonlinearitySpec, exponent_set_for_b
from .numerics.spectral import (
    EigenBasis,
    build_fd_basis,
    build_interval_basis,
    build_rectangle_basis,
    bump_samples,
    project,
)
from .numerics.strichartz import ExponentSet


class LabManager:
    """实验资源管理器 - 按配置构造本征基、时间网格、数据与非线性项，供各阶段共享"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self._basis: Optional[EigenBasis] = None
        print(f"实验管理器初始化完成: 区域={config.domain.kind}, N={config.domain.modes}, α={config.alpha}")

    @property
    def basis(self) -> EigenBasis:
        """首次访问时构造，之后复用"""
        if self._basis is None:
            self._basis = self.build_basis()
        return self._basis

    def _coefficient(self, spec: Union[str, List[float]]) -> Union[float, List[float], Callable]:
        if not isinstance(spec, str):
            return spec
        length = self.config.domain.lengths[0]
        if spec == "zero":
            return 0.0
        if spec == "one":
            return 1.0
        if spec == "linear":
            return lambda x: 1.0 + x / length
        return float(spec.split(":", 1)[1])

    def build_basis(self) -> EigenBasis:
        domain = self.config.domain
        if domain.kind == "interval":
            basis = build_interval_basis(domain.lengths[0], domain.modes, domain.oversampling)
        elif domain.kind == "rectangle":
            basis = build_rectangle_basis(domain.lengths, domain.modes, domain.oversampling)
        else:
            basis = build_fd_basis(
                self._coefficient(domain.coeff_a),
                self._coefficient(domain.potential_v),
                domain.lengths[0],
                domain.mesh,
                domain.modes,
            )
        print(f"🔧 本征基构造完成: {basis.kind}, d={basis.dimension}, N={basis.mode_count}, 求积节点 {basis.node_count}")
        return basis

    def build_grid(self, horizon: Optional[float] = None) -> TimeGrid:
        time = self.config.time
        return TimeGrid.graded(time.T if horizon is None else horizon, time.steps, time.grading)

    def profile_coeffs(self, profile: Union[str, List[float]], scale: float = 1.0) -> np.ndarray:
        """zero / bump / mode:k / random:seed / 系数表 → 模态系数"""
        basis = self.basis
        n = basis.mode_count
        if not isinstance(profile, str):
            coeffs = np.asarray(profile, dtype=float)
            if coeffs.shape != (n,):
                raise ValidationError(f"系数表长度 {coeffs.size} 与模态数 {n} 不一致")
        elif profile == "zero":
            coeffs = np.zeros(n)
        elif profile == "bump":
            coeffs = project(basis, bump_samples(basis))
        elif profile.startswith("mode:"):
            k = int(profile.split(":", 1)[1])
            if not 1 <= k <= n:
                raise ValidationError(f"mode:{k} 超出模态范围 1..{n}")
            coeffs = np.zeros(n)
            coeffs[k - 1] = 1.0
        else:
            seed = int(profile.split(":", 1)[1])
            rng = np.random.default_rng(seed)
            coeffs = rng.standard_normal(n) * basis.eigenvalues ** (-self.config.data.decay)
        return scale * coeffs

    def build_data(self, grid: TimeGrid) -> Tuple[np.ndarray, np.ndarray, SourceTerm]:
        """初值 u0, u1 与时间常数源项 f"""
        data = self.config.data
        u0 = self.profile_coeffs(data.u0, data.u0_scale)
        u1 = self.profile_coeffs(data.u1, data.u1_scale)
        f = SourceTerm.constant(grid, self.profile_coeffs(data.f, data.f_scale))
        return u0, u1, f

    def build_nonlinearity(self) -> NonlinearitySpec:
        spec = self.config.nonlinearity
        return NonlinearitySpec(b=spec.b, mu=spec.mu, cb=spec.cb)

    def semilinear_exponents(self) -> ExponentSet:
        """b 对应的指数组；p、ℓ 可由配置覆盖"""
        overrides = self.config.exponents
        return exponent_set_for_b(self.config.dimension, self.config.alpha, self.config.nonlinearity.b, overrides.p, overrides.ell)

    def strichartz_exponents(self) -> ExponentSet:
        """给定 γ 时按可容许条件构造，否则沿用 b 对应的指数组"""
        overrides = self.config.exponents
        if overrides.gamma is None:
            return self.semilinear_exponents()
        return ExponentSet.build(
            self.config.dimension, self.config.alpha, overrides.gamma, overrides.p, overrides.q, overrides.ell
        )

    def get_resource_info(self) -> dict:
        domain = self.config.domain
        return {
            "domain": domain.kind,
            "dimension": self.config.dimension,
            "modes": domain.modes,
            "alpha": self.config.alpha,
            "steps": self.config.time.steps,
            "volume": math.prod(domain.lengths),
        }
