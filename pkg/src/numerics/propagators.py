"""解算子 S1/S2/S3 及其时间导数核，在本征基中对角作用"""

from enum import Enum
from typing import Dict, Tuple, Union

import numpy as np

from ..errors import DomainError, ParameterError
from .mlf import MLParams, evaluate
from .spectral import EigenBasis, as_coeffs


class PropagatorKind(str, Enum):
    """传播子种类"""

    S1 = "S1"  # E_{α,1}(-λt^α)
    S2 = "S2"  # t E_{α,2}(-λt^α)
    S3 = "S3"  # t^{α-1} E_{α,α}(-λt^α)
    DS1 = "dS1"  # -λ t^{α-1} E_{α,α}(-λt^α)
    DS2 = "dS2"  # E_{α,1}(-λt^α)
    DS3 = "dS3"  # t^{α-2} E_{α,α-1}(-λt^α)，弱奇异


SINGULAR_AT_ZERO = {PropagatorKind.S3, PropagatorKind.DS1, PropagatorKind.DS3}


def kernel_table(
    kind: Union[PropagatorKind, str],
    alpha: float,
    eigenvalues: np.ndarray,
    times: Union[float, np.ndarray],
) -> np.ndarray:
    """核值表，形状 (len(times), N)；标量 t 时为 (N,)"""
    kind = PropagatorKind(kind)
    MLParams(alpha=alpha, beta=1.0)
    lam = np.asarray(eigenvalues, dtype=float)
    t = np.asarray(times, dtype=float)
    if np.any(t < 0):
        raise DomainError("传播子要求 t ≥ 0")
    if kind in SINGULAR_AT_ZERO and np.any(t == 0):
        raise DomainError(f"{kind.value} 核在 t=0 处奇异，要求 t > 0")

    tt = t[..., None]
    x = -lam * tt**alpha
    if kind in (PropagatorKind.S1, PropagatorKind.DS2):
        return evaluate(alpha, 1.0, x)
    if kind == PropagatorKind.S2:
        return tt * evaluate(alpha, 2.0, x)
    if kind == PropagatorKind.S3:
        return tt ** (alpha - 1.0) * evaluate(alpha, alpha, x)
    if kind == PropagatorKind.DS1:
        return -lam * tt ** (alpha - 1.0) * evaluate(alpha, alpha, x)
    return tt ** (alpha - 2.0) * evaluate(alpha, alpha - 1.0, x)


def apply(
    kind: Union[PropagatorKind, str],
    basis: EigenBasis,
    alpha: float,
    t: float,
    coeffs: np.ndarray,
) -> np.ndarray:
    """第 k 个输出 = kernel(α, λ_k, t) × 第 k 个输入"""
    coeffs = as_coeffs(basis, coeffs)
    return kernel_table(kind, alpha, basis.eigenvalues, float(t)) * coeffs


class Propagator:
    """绑定基与阶数的传播子，按 (种类, t) 缓存核值"""

    def __init__(self, basis: EigenBasis, alpha: float):
        if not (0.0 < alpha <= 2.0):
            raise ParameterError(f"α={alpha} 不合法: 要求 0 < α ≤ 2")
        self.basis = basis
        self.alpha = alpha
        self._cache: Dict[Tuple[PropagatorKind, float], np.ndarray] = {}

    def kernel(self, kind: Union[PropagatorKind, str], t: float) -> np.ndarray:
        key = (PropagatorKind(kind), float(t))
        if key not in self._cache:
            self._cache[key] = kernel_table(key[0], self.alpha, self.basis.eigenvalues, key[1])
        return self._cache[key]

    def apply(self, kind: Union[PropagatorKind, str], t: float, coeffs: np.ndarray) -> np.ndarray:
        return self.kernel(kind, t) * as_coeffs(self.basis, coeffs)

    @property
    def cached_entries(self) -> int:
        return len(self._cache)
