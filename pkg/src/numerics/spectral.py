"""Dirichlet 本征基的构造，以及物理采样与模态系数之间的投影/合成"""

import itertools
import math
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy.linalg import eigh_tridiagonal

from ..errors import ValidationError

# 每个 Gauss-Legendre 面板的节点数；面板宽度取最高模态的半波长
GL_ORDER = 12

SampledFunction = Union[float, Sequence[float], np.ndarray, Callable[[np.ndarray], np.ndarray]]


class EigenBasis(BaseModel):
    """算子 A 的本征对 (λ_k, φ_k) 及空间求积网格"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: str  # interval / rectangle / fd
    dimension: int
    lengths: Tuple[float, ...]
    eigenvalues: np.ndarray  # (N,) 升序
    nodes: np.ndarray  # (Q, d) 求积节点
    weights: np.ndarray  # (Q,) 求积权重
    phi_samples: np.ndarray  # (N, Q) 本征函数在节点上的值
    multi_indices: Optional[np.ndarray] = None  # (N, d) 张量基的多重指标
    oversampling: int = 1
    exact_eigenvalues: bool = True

    @property
    def mode_count(self) -> int:
        return int(self.eigenvalues.size)

    @property
    def node_count(self) -> int:
        return int(self.weights.size)

    def gram(self) -> np.ndarray:
        """求积规则下的 Gram 矩阵"""
        return (self.phi_samples * self.weights) @ self.phi_samples.T


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array, dtype=float)
    array.setflags(write=False)
    return array


def composite_gauss_legendre(length: float, panels: int, order: int = GL_ORDER) -> Tuple[np.ndarray, np.ndarray]:
    """(0, length) 上的复合 Gauss-Legendre 节点与权重"""
    ref_nodes, ref_weights = np.polynomial.legendre.leggauss(order)
    width = length / panels
    left = np.arange(panels) * width
    nodes = (left[:, None] + 0.5 * width * (ref_nodes[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * width * ref_weights, panels)
    return nodes, weights


def _sine_table(length: float, max_index: int, x: np.ndarray) -> np.ndarray:
    """行 n-1 为 √(2/L) sin(nπx/L)"""
    n = np.arange(1, max_index + 1, dtype=float)
    return math.sqrt(2.0 / length) * np.sin(np.outer(n, x) * math.pi / length)


def _check_mode_count(mode_count: int) -> None:
    if mode_count < 1:
        raise ValidationError(f"模态数 N={mode_count} 必须至少为 1")


def build_interval_basis(length: float, mode_count: int, oversampling: int = 1) -> EigenBasis:
    """(0, L) 上的解析 Dirichlet Laplace 基: λ_n=(nπ/L)², φ_n=√(2/L)sin(nπx/L)"""
    if not length > 0:
        raise ValidationError(f"区间长度 L={length} 必须为正")
    _check_mode_count(mode_count)

    panels = max(2, mode_count) * max(1, oversampling)
    x, w = composite_gauss_legendre(length, panels)
    n = np.arange(1, mode_count + 1, dtype=float)
    return EigenBasis(
        kind="interval",
        dimension=1,
        lengths=(float(length),),
        eigenvalues=_frozen((n * math.pi / length) ** 2),
        nodes=_frozen(x[:, None]),
        weights=_frozen(w),
        phi_samples=_frozen(_sine_table(length, mode_count, x)),
        multi_indices=_frozen(n[:, None]),
        oversampling=max(1, oversampling),
    )


def smallest_tensor_modes(lengths: Sequence[float], mode_count: int) -> Tuple[np.ndarray, np.ndarray]:
    """N 个最小的张量特征值及其多重指标，并列时按多重指标字典序"""
    d = len(lengths)
    # 任一方向指标超过 N 的特征值都不可能进入前 N 个
    indices = np.array(list(itertools.product(range(1, mode_count + 1), repeat=d)), dtype=float)
    scale = np.array([math.pi / L for L in lengths])
    lam = np.sum((indices * scale) ** 2, axis=1)
    ranked = np.round(lam / lam.min(), 10)
    keys = tuple(indices[:, i] for i in reversed(range(d))) + (ranked,)
    order = np.lexsort(keys)[:mode_count]
    return lam[order], indices[order]


def build_rectangle_basis(lengths: Sequence[float], mode_count: int, oversampling: int = 1) -> EigenBasis:
    """矩形/长方体上的张量正弦基（d = 2, 3）"""
    lengths = tuple(float(L) for L in lengths)
    if len(lengths) not in (2, 3):
        raise ValidationError(f"矩形基要求 2 或 3 个边长，收到 {len(lengths)} 个")
    if any(not L > 0 for L in lengths):
        raise ValidationError(f"所有边长必须为正: {lengths}")
    _check_mode_count(mode_count)
    oversampling = max(1, oversampling)

    lam, indices = smallest_tensor_modes(lengths, mode_count)
    axis_nodes, axis_weights, axis_tables = [], [], []
    for axis, L in enumerate(lengths):
        top = int(indices[:, axis].max())
        x, w = composite_gauss_legendre(L, max(2, top) * oversampling)
        axis_nodes.append(x)
        axis_weights.append(w)
        axis_tables.append(_sine_table(L, top, x))

    mesh = np.meshgrid(*axis_nodes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    weights = axis_weights[0]
    for w in axis_weights[1:]:
        weights = np.multiply.outer(weights, w)

    phi = np.empty((mode_count, nodes.shape[0]))
    for mode, multi in enumerate(indices.astype(int)):
        values = axis_tables[0][multi[0] - 1]
        for axis in range(1, len(lengths)):
            values = np.multiply.outer(values, axis_tables[axis][multi[axis] - 1])
        phi[mode] = values.ravel()

    return EigenBasis(
        kind="rectangle",
        dimension=len(lengths),
        lengths=lengths,
        eigenvalues=_frozen(lam),
        nodes=_frozen(nodes),
        weights=_frozen(weights.ravel()),
        phi_samples=_frozen(phi),
        multi_indices=_frozen(indices),
        oversampling=oversampling,
    )


def _sample(func: SampledFunction, x: np.ndarray, mesh: np.ndarray, name: str) -> np.ndarray:
    """在 x 处取值；表格数据按网格节点给出并线性插值"""
    if callable(func):
        values = np.asarray(func(x), dtype=float)
        return np.broadcast_to(values, x.shape).astype(float)
    table = np.asarray(func, dtype=float)
    if table.ndim == 0:
        return np.full_like(x, float(table))
    if table.shape != mesh.shape:
        raise ValidationError(f"{name} 的表格长度 {table.size} 与网格节点数 {mesh.size} 不一致")
    return np.interp(x, mesh, table)


def build_fd_basis(
    coeff_a: SampledFunction,
    potential_v: SampledFunction,
    length: float,
    mesh_size: int,
    mode_count: Optional[int] = None,
) -> EigenBasis:
    """-(a u')' + V u 的二阶有限差分本征分解（Dirichlet 端点）

    系数 a 取在半节点上，矩阵对称三对角；本征向量按 h Σ φ² = 1 归一。
    """
    if not length > 0:
        raise ValidationError(f"区间长度 L={length} 必须为正")
    if mesh_size < 3:
        raise ValidationError(f"网格数 M={mesh_size} 至少为 3")
    interior = mesh_size - 1
    mode_count = interior if mode_count is None else mode_count
    _check_mode_count(mode_count)
    if mode_count > interior:
        raise ValidationError(f"模态数 {mode_count} 超过内部节点数 {interior}")

    h = length / mesh_size
    mesh = np.linspace(0.0, length, mesh_size + 1)
    a_half = _sample(coeff_a, 0.5 * (mesh[:-1] + mesh[1:]), mesh, "a")
    v_int = _sample(potential_v, mesh[1:-1], mesh, "V")
    if a_half.min() <= 0:
        raise ValidationError(f"椭圆性条件不满足: min a = {a_half.min():.6g} ≤ 0")
    if v_int.min() < 0:
        raise ValidationError(f"势函数条件不满足: min V = {v_int.min():.6g} < 0")

    diag = (a_half[:-1] + a_half[1:]) / h**2 + v_int
    off = -a_half[1:-1] / h**2
    lam, vectors = eigh_tridiagonal(diag, off, select="i", select_range=(0, mode_count - 1))
    if lam[0] <= 0:
        raise ValidationError(f"离散算子不是正定的: λ_1 = {lam[0]:.6g}")

    phi = vectors.T / math.sqrt(h)
    # 固定符号: 每个本征向量的第一个显著分量取正
    pivots = np.argmax(np.abs(phi) > 1e-8 * np.abs(phi).max(axis=1, keepdims=True), axis=1)
    phi *= np.sign(phi[np.arange(mode_count), pivots])[:, None]

    return EigenBasis(
        kind="fd",
        dimension=1,
        lengths=(float(length),),
        eigenvalues=_frozen(lam),
        nodes=_frozen(mesh[1:-1, None]),
        weights=_frozen(np.full(interior, h)),
        phi_samples=_frozen(phi),
        exact_eigenvalues=False,
    )


def refine(basis: EigenBasis, factor: int = 2) -> EigenBasis:
    """同一组模态、更细的求积网格（有限差分基无法加密，原样返回）"""
    if basis.kind == "interval":
        return build_interval_basis(basis.lengths[0], basis.mode_count, basis.oversampling * factor)
    if basis.kind == "rectangle":
        return build_rectangle_basis(basis.lengths, basis.mode_count, basis.oversampling * factor)
    return basis


def as_coeffs(basis: EigenBasis, values: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """校验模态系数长度"""
    coeffs = np.asarray(values, dtype=float)
    if coeffs.shape[-1:] != (basis.mode_count,):
        raise ValidationError(f"系数长度 {coeffs.shape[-1:]} 与模态数 {basis.mode_count} 不一致")
    return coeffs


def project(basis: EigenBasis, samples: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """⟨h, φ_k⟩ 的求积近似；支持 (..., Q) 批量输入"""
    values = np.asarray(samples, dtype=float)
    if values.shape[-1:] != (basis.node_count,):
        raise ValidationError(f"采样长度 {values.shape[-1:]} 与求积节点数 {basis.node_count} 不一致")
    return values @ (basis.phi_samples * basis.weights).T


def synthesize(basis: EigenBasis, coeffs: Union[Sequence[float], np.ndarray]) -> np.ndarray:
    """模态系数 → 求积节点上的函数值"""
    return as_coeffs(basis, coeffs) @ basis.phi_samples


def bump_samples(basis: EigenBasis) -> np.ndarray:
    """Π x_i(L_i − x_i) 在求积节点上的值"""
    values = np.ones(basis.node_count)
    for axis, L in enumerate(basis.lengths):
        x = basis.nodes[:, axis]
        values = values * x * (L - x)
    return values
