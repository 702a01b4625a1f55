"""数值核心：Mittag-Leffler 函数、本征基、传播子、线性/半线性求解与各类检验"""

from .laplace import LaplaceProbe, verify_weak_solution
from .linear import LinearSolver, SolutionTrajectory, SourceTerm, TimeGrid, solve_linear
from .mlf import MLParams, mlf_eval
from .semilinear import NonlinearitySpec, PicardReport, picard_solve
from .spectral import EigenBasis, build_fd_basis, build_interval_basis, build_rectangle_basis
from .strichartz import ExponentSet, estimate_constant

__all__ = [
    "EigenBasis",
    "ExponentSet",
    "LaplaceProbe",
    "LinearSolver",
    "MLParams",
    "NonlinearitySpec",
    "PicardReport",
    "SolutionTrajectory",
    "SourceTerm",
    "TimeGrid",
    "build_fd_basis",
    "build_interval_basis",
    "build_rectangle_basis",
    "estimate_constant",
    "mlf_eval",
    "picard_solve",
    "solve_linear",
    "verify_weak_solution",
]
