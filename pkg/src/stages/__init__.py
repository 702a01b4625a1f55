"""各子命令对应的实验阶段"""

from .calculators import EstimateConstantStage, ExponentsStage, MlfEvalStage
from .solvers import SolveLinearStage, SolveSemilinearStage
from .verifiers import VerifyLaplaceStage

__all__ = [
    'EstimateConstantStage',
    'ExponentsStage',
    'MlfEvalStage',
    'SolveLinearStage',
    'SolveSemilinearStage',
    'VerifyLaplaceStage',
]
