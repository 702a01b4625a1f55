"""实验室异常定义"""

from typing import Any, Optional


class LabError(Exception):
    """所有实验室异常的基类"""

    exit_code = 1


class ParameterError(LabError):
    """参数不合法（α、β、b、p 等）"""


class DomainError(LabError):
    """自变量超出运算定义域"""


class ValidationError(LabError):
    """形状不匹配或配置约束被违反"""


class DivergenceError(LabError):
    """Picard迭代不收敛或迭代离开球 B_M"""

    exit_code = 3

    def __init__(self, message: str, report: Optional[Any] = None):
        super().__init__(message)
        self.report = report


class BlowUpError(DivergenceError):
    """非线性项出现 NaN/溢出"""

    def __init__(self, message: str, time_index: int, report: Optional[Any] = None):
        super().__init__(message, report)
        self.time_index = time_index
