from typing import Any, Dict, List

from pydantic import BaseModel


class LabState(BaseModel):
    """实验状态 - 各阶段之间传递的核心状态"""

    command: str = ""
    config: Dict[str, Any] = {}  # 配置副本（不含线程数与输出目录）

    # 各阶段结果，按阶段名保存
    results: Dict[str, Any] = {}

    # 阶段执行历史
    stage_history: List[Dict[str, Any]] = []

    # 已写出的文件
    artifacts: List[str] = []

    # 错误和警告信息
    errors: List[str] = []
    warnings: List[str] = []

    exit_code: int = 0

    def add_stage_result(self, stage_name: str, result: Any):
        """保存阶段结果"""
        self.results[stage_name] = result

    def add_stage_execution(self, stage_name: str, action: str, success: bool = True):
        """添加阶段执行记录"""
        self.stage_history.append({"stage_name": stage_name, "action": action, "success": success})

    def add_artifact(self, path: Any):
        self.artifacts.append(str(path))

    def add_error(self, error_msg: str, exit_code: int = 1):
        """添加错误信息；退出码取已记录的最大值"""
        self.errors.append(error_msg)
        self.exit_code = max(self.exit_code, exit_code)

    def add_warning(self, warning_msg: str):
        """添加警告信息"""
        self.warnings.append(warning_msg)

    def mark_failed_verification(self, message: str):
        """检验未通过（退出码 2）"""
        self.add_warning(message)
        self.exit_code = max(self.exit_code, 2)

    @property
    def succeeded(self) -> bool:
        return self.exit_code == 0
