import asyncio
import traceback
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, Optional

import pandas as pd

from .core.config_manager import debug_mode, verbose_logging
from .core.data_persistence import DataPersistence
from .errors import LabError
from .lab_manager import LabManager
from .lab_states import LabState
from .progress_tracker import ProgressTracker


class BaseStage(ABC):
    """基础阶段类 - 每个子命令对应一个阶段"""

    def __init__(self, stage_name: str, manager: LabManager, description: str = ""):
        self.stage_name = stage_name
        self.manager = manager
        self.description = description
        self.verbose = verbose_logging()
        self.persistence = DataPersistence(manager.config.output_dir)

    @abstractmethod
    async def process(self, state: LabState, progress_tracker: Optional[ProgressTracker] = None, **options) -> LabState:
        """阶段逻辑 - 子类必须实现"""

    async def run_blocking(self, func: Callable, *args, **kwargs) -> Any:
        """数值计算放到工作线程，不阻塞事件循环"""
        return await asyncio.to_thread(func, *args, **kwargs)

    def validate_state(self, state: LabState) -> bool:
        if not state.command:
            print(f"❌ [{self.stage_name}] 状态缺少命令名")
            return False
        return True

    def save_report(self, state: LabState, name: str, payload: Dict[str, Any]) -> None:
        document = {"config": state.config}
        document.update(payload)
        state.add_artifact(self.persistence.save_report(name, state.command, document))

    def save_csv(self, state: LabState, name: str, frame: pd.DataFrame) -> None:
        state.add_artifact(self.persistence.save_csv(name, frame))

    async def execute(self, state: LabState, progress_tracker: Optional[ProgressTracker] = None, **options) -> LabState:
        """运行阶段并把库异常转成状态中的错误与退出码"""
        if not self.validate_state(state):
            state.add_error("状态校验失败")
            return state
        if progress_tracker:
            progress_tracker.start_stage(self.stage_name, self.description)
        try:
            state = await self.process(state, progress_tracker, **options)
            state.add_stage_execution(self.stage_name, self.description, state.succeeded)
            if progress_tracker:
                progress_tracker.complete_stage(self.stage_name, state.succeeded, state.results.get(self.stage_name))
        except LabError as e:
            if debug_mode():
                traceback.print_exc()
            state.add_error(f"{type(e).__name__}: {e}", e.exit_code)
            state.add_stage_execution(self.stage_name, self.description, False)
            state.add_artifact(self.persistence.save_error(state.command, e))
            if progress_tracker:
                progress_tracker.add_error(str(e), self.stage_name)
                progress_tracker.complete_stage(self.stage_name, False)
        return state
