import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .base_stage import BaseStage
from .core.config_manager import ConfigManager, ExperimentConfig
from .core.data_persistence import DataPersistence
from .dumptools.json_to_markdown import ReportToMarkdownConverter
from .errors import LabError
from .lab_manager import LabManager
from .lab_states import LabState
from .progress_tracker import ProgressTracker
from .stages import (
    EstimateConstantStage,
    ExponentsStage,
    MlfEvalStage,
    SolveLinearStage,
    SolveSemilinearStage,
    VerifyLaplaceStage,
)

# 子命令 → (阶段类, 主报告文件名)
COMMANDS = {
    "solve-linear": (SolveLinearStage, "linear"),
    "solve-semilinear": (SolveSemilinearStage, "semilinear"),
    "verify-laplace": (VerifyLaplaceStage, "laplace"),
    "exponents": (ExponentsStage, "exponents"),
    "estimate-constant": (EstimateConstantStage, "constant"),
    "mlf-eval": (MlfEvalStage, "mlf"),
}


class WorkflowOrchestrator:
    """工作流编排器 - 加载配置、构造资源，并把子命令分派给对应阶段"""

    def __init__(
        self,
        config_file: Optional[str] = "experiment_config.json",
        output_dir: Optional[str] = None,
        seed: Optional[int] = None,
        threads: Optional[int] = None,
        config: Optional[ExperimentConfig] = None,
    ):
        load_dotenv()
        self.config = config or ConfigManager(config_file).load(output_dir=output_dir, rng_seed=seed, threads=threads)
        self.manager = LabManager(self.config)
        self.stages: Dict[str, BaseStage] = {
            command: stage_cls(self.manager) for command, (stage_cls, _) in COMMANDS.items()
        }
        self.debug_mode = os.getenv("DEBUG_MODE", "false").lower() == "true"
        print(f"🚀 工作流编排器初始化完成: 输出目录 {self.config.output_dir}, 线程数 {self.config.threads}")

    async def run(self, command: str, markdown: bool = False, **options: Any) -> LabState:
        """运行一个子命令，返回最终状态（含退出码）"""
        if command not in COMMANDS:
            raise LabError(f"未知子命令: {command}，可选 {', '.join(COMMANDS)}")

        tracker = ProgressTracker(self.config.output_dir)
        tracker.set_command(command)
        state = LabState(command=command, config=self.config.report_echo())

        state = await self.stages[command].execute(state, tracker, **options)
        for warning in state.warnings:
            tracker.add_warning(warning, command)

        if markdown:
            self._render_markdown(state, COMMANDS[command][1] if state.exit_code in (0, 2) else "error")

        tracker.set_final_results(
            {
                "exit_code": state.exit_code,
                "artifacts": state.artifacts,
                "errors": len(state.errors),
                "warnings": len(state.warnings),
                "timings": tracker.stage_timings(),
            }
        )
        self._log_summary(state)
        return state

    def _render_markdown(self, state: LabState, report_name: str) -> None:
        report_path = Path(self.config.output_dir) / f"{report_name}.json"
        converter = ReportToMarkdownConverter(self.config.output_dir)
        output = converter.convert_report(str(report_path))
        if output:
            state.add_artifact(output)

    def _log_summary(self, state: LabState) -> None:
        print("\n" + "=" * 50)
        print(f"子命令: {state.command}  退出码: {state.exit_code}")
        print(f"阶段执行次数: {len(state.stage_history)}")
        if state.errors:
            print(f"错误数量: {len(state.errors)}")
            for error in state.errors:
                print(f"  - {error}")
        if state.warnings:
            print(f"警告数量: {len(state.warnings)}")
            for warning in state.warnings:
                print(f"  - {warning}")
        print("=" * 50)

    def get_workflow_info(self) -> Dict[str, Any]:
        return {
            "commands": list(COMMANDS),
            "debug_mode": self.debug_mode,
            "resources": self.manager.get_resource_info(),
        }


def write_config_error(output_dir: Optional[str], command: str, error: LabError) -> Path:
    """配置无法加载时没有编排器可用，直接写 error.json"""
    target = output_dir or os.getenv("FWAVE_OUTPUT_DIR") or "results"
    return DataPersistence(target).save_error(command, error)
