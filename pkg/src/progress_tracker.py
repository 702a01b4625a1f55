import json
import os
import time
import uuid
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from .core.data_persistence import atomic_write_text, to_jsonable


class ProgressTracker:
    """会话记录：阶段耗时、长任务的分步进度、警告与错误

    会话 JSON 写在 <output_dir>/sessions/ 下，带时间戳；报告文件不带时间戳，二者分开保存。
    """

    def __init__(self, output_dir: str = "results", session_id: Optional[str] = None):
        # 微秒 + UUID短码，同一秒内多次运行也不会重名
        self.session_id = session_id or f"{datetime.now().strftime('%Y%m%d_%H%M%S_%f')}_{uuid.uuid4().hex[:8]}"
        self.session_dir = os.path.join(output_dir, "sessions")
        self.json_file = os.path.join(self.session_dir, f"session_{self.session_id}.json")
        self._clock: Dict[str, float] = {}

        self.session_data: Dict[str, Any] = {
            "session_id": self.session_id,
            "created_at": datetime.now().isoformat(),
            "updated_at": "",
            "status": "active",
            "command": "",
            "stages": [],
            "steps": [],
            "errors": [],
            "warnings": [],
            "final_results": {},
        }
        self._save_json()
        print(f"🚀 会话开始: {self.session_id}")

    def _save_json(self) -> None:
        self.session_data["updated_at"] = datetime.now().isoformat()
        try:
            text = json.dumps(to_jsonable(self.session_data), ensure_ascii=False, indent=2, default=str)
            atomic_write_text(Path(self.json_file), text)
        except (OSError, TypeError, ValueError) as e:
            print(f"❌ 保存会话文件失败: {e}")

    def _stage(self, stage_name: str) -> Optional[Dict[str, Any]]:
        for stage in reversed(self.session_data["stages"]):
            if stage["stage_name"] == stage_name:
                return stage
        return None

    def set_command(self, command: str) -> None:
        self.session_data["command"] = command
        self._save_json()
        print(f"📝 子命令: {command}")

    def start_stage(self, stage_name: str, description: str = "") -> None:
        self._clock[stage_name] = time.perf_counter()
        self.session_data["stages"].append(
            {
                "stage_name": stage_name,
                "description": description,
                "status": "running",
                "start_time": datetime.now().isoformat(),
            }
        )
        self._save_json()
        print(f"📍 阶段开始: {stage_name}" + (f" ({description})" if description else ""))

    def record_step(
        self, stage_name: str, label: str, done: int, total: int, detail: Optional[Dict[str, Any]] = None
    ) -> None:
        """长任务的分步进度，例如 Monte-Carlo 的每个时间区间"""
        entry = {"stage_name": stage_name, "label": label, "done": done, "total": total}
        if detail:
            entry["detail"] = detail
        self.session_data["steps"].append(entry)
        self._save_json()
        print(f"⏳ [{stage_name}] {label}: {done}/{total}")

    def complete_stage(self, stage_name: str, success: bool = True, result: Any = None) -> None:
        stage = self._stage(stage_name)
        if stage is not None and stage["status"] == "running":
            stage["status"] = "completed" if success else "failed"
            stage["end_time"] = datetime.now().isoformat()
            stage["elapsed_seconds"] = time.perf_counter() - self._clock.pop(stage_name, time.perf_counter())
            if result is not None:
                stage["result"] = result
        self._save_json()
        elapsed = stage.get("elapsed_seconds", 0.0) if stage else 0.0
        print(f"🏁 阶段完成: {stage_name} - {'✅ 成功' if success else '❌ 失败'} ({elapsed:.2f}s)")

    def _note(self, kind: str, message: str, stage_name: Optional[str]) -> None:
        self.session_data[kind].append(
            {"message": message, "stage_name": stage_name or "", "timestamp": datetime.now().isoformat()}
        )
        self._save_json()

    def add_error(self, error_msg: str, stage_name: Optional[str] = None) -> None:
        self._note("errors", error_msg, stage_name)
        print(f"❌ {stage_name + ' ' if stage_name else ''}错误: {error_msg}")

    def add_warning(self, warning_msg: str, stage_name: Optional[str] = None) -> None:
        self._note("warnings", warning_msg, stage_name)
        print(f"⚠️ {stage_name + ' ' if stage_name else ''}警告: {warning_msg}")

    def set_final_results(self, results: Dict[str, Any]) -> None:
        """退出码为 0 时会话记为 completed，否则 failed"""
        self.session_data["final_results"] = results
        self.session_data["status"] = "completed" if results.get("exit_code", 0) == 0 else "failed"
        self._save_json()
        print("\n📊 最终结果:")
        print("=" * 60)
        for key, value in results.items():
            print(f"{key}: {value}")
        print("=" * 60)

    def stage_timings(self) -> List[Dict[str, Any]]:
        return [
            {"stage_name": s["stage_name"], "status": s["status"], "elapsed_seconds": s.get("elapsed_seconds")}
            for s in self.session_data["stages"]
        ]

    def get_session_summary(self) -> Dict[str, Any]:
        return {
            "session_id": self.session_id,
            "json_file": self.json_file,
            "stages": len(self.session_data["stages"]),
            "steps": len(self.session_data["steps"]),
            "errors": len(self.session_data["errors"]),
        }
