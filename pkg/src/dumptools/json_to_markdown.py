#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Report JSON to Markdown Converter
把实验报告 JSON 转为便于阅读的 Markdown 摘要
"""

import json
import math
import os
from pathlib import Path
from typing import Any, List, Optional

# 长数组只展示首尾若干项
ARRAY_PREVIEW = 6

SECTION_TITLES = {
    "config": "实验配置",
    "basis": "本征基",
    "grid": "时间网格",
    "stability": "稳定性估计",
    "exponents": "指数组",
    "constants": "常数",
    "existence": "存在时间",
    "small_data": "小数据时间界",
    "picard": "Picard 迭代",
    "uniqueness": "唯一性探测",
    "epsilon_sweep": "ε 扫描",
    "report": "Laplace 检查",
    "probe": "探测点",
    "window": "b 的窗口",
    "semilinear": "半线性指数组",
    "strichartz": "Strichartz 指数",
    "estimate": "常数估计",
    "values": "函数值",
}


class ReportToMarkdownConverter:
    """报告 JSON → Markdown"""

    def __init__(self, report_dir: str = "results", include_config: bool = True):
        """
        Args:
            report_dir: 报告所在目录，Markdown 写在同一目录
            include_config: 是否输出配置回显
        """
        self.report_dir = Path(report_dir)
        self.include_config = include_config

    def convert_report(self, json_file_path: str) -> Optional[str]:
        """转换单个报告，返回生成的 Markdown 路径，失败返回 None"""
        try:
            with open(json_file_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            print(f"❌ 转换失败: {e}")
            return None

        output_file = Path(json_file_path).with_suffix(".md")
        with open(output_file, "w", encoding="utf-8", newline="\n") as f:
            f.write(self.render(data))
        print(f"✅ Markdown报告已生成: {output_file}")
        return str(output_file)

    def render(self, data: dict) -> str:
        command = data.get("command", "")
        lines: List[str] = [f"# {command} 报告", ""]
        lines.append(f"- schema_version: `{data.get('schema_version', '')}`")

        scalars = {k: v for k, v in data.items() if not isinstance(v, (dict, list)) and k not in ("command", "schema_version")}
        for key, value in scalars.items():
            lines.append(f"- {key}: {self._format_value(value)}")
        lines.append("")

        counters = [0]
        for key, value in data.items():
            if not isinstance(value, (dict, list)):
                continue
            if key == "config" and not self.include_config:
                continue
            counters[0] += 1
            self._render_section(lines, key, value, level=2, number=f"{counters[0]}")
        return "\n".join(lines).rstrip() + "\n"

    def _render_section(self, lines: List[str], key: str, value: Any, level: int, number: str) -> None:
        title = SECTION_TITLES.get(key, key)
        lines.append(f"{'#' * min(level, 6)} {number}. {title}")
        lines.append("")
        if isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
            lines.extend(self._table(value))
            lines.append("")
            return
        if isinstance(value, list):
            lines.append(self._format_value(value))
            lines.append("")
            return

        nested = 0
        for sub_key, sub_value in value.items():
            if isinstance(sub_value, dict) or (isinstance(sub_value, list) and sub_value and isinstance(sub_value[0], dict)):
                continue
            lines.append(f"- **{sub_key}**: {self._format_value(sub_value)}")
        lines.append("")
        for sub_key, sub_value in value.items():
            if isinstance(sub_value, dict) or (isinstance(sub_value, list) and sub_value and isinstance(sub_value[0], dict)):
                nested += 1
                self._render_section(lines, sub_key, sub_value, level + 1, f"{number}.{nested}")

    def _table(self, rows: List[dict]) -> List[str]:
        columns: List[str] = []
        for row in rows:
            for key in row:
                if key not in columns and not isinstance(row[key], (dict, list)):
                    columns.append(key)
        table = ["| " + " | ".join(columns) + " |", "|" + "---|" * len(columns)]
        for row in rows:
            table.append("| " + " | ".join(self._format_value(row.get(c, "")) for c in columns) + " |")
        return table

    def _format_value(self, value: Any) -> str:
        if isinstance(value, bool) or value is None:
            return f"`{json.dumps(value)}`"
        if isinstance(value, float):
            return "NaN" if math.isnan(value) else f"{value:.6g}"
        if isinstance(value, list):
            if len(value) > 2 * ARRAY_PREVIEW:
                head = ", ".join(self._format_value(v) for v in value[:ARRAY_PREVIEW])
                tail = ", ".join(self._format_value(v) for v in value[-ARRAY_PREVIEW:])
                return f"[{head}, …, {tail}] ({len(value)} 项)"
            return "[" + ", ".join(self._format_value(v) for v in value) + "]"
        if isinstance(value, dict):
            return "{" + ", ".join(f"{k}: {self._format_value(v)}" for k, v in value.items()) + "}"
        return str(value)

    def list_reports(self) -> List[str]:
        try:
            return sorted(str(f) for f in self.report_dir.glob("*.json"))
        except OSError as e:
            print(f"❌ 列出文件时发生错误: {e}")
            return []

    def convert_all(self) -> List[str]:
        results = []
        for path in self.list_reports():
            output = self.convert_report(path)
            if output:
                results.append(output)
        return results


def main():
    """主函数 - 命令行工具"""
    import argparse

    parser = argparse.ArgumentParser(description="Report JSON to Markdown - 将实验报告 JSON 转换为 Markdown")
    parser.add_argument("-f", "--file", help="指定要转换的报告 JSON 路径")
    parser.add_argument("-a", "--all", action="store_true", help="转换目录下所有报告")
    parser.add_argument("--list", action="store_true", help="列出所有报告")
    parser.add_argument("-d", "--report-dir", default="results", help="报告目录")
    parser.add_argument("--no-config", action="store_true", help="不输出配置回显")

    args = parser.parse_args()
    converter = ReportToMarkdownConverter(args.report_dir, include_config=not args.no_config)

    if args.list:
        files = converter.list_reports()
        if files:
            print("📋 可用的报告:")
            for i, file_path in enumerate(files, 1):
                print(f"  {i}. {Path(file_path).name}")
        else:
            print("❌ 未找到任何报告")
    elif args.all:
        results = converter.convert_all()
        print(f"🎉 批量转换完成，共生成 {len(results)} 个Markdown文件")
    elif args.file:
        if os.path.exists(args.file):
            converter.convert_report(args.file)
        else:
            print(f"❌ 文件不存在: {args.file}")
    else:
        parser.print_help()


if __name__ == "__main__":
    main()
