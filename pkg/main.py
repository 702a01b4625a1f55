#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
FracWave Lab 主程序
分数阶波动方程数值实验室
"""

import argparse
import asyncio
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

# 添加项目根目录到Python路径
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.errors import LabError
from src.workflow_orchestrator import COMMANDS, WorkflowOrchestrator, write_config_error


def print_banner():
    """打印程序横幅"""
    banner = """
╔══════════════════════════════════════════════════════════════╗
║                         FracWave Lab                         ║
║              时间分数阶波动方程 (1 < α < 2) 数值实验室            ║
║                                                              ║
║  📐 Mittag-Leffler 核  🌊 谱方法求解  🔁 Picard 迭代  ✅ 自检    ║
╚══════════════════════════════════════════════════════════════╝
    """
    print(banner)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="FracWave Lab - 时间分数阶波动方程数值实验室",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例用法:
  python main.py solve-linear --config experiment_config.json
  python main.py solve-semilinear --out results/run1 --seed 7
  python main.py verify-laplace --markdown
  python main.py estimate-constant --threads 8
  python main.py mlf-eval --alpha 1.5 --beta 1 --x -1 -10 -100

退出码: 0 成功/通过, 1 参数或校验错误, 2 检验未通过, 3 迭代发散
        """,
    )
    parser.add_argument("--version", action="version", version="FracWave Lab 1.0.0")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default="experiment_config.json", help="实验配置文件路径")
    common.add_argument("--out", help="输出目录（覆盖配置与环境变量）")
    common.add_argument("--seed", type=int, help="随机种子")
    common.add_argument("--threads", type=int, help="并发线程数")
    common.add_argument("--markdown", action="store_true", help="同时生成 Markdown 报告")

    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub = subparsers.add_parser(command, parents=[common])
        if command == "mlf-eval":
            sub.add_argument("--alpha", type=float, required=True, help="阶数 α ∈ (0, 2]")
            sub.add_argument("--beta", type=float, default=1.0, help="参数 β > 0")
            sub.add_argument("--x", type=float, nargs="+", required=True, help="求值点（非正实数）")
    return parser


async def run_command(args: argparse.Namespace) -> int:
    """构造编排器并运行子命令，返回退出码"""
    try:
        orchestrator = WorkflowOrchestrator(args.config, output_dir=args.out, seed=args.seed, threads=args.threads)
    except LabError as e:
        print(f"❌ 配置加载失败: {e}")
        write_config_error(args.out, args.command, e)
        return e.exit_code

    options = {"threads": args.threads}
    if args.command == "mlf-eval":
        options.update(alpha=args.alpha, beta=args.beta, x=args.x)
    state = await orchestrator.run(args.command, markdown=args.markdown, **options)
    return state.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    """主函数"""
    load_dotenv()
    args = build_parser().parse_args(argv)
    print_banner()

    try:
        return asyncio.run(run_command(args))
    except KeyboardInterrupt:
        print("用户中断程序")
        return 1
    except LabError as e:
        print(f"❌ 程序执行失败: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
