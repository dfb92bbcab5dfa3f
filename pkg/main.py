#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
非对称双光子Rabi模型隐藏对称性工具
命令行入口
"""

import sys
import argparse

from core.config_manager import COMMANDS, ConfigError, ConfigManager
from core.task_manager import EXIT_INVALID, TaskManager


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rabi-sym",
        description="非对称双光子Rabi模型: 能谱扫描、对称算符系数、不变量验证",
    )
    parser.add_argument("command", choices=COMMANDS, help="要执行的命令")
    parser.add_argument("--delta", type=float, help="量子比特劈裂 Δ (缺省按种子从 [1, 3] 抽取)")
    bias = parser.add_argument_group("偏置 (二选一)")
    bias.add_argument("--epsilon", type=float, help="固定偏置 ε")
    bias.add_argument("--bias-ratio", type=float, dest="bias_ratio", help="固定 ε/(2β)，缺省为 1")
    parser.add_argument("--g", type=float, help="耦合强度 (coeffs/verify/jsquare)，缺省 0.3")
    parser.add_argument("--g-min", type=float, dest="g_min", help="扫描下限，缺省 0.05")
    parser.add_argument("--g-max", type=float, dest="g_max", help="扫描上限，缺省 0.45")
    parser.add_argument("--g-steps", type=int, dest="g_steps", help="扫描点数，缺省 400")
    parser.add_argument("--cutoff", type=int, help="子空间截断 (态数)，缺省 300")
    parser.add_argument("--sector", choices=("even", "odd"), help="Bargmann 子空间，缺省 even")
    parser.add_argument("--levels", type=int, dest="n_levels", help="输出的能级数，缺省 8")
    parser.add_argument("--out", dest="output_dir", help="输出目录，缺省 output")
    parser.add_argument("--seed", type=int, help="随机种子，用于抽取 Δ")
    parser.add_argument("--workers", type=int, help="扫描线程数")
    parser.add_argument("--config", help="JSON 配置文件，命令行参数优先")
    parser.add_argument("--quiet", action="store_true", help="只输出错误")
    return parser


def main(argv=None) -> int:
    """主程序入口"""
    args = build_parser().parse_args(argv)
    flags = vars(args)
    config_file = flags.pop("config")
    verbose = not flags.pop("quiet")

    config_manager = ConfigManager(verbose=verbose)
    try:
        file_values = config_manager.load_config_file(config_file) if config_file else {}
        config = config_manager.merge(flags, file_values)
    except (ConfigError, TypeError) as e:
        print(f"配置无效: {e}")
        return EXIT_INVALID

    return TaskManager(config_manager, verbose=verbose).run(config)


if __name__ == "__main__":
    sys.exit(main())
