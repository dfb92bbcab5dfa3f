#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
配置管理器
负责合并命令行参数、JSON配置文件和默认值，并在计算前校验运行配置
"""

import os
import json
import math
from typing import Dict, Optional, Any
from dataclasses import dataclass, asdict, fields, replace

import numpy as np
import psutil

from core.fock_algebra import ModelParams, ParameterError, RabiSymmetryError, Sector
from core.result_writer import ResultWriter
from core.spectrum import BiasMode, GRID_MAX, GRID_MIN
from core.symmetry import min_cutoff

COMMANDS = ("spectrum", "coeffs", "verify", "jsquare", "crossings")
# 这些命令需要整数 N
INTEGER_BIAS_COMMANDS = ("verify", "jsquare")
THREADS_ENV = "RABI_SYM_THREADS"
DELTA_RANGE = (1.0, 3.0)


class ConfigError(RabiSymmetryError):
    """运行配置无效"""


@dataclass
class RunConfig:
    """一次运行的完整配置"""
    command: str = "spectrum"
    delta: Optional[float] = None
    epsilon: Optional[float] = None
    bias_ratio: Optional[float] = None
    g: float = 0.3
    g_min: float = 0.05
    g_max: float = 0.45
    g_steps: int = 400
    cutoff: int = 300
    sector: str = "even"
    n_levels: int = 8
    output_dir: str = "output"
    seed: int = 0
    workers: Optional[int] = None

    @property
    def n_bias(self) -> Optional[int]:
        """bias_ratio 为非负整数时返回 N"""
        if self.bias_ratio is None:
            return None
        nearest = round(self.bias_ratio)
        if nearest >= 0 and abs(self.bias_ratio - nearest) <= 1e-9:
            return int(nearest)
        return None


class ConfigManager:
    """配置管理器"""

    def __init__(self, verbose: bool = True):
        self.verbose = verbose

    def _log(self, message: str):
        if self.verbose:
            print(message)

    def load_config_file(self, config_file: str) -> Dict[str, Any]:
        """读取与 RunConfig 字段一一对应的扁平 JSON 文档"""
        try:
            with open(config_file, 'r', encoding='utf-8') as f:
                config_dict = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"加载配置失败: {config_file}: {e}") from e

        if not isinstance(config_dict, dict):
            raise ConfigError(f"配置文件必须是 JSON 对象: {config_file}")
        known = {f.name for f in fields(RunConfig)}
        unknown = sorted(set(config_dict) - known)
        if unknown:
            raise ConfigError(f"配置文件包含未知字段: {', '.join(unknown)}")

        self._log(f"配置已加载: {config_file}")
        return config_dict

    def merge(self, flags: Dict[str, Any], file_values: Optional[Dict[str, Any]] = None) -> RunConfig:
        """优先级: 命令行参数 > 配置文件 > 默认值；值为 None 的项视为未指定"""
        merged = asdict(RunConfig())
        for source in (file_values or {}, flags):
            for key, value in source.items():
                if value is not None:
                    merged[key] = value
        return RunConfig(**merged)

    def resolve(self, config: RunConfig) -> RunConfig:
        """补全缺省的 Δ 与偏置，然后校验"""
        if config.delta is None:
            rng = np.random.default_rng(config.seed)
            config = replace(config, delta=float(rng.uniform(*DELTA_RANGE)))
            self._log(f"未指定 Δ，按种子 {config.seed} 抽取: Δ = {config.delta:.6f}")
        if config.epsilon is None and config.bias_ratio is None:
            config = replace(config, bias_ratio=1.0)
        if config.epsilon is not None and config.bias_ratio is not None:
            if config.epsilon != 0.0 or config.bias_ratio != 0.0:
                raise ConfigError("只能指定 --epsilon 或 --bias-ratio 之一")
            config = replace(config, epsilon=None)
        if config.command in ("coeffs", "verify", "jsquare") and config.bias_ratio is None:
            # 这些命令在单个 g 点上工作，固定 ε 换算成比例
            params = ModelParams(config.delta, config.epsilon, config.g)
            config = replace(config, bias_ratio=params.bias_ratio, epsilon=None)
        self.validate(config)
        return config

    def validate(self, config: RunConfig):
        """在任何计算之前检查参数不变量"""
        if config.command not in COMMANDS:
            raise ConfigError(f"未知命令: {config.command} (可选 {', '.join(COMMANDS)})")
        try:
            Sector.parse(config.sector)
            if config.delta is None or not config.delta > 0.0:
                raise ConfigError(f"Δ 必须为正: {config.delta}")
            if not 0.0 < config.g < 0.5:
                raise ConfigError(f"耦合强度需满足 0 < g < 1/2: {config.g}")
            ModelParams(config.delta, config.epsilon or 0.0, config.g)
        except ParameterError as e:
            raise ConfigError(str(e)) from e

        if config.command in ("spectrum", "crossings"):
            if not GRID_MIN <= config.g_min < config.g_max <= GRID_MAX:
                raise ConfigError(f"g 网格需满足 {GRID_MIN} <= g_min < g_max <= {GRID_MAX}: "
                                  f"[{config.g_min}, {config.g_max}]")
            if config.g_steps < 3:
                raise ConfigError(f"g 网格至少 3 个点: {config.g_steps}")
        if config.n_levels < 2 or config.n_levels > 2 * config.cutoff:
            raise ConfigError(f"能级数需在 2 与 2*cutoff 之间: {config.n_levels}")
        if config.cutoff < 2:
            raise ConfigError(f"截断至少为 2: {config.cutoff}")

        ratio = config.bias_ratio
        if ratio is not None and (not math.isfinite(ratio) or ratio < 0.0):
            raise ConfigError(f"ε/(2β) 必须是非负有限数: {ratio}")
        if config.command in INTEGER_BIAS_COMMANDS and config.n_bias is None:
            raise ConfigError(f"{config.command} 需要整数 ε/(2β): {ratio}")
        if ratio is not None:
            needed = min_cutoff(int(math.ceil(ratio)))
            if config.cutoff < needed:
                raise ConfigError(f"N={int(math.ceil(ratio))} 需要截断 >= {needed}: {config.cutoff}")
        if config.workers is not None and config.workers < 1:
            raise ConfigError(f"线程数必须为正: {config.workers}")

    def model_params(self, config: RunConfig, g: Optional[float] = None) -> ModelParams:
        """在 g (缺省为 config.g) 处的模型参数"""
        params = ModelParams(config.delta, config.epsilon or 0.0, config.g if g is None else g)
        if config.bias_ratio is not None:
            params = params.with_bias_ratio(config.bias_ratio)
        return params

    def bias_mode(self, config: RunConfig) -> BiasMode:
        if config.bias_ratio is not None:
            return BiasMode("ratio", config.bias_ratio)
        return BiasMode("epsilon", config.epsilon)

    def g_grid(self, config: RunConfig) -> np.ndarray:
        return np.linspace(config.g_min, config.g_max, config.g_steps)

    def worker_count(self, config: RunConfig) -> int:
        """默认取物理核数，环境变量 RABI_SYM_THREADS 为上限"""
        count = config.workers or psutil.cpu_count(logical=False) or 1
        cap = os.environ.get(THREADS_ENV)
        if cap:
            try:
                count = min(count, max(1, int(cap)))
            except ValueError:
                self._log(f"忽略无效的 {THREADS_ENV}: {cap}")
        return count

    def save_config(self, config: RunConfig, output_dir: str) -> bool:
        """把解析后的配置写到输出目录，便于复现"""
        try:
            ResultWriter(output_dir, verbose=False).write_json("run_config.json", asdict(config))
            self._log(f"配置已保存: {os.path.join(output_dir, 'run_config.json')}")
            return True
        except OSError as e:
            print(f"保存配置失败: {e}")
            return False
