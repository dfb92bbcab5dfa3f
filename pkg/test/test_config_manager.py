#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试配置合并与校验
"""

import json
import os
import sys
import tempfile

import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.config_manager import THREADS_ENV, ConfigError, ConfigManager, RunConfig


def manager():
    return ConfigManager(verbose=False)


def test_merge_precedence():
    """命令行 > 配置文件 > 默认值"""
    cm = manager()
    config = cm.merge({"command": "coeffs", "cutoff": 80, "g": None},
                      {"cutoff": 50, "g": 0.2, "sector": "odd"})
    assert config.command == "coeffs"
    assert config.cutoff == 80
    assert config.g == 0.2
    assert config.sector == "odd"
    assert config.g_steps == 400


def test_load_config_file():
    cm = manager()
    with tempfile.TemporaryDirectory() as tmp:
        good = os.path.join(tmp, "good.json")
        with open(good, "w", encoding="utf-8") as f:
            json.dump({"delta": 1.5, "bias_ratio": 2}, f)
        assert cm.load_config_file(good) == {"delta": 1.5, "bias_ratio": 2}

        unknown = os.path.join(tmp, "unknown.json")
        with open(unknown, "w", encoding="utf-8") as f:
            json.dump({"delta": 1.5, "chrome_path": "/usr/bin"}, f)
        with pytest.raises(ConfigError):
            cm.load_config_file(unknown)

        with pytest.raises(ConfigError):
            cm.load_config_file(os.path.join(tmp, "missing.json"))


def test_resolve_defaults():
    """Δ 按种子抽取，偏置缺省为 ε/(2β) = 1"""
    cm = manager()
    first = cm.resolve(RunConfig(command="spectrum", seed=11))
    second = cm.resolve(RunConfig(command="spectrum", seed=11))
    assert first.delta == second.delta
    assert 1.0 <= first.delta <= 3.0
    assert first.bias_ratio == 1.0
    assert cm.resolve(RunConfig(command="spectrum", seed=12)).delta != first.delta


def test_resolve_bias():
    cm = manager()
    with pytest.raises(ConfigError):
        cm.resolve(RunConfig(command="spectrum", delta=1.0, epsilon=0.5, bias_ratio=1.0))
    both_zero = cm.resolve(RunConfig(command="spectrum", delta=1.0, epsilon=0.0, bias_ratio=0.0))
    assert both_zero.epsilon is None and both_zero.bias_ratio == 0.0

    # g = 0.3 时 β = 0.8，ε = 3.2 对应 N = 2
    converted = cm.resolve(RunConfig(command="verify", delta=1.0, epsilon=3.2, g=0.3))
    assert converted.n_bias == 2
    assert cm.resolve(RunConfig(command="spectrum", delta=1.0, epsilon=0.3)).bias_ratio is None


def test_validate_rejects():
    cm = manager()
    bad_configs = [
        RunConfig(command="plot", delta=1.0),
        RunConfig(command="verify", delta=1.0, bias_ratio=0.5),
        RunConfig(command="jsquare", delta=1.0, bias_ratio=-1.0),
        RunConfig(command="coeffs", delta=1.0, g=0.5),
        RunConfig(command="coeffs", delta=-1.0),
        RunConfig(command="coeffs", delta=1.0, bias_ratio=3, cutoff=19),
        RunConfig(command="spectrum", delta=1.0, g_min=0.3, g_max=0.2),
        RunConfig(command="spectrum", delta=1.0, g_steps=2),
        RunConfig(command="spectrum", delta=1.0, sector="both"),
        RunConfig(command="spectrum", delta=1.0, workers=0),
        RunConfig(command="spectrum", delta=1.0, n_levels=1),
    ]
    for config in bad_configs:
        with pytest.raises(ConfigError):
            cm.resolve(config)
    # N = 3 需要 4(3+2) = 20
    assert cm.resolve(RunConfig(command="coeffs", delta=1.0, bias_ratio=3, cutoff=20)).n_bias == 3


def test_worker_count_env_cap():
    cm = manager()
    saved = os.environ.get(THREADS_ENV)
    try:
        os.environ[THREADS_ENV] = "2"
        assert cm.worker_count(RunConfig(workers=8)) == 2
        assert cm.worker_count(RunConfig(workers=1)) == 1
        os.environ[THREADS_ENV] = "many"
        assert cm.worker_count(RunConfig(workers=3)) == 3
        del os.environ[THREADS_ENV]
        assert cm.worker_count(RunConfig()) >= 1
    finally:
        if saved is None:
            os.environ.pop(THREADS_ENV, None)
        else:
            os.environ[THREADS_ENV] = saved


def test_model_params_follow_ratio():
    cm = manager()
    config = cm.resolve(RunConfig(command="spectrum", delta=2.0, bias_ratio=2.0))
    params = cm.model_params(config, g=0.3)
    assert params.epsilon == pytest.approx(3.2)
    assert cm.bias_mode(config).kind == "ratio"
    assert len(cm.g_grid(config)) == 400


if __name__ == "__main__":
    test_merge_precedence()
    test_load_config_file()
    test_resolve_defaults()
    test_resolve_bias()
    test_validate_rejects()
    test_worker_count_env_cap()
    test_model_params_follow_ratio()
    print("\n全部通过")
