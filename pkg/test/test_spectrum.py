#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试能谱扫描、能级追踪与交叉检测
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.fock_algebra import BlockOp, FockBasis, ModelParams, ParameterError, Sector
from core.spectrum import (
    BiasMode, NotSymmetric, SpectrumScan, UNLABELED, detect_crossings, eigensolve,
    evaluate_point, golden_section_search, sweep, track_levels, validate_grid,
)

BASE = ModelParams(delta=2.0, epsilon=0.0, g=0.2)


def test_eigensolve_rejects_asymmetric():
    basis = FockBasis.for_sector("even", 3)
    matrix = np.arange(36, dtype=float).reshape(6, 6)
    with pytest.raises(NotSymmetric):
        eigensolve(BlockOp.from_dense(matrix, basis))
    values, vectors = eigensolve(BlockOp.from_dense(matrix + matrix.T, basis), 2)
    assert values.shape == (2,) and vectors.shape == (6, 2)


def test_golden_section_search():
    x, y = golden_section_search(lambda g: (g - 0.3) ** 2, 0.1, 0.5)
    assert abs(x - 0.3) < 1e-5
    assert y < 1e-10
    # 非零极小值时区间收缩到底
    x, y = golden_section_search(lambda g: abs(g - 0.21) + 0.5, 0.1, 0.4)
    assert abs(x - 0.21) < 1e-10
    assert y == pytest.approx(0.5)


def test_bias_modes():
    ratio = BiasMode("ratio", 1.0).params_at(BASE, 0.3)
    assert ratio.epsilon == pytest.approx(1.6)
    assert ratio.n_bias == 1
    fixed = BiasMode("epsilon", 0.4).params_at(BASE, 0.3)
    assert fixed.epsilon == 0.4
    with pytest.raises(ParameterError):
        BiasMode("delta", 1.0)


def test_validate_grid():
    np.testing.assert_allclose(validate_grid([0.1, 0.2]), [0.1, 0.2])
    for bad in ([], [0.2, 0.1], [0.1, 0.1], [0.005, 0.1], [0.1, 0.495]):
        with pytest.raises(ParameterError):
            validate_grid(bad)


def test_sweep_labels():
    """整数比例下每个能级都有标签，非整数比例下都没有"""
    print("=== 扫描测试 ===")
    grid = np.linspace(0.1, 0.4, 6)
    labelled = sweep(BASE, BiasMode("ratio", 1.0), grid, "even", 60, 6, workers=2)
    assert labelled.levels.shape == (6, 6)
    assert labelled.labelled
    assert np.all(np.diff(labelled.levels, axis=1) >= 0.0)

    plain = sweep(BASE, BiasMode("ratio", 0.5), grid, "even", 60, 6, workers=1)
    assert np.all(plain.labels == UNLABELED)
    rows = list(plain.csv_rows())
    assert len(rows) == 36
    assert rows[0][3] == "unlabeled"
    print("✓ 标签正常")


def test_sweep_is_deterministic_across_workers():
    grid = np.linspace(0.1, 0.4, 5)
    one = sweep(BASE, BiasMode("epsilon", 0.3), grid, "odd", 40, 4, workers=1, with_labels=False)
    many = sweep(BASE, BiasMode("epsilon", 0.3), grid, "odd", 40, 4, workers=4, with_labels=False)
    np.testing.assert_array_equal(one.levels, many.levels)


def test_track_levels_follows_crossing_lines():
    """两条直线交叉时分支沿直线走，不按排序序号"""
    grid = np.linspace(0.0, 1.0, 10)
    first, second = grid, 1.0 - grid
    levels = np.sort(np.stack([first, second], axis=1), axis=1)
    labels = np.where(first <= second, 1, -1)
    labels = np.stack([labels, -labels], axis=1)
    scan = SpectrumScan(BASE, BiasMode("ratio", 1.0), Sector.EVEN, 10, grid, levels, labels, 2)

    branches = track_levels(scan)
    followed = scan.levels[np.arange(10), branches[:, 0]]
    np.testing.assert_allclose(followed, first)
    assert np.all(scan.labels[np.arange(10), branches[:, 0]] == 1)


def test_crossings_reappear_at_integer_ratio():
    """ε/(2β) = 1 时有异宇称真交叉"""
    print("=== 交叉检测测试 ===")
    grid = np.linspace(0.05, 0.45, 80)
    scan = sweep(BASE, BiasMode("ratio", 1.0), grid, "even", 150, 6, workers=2)
    events = detect_crossings(scan)
    true_events = [e for e in events if e.is_true]
    assert true_events
    for event in true_events:
        assert event.min_gap < 1e-6
        assert event.labels[0] == -event.labels[1]
        assert event.to_dict()["kind"] == "true"
    print(f"✓ 真交叉 {len(true_events)} 个")


def test_crossings_absent_at_half_integer_ratio():
    grid = np.linspace(0.05, 0.45, 80)
    scan = sweep(BASE, BiasMode("ratio", 0.5), grid, "even", 150, 6, workers=2)
    events = detect_crossings(scan)
    assert not any(e.is_true for e in events)
    assert all(e.min_gap > 1e-3 for e in events)


def assert_labels_change_only_at_true_crossings(scan, events):
    """按序号看，某能级的标签只在包含它的真交叉附近改变"""
    grid = scan.g_grid
    last = len(grid) - 1
    true_events = [e for e in events if e.is_true]
    for level in range(scan.n_levels - 1):
        flips = np.nonzero(scan.labels[1:, level] != scan.labels[:-1, level])[0]
        for k in flips:
            if k == 0 or k + 1 == last:
                continue
            low, high = grid[k - 1], grid[min(k + 2, last)]
            assert any(level in e.level_pair and low <= e.g_star <= high for e in true_events), \
                (level, grid[k], grid[k + 1])


def test_crossing_phenomenology_integer_ratios():
    """ε/(2β) = 0, 1, 2 时随机 Δ 的扫描: 真交叉两侧宇称相反，标签只在真交叉处跳变"""
    print("=== 整数比例交叉测试 ===")
    rng = np.random.default_rng(2024)
    deltas = rng.uniform(1.0, 3.0, size=3)
    grid = np.linspace(0.05, 0.48, 60)
    for ratio in (0.0, 1.0, 2.0):
        n_true = 0
        for delta in deltas:
            base = ModelParams(float(delta), 0.0, 0.2)
            scan = sweep(base, BiasMode("ratio", ratio), grid, "even", 160, 6, workers=4)
            assert scan.labelled
            events = detect_crossings(scan)
            for event in events:
                if event.is_true:
                    assert event.min_gap < 1e-6
                    assert event.labels[0] == -event.labels[1]
                elif event.labels is not None:
                    assert event.labels[0] == event.labels[1]
            assert_labels_change_only_at_true_crossings(scan, events)
            n_true += sum(e.is_true for e in events)
        assert n_true >= 1, ratio
        print(f"✓ ε/(2β)={ratio:g}: 真交叉 {n_true} 个")


def test_levels_converged_under_cutoff_doubling():
    rng = np.random.default_rng(5)
    for ratio in (0.0, 1.0, 2.0):
        base = ModelParams(float(rng.uniform(1.0, 3.0)), 0.0, 0.2)
        for g in (0.1, 0.3, 0.45):
            small = evaluate_point(base, BiasMode("ratio", ratio), g, "even", 150, 6, with_labels=False)
            large = evaluate_point(base, BiasMode("ratio", ratio), g, "even", 300, 6, with_labels=False)
            assert np.abs(small.rescaled - large.rescaled).max() < 1e-9, (ratio, g)


def test_point_labels_at_degeneracy():
    point = evaluate_point(BASE, BiasMode("ratio", 2.0), 0.3, "odd", 80, 6)
    assert point.labels is not None
    assert set(point.labels.tolist()) <= {-1, 1}


if __name__ == "__main__":
    test_eigensolve_rejects_asymmetric()
    test_golden_section_search()
    test_bias_modes()
    test_validate_grid()
    test_sweep_labels()
    test_sweep_is_deterministic_across_workers()
    test_track_levels_follows_crossing_lines()
    test_crossings_reappear_at_integer_ratio()
    test_crossings_absent_at_half_integer_ratio()
    test_crossing_phenomenology_integer_ratios()
    test_levels_converged_under_cutoff_doubling()
    test_point_labels_at_degeneracy()
    print("\n全部通过")
