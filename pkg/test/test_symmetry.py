#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试对称算符: 系数递推、闭式解、零空间对照、对易关系与 J² 多项式
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.fock_algebra import ModelParams, ParameterError, TruncationError
from core.symmetry import (
    CoeffTable, EmptyNullspace, NoSolution, SymmetryOperator, UnsupportedBias,
    analytic_j1_poly, build_symmetry, closed_form_coeffs, commutator_residual,
    element_residuals, fit_state_count, intertwining_map, intertwining_residual, jsquare_poly,
    min_cutoff, nullspace_symmetry, parity_operator, solve_recurrence,
)


def biased(n_bias, delta=1.0, g=0.3):
    return ModelParams(delta, 0.0, g).with_bias_ratio(n_bias)


def random_params(rng, n_bias):
    return biased(n_bias, delta=rng.uniform(0.2, 3.0), g=rng.uniform(0.05, 0.45))


def test_closed_form_agreement():
    """递推解与 N = 0..3 的闭式解逐项一致"""
    print("=== 闭式解对照测试 ===")
    rng = np.random.default_rng(7)
    for n_bias in range(4):
        worst = 0.0
        for _ in range(20):
            params = random_params(rng, n_bias)
            table = solve_recurrence(n_bias, params)
            closed = closed_form_coeffs(n_bias, params)
            worst = max(worst, table.max_relative_difference(closed))
            assert table.gauge_dim == 1
            assert table.residual < 1e-8
        assert worst <= 1e-10, (n_bias, worst)
        print(f"✓ N={n_bias}: 最大相对误差 {worst:.2e}")


def test_hermiticity_and_top_tier():
    for n_bias in range(1, 5):
        table = solve_recurrence(n_bias, biased(n_bias, delta=2.3, g=0.2))
        assert table.hermiticity_error() < 1e-12
        assert max(abs(v) for v in table.top_tier().values()) < 1e-10
        assert table.get("B", 0, 2 * n_bias) == pytest.approx(1.0)


def test_non_integer_bias_has_no_solution():
    params = biased(0.5)
    with pytest.raises(NoSolution) as info:
        solve_recurrence(1, params, ratio=0.5)
    assert info.value.residual > 1e-8
    with pytest.raises(EmptyNullspace):
        nullspace_symmetry(1, params, "even")
    with pytest.raises(EmptyNullspace):
        nullspace_symmetry(2, biased(1.5), "odd")


def test_recurrence_solution_in_kernel():
    """递推解向量落在 intertwining_map 的零空间里"""
    for n_bias in (1, 2, 3):
        params = biased(n_bias, delta=1.7, g=0.27)
        table = solve_recurrence(n_bias, params)
        for sector in ("even", "odd"):
            mapping, keys = intertwining_map(n_bias, params, sector, min_cutoff(n_bias) + 4)
            x = np.array([table.get(*key) for key in keys])
            image = mapping @ x
            assert np.abs(image).max() <= 1e-10 * np.abs(mapping).max() * np.abs(x).max(), (n_bias, sector)


def test_nullspace_oracle():
    """零空间解与递推解一致"""
    print("=== 零空间对照测试 ===")
    for n_bias in (1, 2, 3):
        params = biased(n_bias, delta=1.7, g=0.27)
        table = solve_recurrence(n_bias, params)
        for sector in ("even", "odd"):
            for cutoff in (None, min_cutoff(n_bias) + 16):
                oracle = nullspace_symmetry(n_bias, params, sector, cutoff)
                diff = oracle.max_relative_difference(table)
                assert diff <= 1e-8, (n_bias, sector, cutoff, diff)
        print(f"✓ N={n_bias}: 差异 {diff:.2e}")


def test_argument_errors():
    with pytest.raises(UnsupportedBias):
        closed_form_coeffs(4, biased(4))
    with pytest.raises(ParameterError):
        solve_recurrence(1, ModelParams(1.0, 0.0, 0.0))
    with pytest.raises(TruncationError):
        build_symmetry(biased(2), "even", min_cutoff(2) - 1)


def test_parity_recovery():
    """N = 0 时 J 就是 Z4 宇称，实表示下 R² = I"""
    bundle = build_symmetry(ModelParams(1.3, 0.0, 0.2), "even", 40)
    r = bundle.j.real.to_dense()
    assert np.abs(r @ r - np.eye(80)).max() <= 1e-12
    assert bundle.j.global_phase == 0
    assert build_symmetry(ModelParams(1.3, 0.0, 0.2), "odd", 40).j.global_phase == 1


def test_intertwining_and_commutator():
    """QH₀ = H̃Q 与 [J, H₀] = 0 在截断窗口上成立 (N = 0..3，两个子空间，5 组随机参数)"""
    print("=== 对易关系测试 ===")
    rng = np.random.default_rng(11)
    for n_bias in range(4):
        for _ in range(5):
            params = random_params(rng, n_bias)
            for sector in ("even", "odd"):
                cutoff = min_cutoff(n_bias) + 8
                bundle = build_symmetry(params, sector, cutoff)
                assert intertwining_residual(bundle.q, bundle.hamiltonians, n_bias) <= 1e-9
                assert max(element_residuals(bundle.q, bundle.hamiltonians, n_bias).values()) <= 1e-9
                assert commutator_residual(bundle.j, bundle.hamiltonians.h0, n_bias) <= 1e-9
                assert bundle.j.hermiticity_error(2 * n_bias + 2) <= 1e-10
        print(f"✓ N={n_bias}")


def test_wrong_coefficients_break_commutation():
    params = biased(1, delta=2.1, g=0.33)
    table = solve_recurrence(1, params)
    entries = dict(table.entries)
    entries[("A", 0, 0)] *= 1.5
    broken = CoeffTable(1, entries, params)
    bundle = build_symmetry(params, "even", 20, broken)
    assert commutator_residual(bundle.j, bundle.hamiltonians.h0, 1) > 1e-6


def test_operator_matches_dense_assembly():
    """SymmetryOperator 与稠密 R 的作用一致"""
    params = biased(2, delta=1.4, g=0.22)
    bundle = build_symmetry(params, "odd", 30)
    operator = SymmetryOperator(bundle.table, params, "odd", 30)
    vectors = np.random.default_rng(3).normal(size=(60, 5))
    expected = bundle.j.real.to_dense() @ vectors
    np.testing.assert_allclose(operator.apply_real(vectors), expected,
                               atol=1e-10 * np.abs(expected).max())


def fit_jsquare(params, n_bias, degree, cutoff, sector="even"):
    bundle = build_symmetry(params, sector, cutoff)
    states = fit_state_count(params, sector, cutoff, degree)
    return jsquare_poly(bundle.j, bundle.hamiltonians.h0, degree, states, n_bias)


def test_jsquare_analytic_n1():
    """N = 1 的 J†J 多项式与解析系数的绝对误差 <= 1e-8"""
    print("=== J² 多项式测试 ===")
    rng = np.random.default_rng(17)
    points = [(1.0, 0.3), (1.8, 0.3)]
    points += [(rng.uniform(1.0, 3.0), rng.uniform(0.1, 0.4)) for _ in range(5)]
    for delta, g in points:
        params = biased(1, delta=delta, g=g)
        poly = fit_jsquare(params, 1, 2, 150)
        assert poly.degree == 2
        assert poly.residual < 1e-8
        assert poly.offdiag < 1e-8
        np.testing.assert_allclose(poly.coeffs, analytic_j1_poly(params), rtol=0.0, atol=1e-8)
        print(f"✓ Δ={delta:.3f}, g={g:.3f}: 拟合系数 {poly.coeffs}")


def test_jsquare_degree_emerges():
    """N = 2, 3 时 2N 次多项式精确，2N-1 次不够"""
    for n_bias, delta, g, cutoff in ((2, 1.2, 0.25, 120), (3, 1.2, 0.2, 200)):
        params = biased(n_bias, delta=delta, g=g)
        bundle = build_symmetry(params, "even", cutoff)
        h0 = bundle.hamiltonians.h0
        states = fit_state_count(params, "even", cutoff, 2 * n_bias)
        exact = jsquare_poly(bundle.j, h0, 2 * n_bias, states, n_bias)
        lower = jsquare_poly(bundle.j, h0, 2 * n_bias - 1, states, n_bias)
        assert exact.residual < 1e-8, (n_bias, exact.residual)
        assert lower.residual > 1e-3, (n_bias, lower.residual)


def test_parity_labels():
    """宇称标签取 ±1，重标度后 |Π| = 1"""
    params = biased(1, delta=2.0, g=0.3)
    bundle = build_symmetry(params, "even", 120)
    h0 = bundle.hamiltonians.h0
    states = fit_state_count(params, "even", 120, 2)
    poly = jsquare_poly(bundle.j, h0, 2, states, 1)
    labels = parity_operator(bundle.j, h0, poly, states)
    assert set(np.unique(labels.labels)) <= {-1, 1}
    assert (labels.labels > 0).any() and (labels.labels < 0).any()
    np.testing.assert_allclose(np.abs(labels.rescaled(poly)), 1.0, atol=1e-7)


if __name__ == "__main__":
    test_closed_form_agreement()
    test_hermiticity_and_top_tier()
    test_non_integer_bias_has_no_solution()
    test_recurrence_solution_in_kernel()
    test_nullspace_oracle()
    test_argument_errors()
    test_parity_recovery()
    test_intertwining_and_commutator()
    test_wrong_coefficients_break_commutation()
    test_operator_matches_dense_assembly()
    test_jsquare_analytic_n1()
    test_jsquare_degree_emerges()
    test_parity_labels()
    print("\n全部通过")
