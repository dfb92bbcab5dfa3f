#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
测试截断Fock空间代数
"""

import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from core.fock_algebra import (
    BosonOp, DimensionMismatch, FockBasis, ModelParams, ParameterError, Sector,
    SectorViolation, TruncationError, annihilation, bogoliubov_coefficients,
    bogoliubov_pair, check_canonical, check_mixed_commutator, check_power_relations,
    check_su11, embed_sector, number_operator, project_sector, su11_generators,
    z4_diagonal, z4_phase,
)

PARAMS = ModelParams(delta=1.5, epsilon=0.0, g=0.3)


def test_model_params():
    """参数校验与导出量"""
    print("=== 模型参数测试 ===")
    assert PARAMS.beta == pytest.approx(0.8)
    biased = PARAMS.with_bias_ratio(1.0)
    assert biased.epsilon == pytest.approx(1.6)
    assert biased.n_bias == 1
    assert PARAMS.with_bias_ratio(0.5).n_bias is None
    assert PARAMS.n_bias == 0

    for bad in (dict(delta=1.0, epsilon=0.0, g=0.5),
                dict(delta=-1.0, epsilon=0.0, g=0.1),
                dict(delta=1.0, epsilon=float("nan"), g=0.1),
                dict(delta=1.0, epsilon=0.0, g=0.1, omega=0.0)):
        with pytest.raises(ParameterError):
            ModelParams(**bad)

    scaled = ModelParams(delta=3.0, epsilon=1.0, g=0.6, omega=2.0).in_cavity_units()
    assert (scaled.delta, scaled.epsilon, scaled.g, scaled.omega) == (1.5, 0.5, 0.3, 1.0)
    print("✓ 参数校验正常")


def test_sector_basis():
    """子空间基与窗口"""
    assert Sector.parse(" Odd ") is Sector.ODD
    with pytest.raises(ParameterError):
        Sector.parse("both")

    basis = FockBasis.for_sector("odd", 5)
    np.testing.assert_array_equal(basis.fock_indices(), [1, 3, 5, 7, 9])
    assert basis.full_cutoff == 10
    # Fock 指标 <= 10 - 2 - 2
    np.testing.assert_array_equal(basis.window(2), [0, 1, 2])
    with pytest.raises(TruncationError):
        basis.window(20)
    print("✓ 子空间基正常")


def test_ladder_operators():
    a = annihilation(6)
    assert a.matrix[0, 1] == pytest.approx(1.0)
    assert a.matrix[1, 2] == pytest.approx(np.sqrt(2.0))
    np.testing.assert_allclose(np.diag(number_operator(6).matrix), np.arange(6))
    assert check_canonical(a, a.dag()) < 1e-12
    assert not a.matrix.flags.writeable


def test_bogoliubov_modes():
    """a₊、a₋ 的对易关系"""
    print("=== Bogoliubov 模式测试 ===")
    u, v = bogoliubov_coefficients(PARAMS)
    assert u * u - v * v == pytest.approx(1.0)

    pair = bogoliubov_pair(PARAMS, 40)
    assert check_canonical(pair.a_plus, pair.a_plus.dag()) < 1e-12
    assert check_canonical(pair.a_minus, pair.a_minus.dag()) < 1e-12
    assert check_mixed_commutator(pair, PARAMS.beta) < 1e-10
    print("✓ [a₋, a₊†] = 1/β")


def test_su11_relations():
    pair = bogoliubov_pair(PARAMS, 40)
    for b in (annihilation(40), pair.a_plus, pair.a_minus):
        deviations = check_su11(su11_generators(b, b.dag()))
        assert set(deviations) == {"[K0,K+]=K+", "[K0,K-]=-K-", "[K-,K+]=2K0"}
        assert max(deviations.values()) < 1e-10, deviations

    lowering = su11_generators(pair.a_minus, pair.a_minus.dag())
    raising = su11_generators(pair.a_plus, pair.a_plus.dag())
    for n in (1, 2, 3, 4):
        assert max(check_power_relations(lowering, raising, n).values()) < 1e-10


def test_sector_projection():
    """宇称保持算符可以投影，a 不行"""
    even = project_sector(number_operator(10), Sector.EVEN)
    np.testing.assert_allclose(np.diag(even.matrix), [0, 2, 4, 6, 8])
    assert even.basis == FockBasis.for_sector("even", 5)

    with pytest.raises(SectorViolation):
        project_sector(annihilation(10), "even")

    back = embed_sector(even)
    np.testing.assert_allclose(np.diag(back.matrix), [0, 0, 2, 0, 4, 0, 6, 0, 8, 0])


def test_z4_phase():
    basis = FockBasis.for_sector("odd", 4)
    np.testing.assert_array_equal(z4_diagonal(basis), [1, -1, 1, -1])
    op, phase = z4_phase("odd", 4)
    assert phase == 1
    assert z4_phase("even", 4)[1] == 0
    np.testing.assert_array_equal(np.diag(op.matrix), [1, -1, 1, -1])
    with pytest.raises(DimensionMismatch):
        z4_diagonal(FockBasis.full(4))


def test_operator_basis_mismatch():
    with pytest.raises(DimensionMismatch):
        annihilation(4) + annihilation(5)
    with pytest.raises(DimensionMismatch):
        BosonOp(FockBasis.full(3), np.eye(4))


if __name__ == "__main__":
    test_model_params()
    test_sector_basis()
    test_ladder_operators()
    test_bogoliubov_modes()
    test_su11_relations()
    test_sector_projection()
    test_z4_phase()
    test_operator_basis_mismatch()
    print("\n全部通过")
