#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
双光子Rabi模型哈密顿量
实验室表象 H_tp、变换表象 H₀ 以及伙伴哈密顿量 H̃ 的构造
"""

from dataclasses import dataclass
from typing import Dict, Optional, Tuple, Union

import numpy as np

from core.fock_algebra import (
    BlockOp, BosonOp, FockBasis, ModelParams, Sector,
    annihilation, bogoliubov_pair, identity, number_operator,
    project_sector, su11_generators, window_deviation, z4_diagonal,
)

# exp(iπσ_y/4) = (I + iσ_y)/√2，实矩阵
QUBIT_ROTATION = np.array([[1.0, 1.0], [-1.0, 1.0]]) / np.sqrt(2.0)


@dataclass(frozen=True, eq=False)
class HamiltonianSet:
    """一个子空间上的 H₀ 与 H̃"""
    h0: BlockOp
    h_tilde: BlockOp
    sector: Sector
    params: ModelParams
    cutoff: int
    lie_form_error: Optional[Dict[str, float]] = None

    @property
    def basis(self) -> FockBasis:
        return self.h0.basis


def _quadratic_parts(full_cutoff: int) -> Tuple[BosonOp, BosonOp]:
    """完整空间上的 a†a 与 a†² + a²，二者都是截断精确的"""
    a = annihilation(full_cutoff)
    a_dag = a.dag()
    return number_operator(full_cutoff), a_dag @ a_dag + a @ a


def _restrict(ops, sector: Optional[Sector]):
    if sector is None:
        return list(ops)
    return [project_sector(op, sector) for op in ops]


def build_lab_hamiltonian(params: ModelParams, cutoff: int,
                          sector: Union[Sector, str, None] = None) -> BlockOp:
    """
    实验室表象 H_tp = Δ/2 σ_z + ε/2 σ_x + ω a†a + g(a†² + a²)σ_x

    sector 为 None 时 cutoff 是完整Fock维数；否则是子空间态数，
    在 2*cutoff 维完整空间中构造后再投影。
    """
    sector = None if sector is None else Sector.parse(sector)
    full_cutoff = cutoff if sector is None else 2 * cutoff
    number, squeeze = _quadratic_parts(full_cutoff)
    one = identity(number.basis)
    coupling = params.g * squeeze + (0.5 * params.epsilon) * one
    upper = (params.omega * number).shifted(0.5 * params.delta)
    lower = (params.omega * number).shifted(-0.5 * params.delta)
    upper, coupling, lower = _restrict((upper, coupling, lower), sector)
    return BlockOp.from_blocks(upper, coupling, coupling, lower)


def rotate_to_transformed_frame(lab: BlockOp) -> BlockOp:
    """量子比特旋转 exp(iπσ_y/4) H exp(-iπσ_y/4)，只作用在比特指标上"""
    u = np.kron(QUBIT_ROTATION, np.eye(lab.basis.dim))
    return BlockOp.from_dense(u @ lab.to_dense() @ u.T, lab.basis)


def _transformed_blocks(params: ModelParams, sector: Sector, cutoff: int,
                        sign: float) -> BlockOp:
    # sign = +1 给出 H₀，sign = -1 给出 H̃ (对角块中 g 项反号)
    params.require_unit_frequency()
    number, squeeze = _quadratic_parts(2 * cutoff)
    one = identity(number.basis)
    upper = (number + (sign * params.g) * squeeze).shifted(0.5 * params.epsilon)
    lower = (number - (sign * params.g) * squeeze).shifted(-0.5 * params.epsilon)
    off = (-0.5 * params.delta) * one
    upper, lower, off = _restrict((upper, lower, off), sector)
    return BlockOp.from_blocks(upper, off, off, lower)


def lie_form_errors(h0: BlockOp, params: ModelParams) -> Dict[str, float]:
    """
    对角块与 su(1,1) 形式的比较

    H₁₁ = 2βK₀^{a₊} - 1/2 + ε/2，H₂₂ = 2βK₀^{a₋} - 1/2 - ε/2，
    在截断窗口上逐元比较。
    """
    basis = h0.basis
    beta = params.beta
    pair = bogoliubov_pair(params, basis.full_cutoff)
    k0_plus = su11_generators(pair.a_plus, pair.a_plus.dag()).k0
    k0_minus = su11_generators(pair.a_minus, pair.a_minus.dag()).k0
    upper = (2.0 * beta * project_sector(k0_plus, basis.sector)).shifted(-0.5 + 0.5 * params.epsilon)
    lower = (2.0 * beta * project_sector(k0_minus, basis.sector)).shifted(-0.5 - 0.5 * params.epsilon)
    return {
        "H11": window_deviation(h0.block(0, 0), upper, order=2),
        "H22": window_deviation(h0.block(1, 1), lower, order=2),
    }


def build_h0(params: ModelParams, sector: Union[Sector, str], cutoff: int,
             check_lie_form: bool = True) -> HamiltonianSet:
    """变换表象 (ω = 1) 的 H₀ 及其伙伴 H̃ = Z H₀ Z"""
    sector = Sector.parse(sector)
    h0 = _transformed_blocks(params, sector, cutoff, sign=1.0)
    # Z = (-1)^k 实现 e^{iπa†a/2} a e^{-iπa†a/2} = -ia 在实表示中的作用
    h_tilde = h0.conjugate_boson(z4_diagonal(h0.basis))
    errors = lie_form_errors(h0, params) if check_lie_form else None
    return HamiltonianSet(h0, h_tilde, sector, params, cutoff, errors)


def build_h_tilde(params: ModelParams, sector: Union[Sector, str], cutoff: int) -> BlockOp:
    """H̃: 上块 2βK₀^{a₋} - 1/2 + ε/2，下块 2βK₀^{a₊} - 1/2 - ε/2，非对角 -Δ/2"""
    return _transformed_blocks(params, Sector.parse(sector), cutoff, sign=-1.0)


def build_lab_parity(sector: Union[Sector, str], cutoff: int) -> Tuple[BlockOp, int]:
    """
    对称模型 (ε = 0) 的 Z4 宇称 P̂ = e^{iπa†a/2}σ_z

    返回实部 Z⊗σ_z 与整体相位 i^p 的 p。
    """
    basis = FockBasis.for_sector(sector, cutoff)
    z = BosonOp(basis, np.diag(z4_diagonal(basis)))
    zero = BosonOp(basis, np.zeros((basis.dim, basis.dim)))
    return BlockOp.from_blocks(z, zero, zero, -z), basis.sector.global_phase
