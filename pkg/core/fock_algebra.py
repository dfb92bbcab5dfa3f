#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
截断Fock空间算符代数
升降算符、Z2宇称子空间投影、Bogoliubov模式、su(1,1)生成元和Z4相位算符
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, NamedTuple, Optional, Tuple, Union

import numpy as np

# 宇称保持算符的跨子空间元素阈值
CROSS_SECTOR_TOL = 1e-14
# 判断 ε/(2β) 是否为整数的容差
BIAS_INTEGER_TOL = 1e-9


class RabiSymmetryError(Exception):
    """本工具包所有异常的基类"""


class ParameterError(RabiSymmetryError, ValueError):
    """物理参数不合法"""


class SectorViolation(RabiSymmetryError):
    """算符在偶/奇Fock态之间有非零矩阵元"""


class DimensionMismatch(RabiSymmetryError, ValueError):
    """算符的基或维数不一致"""


class TruncationError(RabiSymmetryError, ValueError):
    """截断过小，无法给出可信的窗口"""


class Sector(Enum):
    """Z2 宇称子空间: 偶Fock态 (q=1/4) 或奇Fock态 (q=3/4)"""
    EVEN = "even"
    ODD = "odd"

    @property
    def offset(self) -> int:
        return 0 if self is Sector.EVEN else 1

    @property
    def q(self) -> float:
        return 0.25 if self is Sector.EVEN else 0.75

    @property
    def global_phase(self) -> int:
        """e^{iπa†a/2} 在该子空间上提出的整体相位 i^p 的 p"""
        return self.offset

    @classmethod
    def parse(cls, value: Union["Sector", str]) -> "Sector":
        if isinstance(value, Sector):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ParameterError(f"未知的子空间: {value!r} (可选 even / odd)") from None


@dataclass(frozen=True)
class ModelParams:
    """模型参数 (Δ, ε, g, ω)，β 与 N 由它们导出"""
    delta: float
    epsilon: float
    g: float
    omega: float = 1.0

    def __post_init__(self):
        for name in ("delta", "epsilon", "g", "omega"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"参数 {name} 必须是有限实数: {value}")
            object.__setattr__(self, name, value)
        if self.omega <= 0.0:
            raise ParameterError(f"腔频率 ω 必须为正: {self.omega}")
        if self.delta < 0.0:
            raise ParameterError(f"Δ 不能为负: {self.delta}")
        # g = ω/2 是谱坍缩点，β 在那里为零
        if not 0.0 <= self.g < 0.5 * self.omega:
            raise ParameterError(f"耦合强度需满足 0 <= g < ω/2: g={self.g}, ω={self.omega}")

    @property
    def beta(self) -> float:
        """重整化频率 β = sqrt(1 - 4g²)，以 ω 为单位"""
        ratio = self.g / self.omega
        return math.sqrt(1.0 - 4.0 * ratio * ratio)

    @property
    def bias_ratio(self) -> float:
        """ε / (2β)，ε 与 β 同以 ω 为单位"""
        return self.epsilon / (2.0 * self.omega * self.beta)

    @property
    def n_bias(self) -> Optional[int]:
        """ε 恰为 β 的偶数倍时返回 N，否则返回 None"""
        ratio = self.bias_ratio
        nearest = round(ratio)
        if nearest < 0:
            return None
        if abs(ratio - nearest) <= BIAS_INTEGER_TOL * max(1.0, abs(ratio)):
            return int(nearest)
        return None

    def require_coupling(self):
        if self.g <= 0.0:
            raise ParameterError(f"对称算符要求 g > 0: g={self.g}")

    def require_unit_frequency(self):
        if self.omega != 1.0:
            raise ParameterError(f"变换表象要求 ω = 1，请先调用 in_cavity_units(): ω={self.omega}")

    def with_coupling(self, g: float) -> "ModelParams":
        return ModelParams(self.delta, self.epsilon, g, self.omega)

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return ModelParams(self.delta, epsilon, self.g, self.omega)

    def with_bias_ratio(self, ratio: float) -> "ModelParams":
        """固定 ε/(2β)，按当前 g 重新计算 ε"""
        return self.with_epsilon(2.0 * ratio * self.omega * self.beta)

    def in_cavity_units(self) -> "ModelParams":
        """所有能量除以 ω"""
        w = self.omega
        return ModelParams(self.delta / w, self.epsilon / w, self.g / w, 1.0)

    def to_dict(self) -> Dict[str, float]:
        return {
            "delta": self.delta,
            "epsilon": self.epsilon,
            "g": self.g,
            "omega": self.omega,
            "beta": self.beta,
        }


@dataclass(frozen=True)
class FockBasis:
    """
    截断玻色基

    sector 为 None 时是完整基 {0..cutoff-1}；否则只保留该宇称的 cutoff 个态，
    full_cutoff 记录它嵌入的完整Fock空间维数。
    """
    cutoff: int
    sector: Optional[Sector] = None
    full_cutoff: int = 0

    def __post_init__(self):
        if self.cutoff < 1:
            raise ParameterError(f"截断必须为正: {self.cutoff}")
        if self.full_cutoff == 0:
            full = self.cutoff if self.sector is None else 2 * self.cutoff
            object.__setattr__(self, "full_cutoff", full)

    @classmethod
    def full(cls, cutoff: int) -> "FockBasis":
        return cls(cutoff)

    @classmethod
    def for_sector(cls, sector: Union[Sector, str], cutoff: int) -> "FockBasis":
        """cutoff 个子空间态，嵌入 2*cutoff 维完整空间"""
        return cls(cutoff, Sector.parse(sector))

    @property
    def dim(self) -> int:
        return self.cutoff

    def fock_index(self, k: int) -> int:
        if self.sector is None:
            return k
        return 2 * k + self.sector.offset

    def fock_indices(self) -> np.ndarray:
        k = np.arange(self.cutoff)
        if self.sector is None:
            return k
        return 2 * k + self.sector.offset

    def window(self, order: int) -> np.ndarray:
        """阶数为 order 的恒等式可信的行: Fock 指标 <= full_cutoff - order - 2"""
        limit = self.full_cutoff - order - 2
        rows = np.nonzero(self.fock_indices() <= limit)[0]
        if rows.size == 0:
            raise TruncationError(f"截断 {self.full_cutoff} 对阶数 {order} 的窗口为空")
        return rows


@dataclass(frozen=True, eq=False)
class BosonOp:
    """某个Fock基上的稠密实矩阵"""
    basis: FockBasis
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.array(self.matrix, dtype=float)
        n = self.basis.dim
        if matrix.shape != (n, n):
            raise DimensionMismatch(f"矩阵形状 {matrix.shape} 与基维数 {n} 不符")
        matrix.setflags(write=False)
        object.__setattr__(self, "matrix", matrix)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def _check(self, other: "BosonOp"):
        if not isinstance(other, BosonOp):
            raise TypeError(f"不支持的操作数类型: {type(other).__name__}")
        if other.basis != self.basis:
            raise DimensionMismatch(f"基不一致: {self.basis} / {other.basis}")

    def dag(self) -> "BosonOp":
        """实表示下伴随即转置"""
        return BosonOp(self.basis, self.matrix.T)

    def __matmul__(self, other):
        if isinstance(other, np.ndarray):
            return self.matrix @ other
        self._check(other)
        return BosonOp(self.basis, self.matrix @ other.matrix)

    def __add__(self, other: "BosonOp") -> "BosonOp":
        self._check(other)
        return BosonOp(self.basis, self.matrix + other.matrix)

    def __sub__(self, other: "BosonOp") -> "BosonOp":
        self._check(other)
        return BosonOp(self.basis, self.matrix - other.matrix)

    def __neg__(self) -> "BosonOp":
        return BosonOp(self.basis, -self.matrix)

    def __mul__(self, scalar: float) -> "BosonOp":
        return BosonOp(self.basis, float(scalar) * self.matrix)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "BosonOp":
        return BosonOp(self.basis, self.matrix / float(scalar))

    def shifted(self, scalar: float) -> "BosonOp":
        """加上 scalar 倍单位算符"""
        return BosonOp(self.basis, self.matrix + float(scalar) * np.eye(self.dim))

    def power(self, k: int) -> "BosonOp":
        return BosonOp(self.basis, np.linalg.matrix_power(self.matrix, k))

    def commutator(self, other: "BosonOp") -> "BosonOp":
        self._check(other)
        return BosonOp(self.basis, self.matrix @ other.matrix - other.matrix @ self.matrix)


@dataclass(frozen=True, eq=False)
class BlockOp:
    """量子比特 2x2 分块排列的玻色算符 (σ_z 本征基)"""
    blocks: Tuple[Tuple[BosonOp, BosonOp], Tuple[BosonOp, BosonOp]]

    def __post_init__(self):
        basis = self.blocks[0][0].basis
        for row in self.blocks:
            for block in row:
                if block.basis != basis:
                    raise DimensionMismatch("四个分块必须共享同一个基")

    @classmethod
    def from_blocks(cls, upper_left: BosonOp, upper_right: BosonOp,
                    lower_left: BosonOp, lower_right: BosonOp) -> "BlockOp":
        return cls(((upper_left, upper_right), (lower_left, lower_right)))

    @classmethod
    def from_dense(cls, matrix: np.ndarray, basis: FockBasis) -> "BlockOp":
        n = basis.dim
        if matrix.shape != (2 * n, 2 * n):
            raise DimensionMismatch(f"矩阵形状 {matrix.shape} 与 2x{n} 不符")
        return cls.from_blocks(
            BosonOp(basis, matrix[:n, :n]), BosonOp(basis, matrix[:n, n:]),
            BosonOp(basis, matrix[n:, :n]), BosonOp(basis, matrix[n:, n:]),
        )

    @property
    def basis(self) -> FockBasis:
        return self.blocks[0][0].basis

    @property
    def dim(self) -> int:
        return 2 * self.basis.dim

    def block(self, row: int, col: int) -> BosonOp:
        return self.blocks[row][col]

    def to_dense(self) -> np.ndarray:
        (a, b), (c, d) = self.blocks
        return np.block([[a.matrix, b.matrix], [c.matrix, d.matrix]])

    def transpose(self) -> "BlockOp":
        (a, b), (c, d) = self.blocks
        return BlockOp.from_blocks(a.dag(), c.dag(), b.dag(), d.dag())

    def swap_diagonal(self) -> "BlockOp":
        (a, b), (c, d) = self.blocks
        return BlockOp.from_blocks(d, b, c, a)

    def __matmul__(self, other: "BlockOp") -> "BlockOp":
        if other.basis != self.basis:
            raise DimensionMismatch("分块算符的基不一致")
        return BlockOp.from_dense(self.to_dense() @ other.to_dense(), self.basis)

    def __add__(self, other: "BlockOp") -> "BlockOp":
        return BlockOp.from_dense(self.to_dense() + other.to_dense(), self.basis)

    def __sub__(self, other: "BlockOp") -> "BlockOp":
        return BlockOp.from_dense(self.to_dense() - other.to_dense(), self.basis)

    def __mul__(self, scalar: float) -> "BlockOp":
        return BlockOp.from_dense(float(scalar) * self.to_dense(), self.basis)

    __rmul__ = __mul__

    def left_boson(self, diag: np.ndarray) -> "BlockOp":
        """每个分块左乘同一个玻色对角矩阵"""
        return BlockOp.from_dense(np.tile(diag, 2)[:, None] * self.to_dense(), self.basis)

    def conjugate_boson(self, diag: np.ndarray) -> "BlockOp":
        """D X D，D 为玻色部分的对角矩阵"""
        d = np.tile(diag, 2)
        return BlockOp.from_dense(d[:, None] * self.to_dense() * d[None, :], self.basis)

    def window(self, order: int) -> np.ndarray:
        """两个量子比特分块中窗口行的位置"""
        rows = self.basis.window(order)
        return np.concatenate([rows, rows + self.basis.dim])

    def asymmetry(self) -> float:
        dense = self.to_dense()
        return float(np.max(np.abs(dense - dense.T)))


class BogoliubovPair(NamedTuple):
    a_plus: BosonOp
    a_minus: BosonOp


class Su11Generators(NamedTuple):
    k0: BosonOp
    k_plus: BosonOp
    k_minus: BosonOp


def identity(basis: FockBasis) -> BosonOp:
    return BosonOp(basis, np.eye(basis.dim))


def annihilation(cutoff: int) -> BosonOp:
    """完整基 {0..cutoff-1} 上的 a，最高态直接截断"""
    if cutoff < 2:
        raise ParameterError(f"截断至少为 2: {cutoff}")
    matrix = np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1)
    return BosonOp(FockBasis.full(cutoff), matrix)


def creation(cutoff: int) -> BosonOp:
    return annihilation(cutoff).dag()


def number_operator(cutoff: int) -> BosonOp:
    return BosonOp(FockBasis.full(cutoff), np.diag(np.arange(cutoff, dtype=float)))


def bogoliubov_coefficients(params: ModelParams) -> Tuple[float, float]:
    """u = sqrt((1+β)/(2β))，v = sqrt((1-β)/(2β))"""
    beta = params.beta
    if beta <= 0.0:
        raise ParameterError(f"β 必须为正 (g < 1/2): g={params.g}")
    u = math.sqrt((1.0 + beta) / (2.0 * beta))
    v = math.sqrt((1.0 - beta) / (2.0 * beta))
    return u, v


def bogoliubov_pair(params: ModelParams, cutoff: int) -> BogoliubovPair:
    """a₊ = u a + v a†，a₋ = u a - v a†，伴随由转置得到"""
    u, v = bogoliubov_coefficients(params)
    a = annihilation(cutoff)
    a_dag = a.dag()
    return BogoliubovPair(u * a + v * a_dag, u * a - v * a_dag)


def su11_generators(b: BosonOp, b_dag: BosonOp) -> Su11Generators:
    """K₀ = (b†b + 1/2)/2，K₊ = b†²/2，K₋ = b²/2"""
    if b.basis != b_dag.basis:
        raise DimensionMismatch("b 与 b† 必须在同一个基上")
    k0 = 0.5 * (b_dag @ b).shifted(0.5)
    return Su11Generators(k0, 0.5 * (b_dag @ b_dag), 0.5 * (b @ b))


def _cross_sector_mask(basis: FockBasis) -> np.ndarray:
    idx = basis.fock_indices()
    return (idx[:, None] - idx[None, :]) % 2 == 1


def project_sector(op: BosonOp, sector: Union[Sector, str]) -> BosonOp:
    """把完整基上的宇称保持算符限制到一个子空间"""
    sector = Sector.parse(sector)
    if op.basis.sector is not None:
        raise DimensionMismatch("只能投影完整Fock基上的算符")
    leak = np.abs(op.matrix[_cross_sector_mask(op.basis)])
    if leak.size and leak.max() > CROSS_SECTOR_TOL:
        raise SectorViolation(f"跨子空间矩阵元 {leak.max():.3e} 超过阈值 {CROSS_SECTOR_TOL:g}")
    keep = np.arange(sector.offset, op.dim, 2)
    basis = FockBasis(len(keep), sector, op.dim)
    return BosonOp(basis, op.matrix[np.ix_(keep, keep)])


def embed_sector(op: BosonOp) -> BosonOp:
    """project_sector 的逆: 子空间算符放回完整基，其余元素为零"""
    basis = op.basis
    if basis.sector is None:
        return op
    full = np.zeros((basis.full_cutoff, basis.full_cutoff))
    idx = basis.fock_indices()
    full[np.ix_(idx, idx)] = op.matrix
    return BosonOp(FockBasis.full(basis.full_cutoff), full)


def embed_vectors(vectors: np.ndarray, basis: FockBasis) -> np.ndarray:
    """子空间向量 (按列) 补零到完整Fock空间"""
    full = np.zeros((basis.full_cutoff,) + vectors.shape[1:])
    full[basis.fock_indices()] = vectors
    return full


def restrict_vectors(vectors: np.ndarray, basis: FockBasis) -> np.ndarray:
    return vectors[basis.fock_indices()]


def z4_diagonal(basis: FockBasis) -> np.ndarray:
    """e^{iπa†a/2} 去掉整体相位后的实对角元 (-1)^k"""
    if basis.sector is None:
        raise DimensionMismatch("Z4 相位只在单个子空间上是实对角的")
    k = np.arange(basis.dim)
    return np.where(k % 2 == 0, 1.0, -1.0)


def z4_phase(sector: Union[Sector, str], cutoff: int) -> Tuple[BosonOp, int]:
    """子空间上的 e^{iπa†a/2}: 实对角 (-1)^k 以及整体相位 i^p 的 p"""
    basis = FockBasis.for_sector(sector, cutoff)
    return BosonOp(basis, np.diag(z4_diagonal(basis))), basis.sector.global_phase


# ---- 截断窗口上的代数关系检查 ----

def window_deviation(lhs: BosonOp, rhs: BosonOp, order: int) -> float:
    """窗口行上 max|lhs - rhs|，除以 rhs 窗口最大元 (至少为 1)"""
    rows = lhs.basis.window(order)
    diff = np.abs(lhs.matrix[rows] - rhs.matrix[rows]).max()
    scale = max(1.0, float(np.abs(rhs.matrix[rows]).max()))
    return float(diff / scale)


def check_canonical(b: BosonOp, b_dag: BosonOp) -> float:
    return window_deviation(b.commutator(b_dag), identity(b.basis), order=2)


def check_mixed_commutator(pair: BogoliubovPair, beta: float) -> float:
    """[a₋, a₊†] = 1/β"""
    lhs = pair.a_minus.commutator(pair.a_plus.dag())
    return window_deviation(lhs, identity(lhs.basis) * (1.0 / beta), order=2)


def check_su11(gens: Su11Generators) -> Dict[str, float]:
    k0, kp, km = gens
    return {
        "[K0,K+]=K+": window_deviation(k0.commutator(kp), kp, order=4),
        "[K0,K-]=-K-": window_deviation(k0.commutator(km), -km, order=4),
        "[K-,K+]=2K0": window_deviation(km.commutator(kp), 2.0 * k0, order=4),
    }


def check_power_relations(lowering: Su11Generators, raising: Su11Generators,
                          n: int) -> Dict[str, float]:
    """[(K₋^{a₋})^N, K₀^{a₋}] = N(K₋^{a₋})^N 与 [K₀^{a₊}, (-K₊^{a₊})^N] = N(-K₊^{a₊})^N"""
    km_n = lowering.k_minus.power(n)
    kp_n = (-raising.k_plus).power(n)
    order = 2 * n + 2
    return {
        f"[(K-)^{n},K0]": window_deviation(km_n.commutator(lowering.k0), n * km_n, order),
        f"[K0,(-K+)^{n}]": window_deviation(raising.k0.commutator(kp_n), n * kp_n, order),
    }
