#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
隐藏对称算符 J_N
在偏置 ε = 2Nβ 处求解系数递推、组装 Q 与 J = e^{iπa†a/2}Q，
提取 J² 多项式并给出重标度宇称标签
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.linalg
from numpy.polynomial import Chebyshev, Polynomial
from numpy.polynomial import polynomial as P

from core.fock_algebra import (
    BlockOp, BosonOp, FockBasis, ModelParams, RabiSymmetryError, Sector, TruncationError,
    bogoliubov_pair, embed_vectors, identity, project_sector, restrict_vectors, z4_diagonal,
)
from core.model import HamiltonianSet, build_h0

ELEMENTS = ("A", "B", "C", "D")
ELEMENT_BLOCK = {"A": (0, 0), "B": (0, 1), "C": (1, 0), "D": (1, 1)}
MAX_CLOSED_FORM = 3

NO_SOLUTION_TOL = 1e-8
GAUGE_RTOL = 1e-10
NULLSPACE_TOL = 1e-8
NOISE_ROW_RTOL = 1e-12
DEGENERACY_TOL = 1e-8
CONVERGENCE_TOL = 1e-9
VANDERMONDE_COND_LIMIT = 1e10
CHEBYSHEV_COND_LIMIT = 1e13

CoeffKey = Tuple[str, int, int]


class SymmetryError(RabiSymmetryError):
    """对称算符相关错误的基类"""


class UnsupportedBias(SymmetryError):
    """没有该 N 的闭式表，或偏置不是 β 的偶数倍"""


class NoSolution(SymmetryError):
    """递推方程组不相容"""

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(message)
        self.residual = residual


class GaugeAmbiguity(SymmetryError):
    """归一化之后解空间维数仍大于 1"""

    def __init__(self, message: str, table: Optional["CoeffTable"] = None):
        super().__init__(message)
        self.table = table


class EmptyNullspace(SymmetryError):
    """QH - H̃Q 的线性映射没有数值零空间"""

    def __init__(self, message: str, smallest: float = float("nan")):
        super().__init__(message)
        self.smallest = smallest


class IllConditioned(SymmetryError):
    """J² 拟合的设计矩阵病态"""


class NonPositivePoly(SymmetryError):
    """某个收敛本征态上 J² 多项式不为正"""


def min_cutoff(n_bias: int) -> int:
    """N 阶对称算符所需的最小子空间截断"""
    return 4 * (n_bias + 2)


def mirror_sign(n: int, m: int) -> int:
    """(-1)^{(n-m)/2}，n + m 为偶数"""
    return 1 if ((n - m) // 2) % 2 == 0 else -1


def lattice(n_bias: int) -> List[Tuple[int, int]]:
    """ansatz 指标 {(n, m): n + m 为偶数且 <= 2N}，按总阶数排列"""
    return [(n, total - n) for total in range(0, 2 * n_bias + 1, 2) for n in range(total + 1)]


@dataclass(frozen=True, eq=False)
class CoeffTable:
    """系数表 (元素, n, m) -> M_{n,m}，缺省项为零"""
    n_bias: int
    entries: Dict[CoeffKey, float]
    params: Optional[ModelParams] = None
    residual: float = 0.0
    gauge_dim: int = 1
    source: str = ""

    def get(self, elem: str, n: int, m: int) -> float:
        return self.entries.get((elem, n, m), 0.0)

    def terms(self, elem: str) -> List[Tuple[int, int, float]]:
        return [(n, m, v) for (e, n, m), v in sorted(self.entries.items()) if e == elem and v != 0.0]

    def keys(self) -> List[CoeffKey]:
        return sorted(self.entries)

    def hermiticity_error(self) -> float:
        """A_{m,n} = s A_{n,m}，C_{m,n} = s B_{n,m}，D_{m,n} = s D_{n,m}，s = (-1)^{(n-m)/2}"""
        worst = 0.0
        for n, m in lattice(self.n_bias):
            s = mirror_sign(n, m)
            worst = max(
                worst,
                abs(self.get("A", m, n) - s * self.get("A", n, m)),
                abs(self.get("D", m, n) - s * self.get("D", n, m)),
                abs(self.get("C", m, n) - s * self.get("B", n, m)),
            )
        return worst

    def top_tier(self) -> Dict[str, float]:
        """A_{n,2N-n} 与 D_{n,2N-n}"""
        top = 2 * self.n_bias
        out = {}
        for elem in ("A", "D"):
            for n in range(top + 1):
                out[f"{elem}_{n},{top - n}"] = self.get(elem, n, top - n)
        return out

    def scale(self) -> float:
        return max([1.0] + [abs(v) for v in self.entries.values()])

    def max_relative_difference(self, reference: "CoeffTable") -> float:
        """max |a - b| / max(1, max|b|)"""
        keys = set(self.entries) | set(reference.entries)
        if not keys:
            return 0.0
        worst = max(abs(self.entries.get(k, 0.0) - reference.entries.get(k, 0.0)) for k in keys)
        return worst / reference.scale()

    def to_dict(self) -> dict:
        return {
            "N": self.n_bias,
            "params": None if self.params is None else self.params.to_dict(),
            "entries": [
                {"elem": e, "n": n, "m": m, "value": v}
                for (e, n, m), v in sorted(self.entries.items())
            ],
            "source": self.source,
            "residual": self.residual,
            "gauge_dim": self.gauge_dim,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "CoeffTable":
        params = data.get("params")
        if params is not None:
            params = ModelParams(params["delta"], params["epsilon"], params["g"], params.get("omega", 1.0))
        entries = {(item["elem"], int(item["n"]), int(item["m"])): float(item["value"])
                   for item in data.get("entries", [])}
        return cls(int(data["N"]), entries, params, float(data.get("residual", 0.0)),
                   int(data.get("gauge_dim", 1)), data.get("source", ""))


# ---- 闭式解 N = 0..3 ----

def closed_form_coeffs(n_bias: int, params: ModelParams) -> CoeffTable:
    """N = 0..3 的闭式系数表，K 乘积已换成 (n, m) 单项式基"""
    if n_bias < 0 or n_bias > MAX_CLOSED_FORM:
        raise UnsupportedBias(f"只有 N = 0..{MAX_CLOSED_FORM} 的闭式解: N={n_bias}")
    params.require_coupling()
    d, g, b = params.delta, params.g, params.beta
    e: Dict[CoeffKey, float] = {}
    if n_bias == 0:
        e[("B", 0, 0)] = 1.0
        e[("C", 0, 0)] = 1.0
    elif n_bias == 1:
        e[("A", 0, 0)] = d / (8 * g * b)
        e[("D", 0, 0)] = d / (8 * g * b)
        e[("B", 0, 2)] = 1.0
        e[("C", 2, 0)] = -1.0
    elif n_bias == 2:
        k = d / (8 * g * b)
        e[("A", 2, 0)] = -k
        e[("A", 0, 2)] = k
        e[("A", 0, 0)] = -d / (16 * g ** 2 * b)
        e[("D", 2, 0)] = -k
        e[("D", 0, 2)] = k
        e[("D", 0, 0)] = d / (16 * g ** 2 * b)
        e[("B", 0, 4)] = 1.0
        e[("B", 0, 0)] = d ** 2 / (64 * g ** 2 * b ** 2)
        e[("C", 4, 0)] = 1.0
        e[("C", 0, 0)] = d ** 2 / (64 * g ** 2 * b ** 2)
    else:
        k = d / (8 * g * b)
        shared = d / (16 * g ** 3 * b) + d ** 3 / (512 * g ** 3 * b ** 3)
        for elem in ("A", "D"):
            e[(elem, 4, 0)] = k
            e[(elem, 0, 4)] = k
            e[(elem, 2, 2)] = -k
        e[("A", 2, 0)] = d / (8 * g ** 2 * b)
        e[("A", 0, 2)] = -d / (8 * g ** 2 * b)
        e[("A", 1, 1)] = -d / (4 * g * b ** 2)
        e[("A", 0, 0)] = shared - d / (16 * g * b ** 3)
        e[("D", 2, 0)] = -d / (8 * g ** 2 * b)
        e[("D", 0, 2)] = d / (8 * g ** 2 * b)
        e[("D", 0, 0)] = shared
        s = d ** 2 / (64 * g ** 2 * b ** 2)
        e[("B", 0, 6)] = 1.0
        e[("B", 0, 2)] = 2 * s
        e[("B", 2, 0)] = -s
        e[("C", 6, 0)] = -1.0
        e[("C", 2, 0)] = -2 * s
        e[("C", 0, 2)] = s
    return CoeffTable(n_bias, e, params, 0.0, 1, "closed_form")


# ---- 递推方程组 ----

class _Unknowns:
    """四个元素在 ansatz 格点上的未知量编号，以及由厄米性消元后的自由变量"""

    def __init__(self, n_bias: int):
        self.n_bias = n_bias
        self.points = lattice(n_bias)
        self.keys: List[CoeffKey] = [(e, n, m) for e in ELEMENTS for n, m in self.points]
        self.index = {key: i for i, key in enumerate(self.keys)}
        self.free: List[CoeffKey] = [key for key in self.keys if self._is_free(key)]
        self.free_index = {key: i for i, key in enumerate(self.free)}

    @staticmethod
    def _is_free(key: CoeffKey) -> bool:
        elem, n, m = key
        if elem == "B":
            return True
        if elem == "C":
            return False
        return n <= m

    def column(self, elem: str, n: int, m: int) -> Optional[int]:
        return self.index.get((elem, n, m))

    def substitution(self) -> np.ndarray:
        """全部未知量 = S @ 自由变量"""
        s = np.zeros((len(self.keys), len(self.free)))
        for i, (elem, n, m) in enumerate(self.keys):
            if elem == "C":
                source, sign = ("B", m, n), mirror_sign(m, n)
            elif elem in ("A", "D") and n > m:
                source, sign = (elem, m, n), mirror_sign(m, n)
            else:
                source, sign = (elem, n, m), 1
            s[i, self.free_index[source]] = sign
        return s


def _recurrence_matrix(unknowns: _Unknowns, params: ModelParams, ratio: float) -> np.ndarray:
    """A、D 对角方程 (n+m <= 2N+2) 与 B、C 非对角方程 (n+m <= 2N)，越界系数为零"""
    d, g, b = params.delta, params.g, params.beta
    top = 2 * unknowns.n_bias
    rows = []

    def new_row():
        return np.zeros(len(unknowns.keys))

    def put(row, elem, n, m, coef):
        col = unknowns.column(elem, n, m)
        if col is not None:
            row[col] += coef

    kappa = d / (8 * g * b)
    for total in range(0, top + 3, 2):
        for n in range(total + 1):
            m = total - n
            # A 方程
            row = new_row()
            put(row, "A", n - 2, m, 1.0)
            put(row, "A", n, m - 2, 1.0)
            put(row, "A", n - 1, m + 1, (m + 1) / b)
            put(row, "A", n, m, (m - n) / (4 * g))
            put(row, "A", n + 1, m - 1, (n + 1) / b)
            put(row, "A", n, m + 2, (m + 1) * (m + 2) / (4 * b * b))
            put(row, "A", n + 2, m, (n + 1) * (n + 2) / (4 * b * b))
            put(row, "B", n, m, -kappa)
            put(row, "C", n, m, kappa)
            rows.append(row)
            # D 方程
            row = new_row()
            put(row, "D", n - 2, m, 1.0)
            put(row, "D", n, m - 2, 1.0)
            put(row, "D", n, m, (n - m) / (4 * g))
            put(row, "B", n, m, -kappa)
            put(row, "C", n, m, kappa)
            rows.append(row)

    lam = d / (4 * b)
    for total in range(0, top + 1, 2):
        for n in range(total + 1):
            m = total - n
            # B 方程
            row = new_row()
            put(row, "B", n, m, (m - n) / 2 - ratio)
            put(row, "B", n + 1, m - 1, 2 * g / b * (n + 1))
            put(row, "B", n + 2, m, g / (2 * b * b) * (n + 1) * (n + 2))
            put(row, "A", n, m, -lam)
            put(row, "D", n, m, lam)
            rows.append(row)
            # C 方程
            row = new_row()
            put(row, "C", n, m, (n - m) / 2 - ratio)
            put(row, "C", n - 1, m + 1, -2 * g / b * (m + 1))
            put(row, "C", n, m + 2, -g / (2 * b * b) * (m + 1) * (m + 2))
            put(row, "A", n, m, -lam)
            put(row, "D", n, m, lam)
            rows.append(row)
    return np.array(rows)


def solve_recurrence(n_bias: int, params: ModelParams, ratio: Optional[float] = None,
                     strict: bool = False) -> CoeffTable:
    """
    求解系数递推方程组

    厄米性关系先消元 (C 与镜像的 A/D 由自由变量表示)，再与归一化
    B_{0,2N} = 1 一起做最小二乘 (gelsd，最小范数解)。ratio 为 ε/(2β)，
    默认取 N；非整数时方程组不相容，抛出 NoSolution。

    Args:
        n_bias: ansatz 阶数 N
        params: 模型参数，要求 g > 0
        ratio: ε/(2β)，缺省为 N
        strict: 解空间维数大于 1 时抛出 GaugeAmbiguity

    Returns:
        CoeffTable，residual 为递推方程的残差范数
    """
    if n_bias < 0:
        raise UnsupportedBias(f"N 必须是非负整数: {n_bias}")
    params.require_coupling()
    ratio = float(n_bias if ratio is None else ratio)

    unknowns = _Unknowns(n_bias)
    equations = _recurrence_matrix(unknowns, params, ratio)
    substitution = unknowns.substitution()
    reduced = equations @ substitution
    # 行按最大元归一，不改变相容方程组的解
    row_scale = np.abs(reduced).max(axis=1)
    reduced = reduced[row_scale > 0] / row_scale[row_scale > 0, None]

    norm_row = np.zeros((1, len(unknowns.free)))
    norm_row[0, unknowns.free_index[("B", 0, 2 * n_bias)]] = 1.0
    system = np.vstack([reduced, norm_row])
    rhs = np.zeros(system.shape[0])
    rhs[-1] = 1.0

    solution, _, rank, _ = scipy.linalg.lstsq(system, rhs, cond=GAUGE_RTOL, lapack_driver="gelsd")
    misfit = float(np.linalg.norm(system @ solution - rhs))
    if misfit > NO_SOLUTION_TOL * np.linalg.norm(rhs):
        raise NoSolution(f"N={n_bias}, ε/(2β)={ratio:.6g} 时递推方程组无解，残差 {misfit:.3e}", misfit)

    values = substitution @ solution
    residual = float(np.linalg.norm(equations @ values))
    entries = {key: float(values[i]) for i, key in enumerate(unknowns.keys)}
    gauge_dim = 1 + len(unknowns.free) - int(rank)
    table = CoeffTable(n_bias, entries, params, residual, gauge_dim, "recurrence")
    if strict and gauge_dim > 1:
        raise GaugeAmbiguity(f"N={n_bias} 归一化后解空间维数为 {gauge_dim}，返回最小范数解", table)
    return table


# ---- 矩阵组装 ----

class MonomialCache:
    """子空间上的 2^{-(n+m)/2} (a₊†)^n (a₋)^m，幂次按需缓存"""

    def __init__(self, params: ModelParams, sector: Union[Sector, str], cutoff: int):
        self.sector = Sector.parse(sector)
        self.cutoff = cutoff
        pair = bogoliubov_pair(params, 2 * cutoff)
        self._x = pair.a_plus.dag()
        self._y = pair.a_minus
        self._x_powers = {0: None}
        self._y_powers = {0: None}
        self._monomials: Dict[Tuple[int, int], BosonOp] = {}

    def _power(self, cache: dict, op: BosonOp, k: int) -> Optional[BosonOp]:
        if k not in cache:
            prev = self._power(cache, op, k - 1)
            cache[k] = op if prev is None else prev @ op
        return cache[k]

    def monomial(self, n: int, m: int) -> BosonOp:
        key = (n, m)
        if key not in self._monomials:
            x_n = self._power(self._x_powers, self._x, n)
            y_m = self._power(self._y_powers, self._y, m)
            if x_n is None and y_m is None:
                full = identity(self._x.basis)
            elif x_n is None:
                full = y_m
            elif y_m is None:
                full = x_n
            else:
                full = x_n @ y_m
            self._monomials[key] = project_sector(full * 2.0 ** (-(n + m) / 2), self.sector)
        return self._monomials[key]


def assemble_Q(coeffs: CoeffTable, params: ModelParams, sector: Union[Sector, str],
               cutoff: int, cache: Optional[MonomialCache] = None) -> BlockOp:
    """Q = (A B; C D)，每个元素为单项式矩阵的线性组合"""
    if cutoff < min_cutoff(coeffs.n_bias):
        raise TruncationError(f"N={coeffs.n_bias} 需要截断 >= {min_cutoff(coeffs.n_bias)}: {cutoff}")
    cache = cache or MonomialCache(params, sector, cutoff)
    dim = cutoff
    blocks = {}
    for elem in ELEMENTS:
        total = np.zeros((dim, dim))
        for n, m, value in coeffs.terms(elem):
            total += value * cache.monomial(n, m).matrix
        blocks[elem] = total
    basis = cache.monomial(0, 0).basis
    return BlockOp.from_blocks(*(BosonOp(basis, blocks[e]) for e in ELEMENTS))


@dataclass(frozen=True, eq=False)
class PhasedBlockOp:
    """J = i^p R，R 为实分块算符"""
    real: BlockOp
    global_phase: int

    @property
    def basis(self):
        return self.real.basis

    def hermiticity_error(self, order: int) -> float:
        """窗口行与列上 max|R - Rᵀ| / max|R|"""
        r = self.real.to_dense()
        idx = self.real.window(order)
        sub = r[np.ix_(idx, idx)]
        return float(np.abs(sub - sub.T).max() / max(1.0, np.abs(r).max()))

    def square(self) -> "PhasedBlockOp":
        r = self.real.to_dense()
        return PhasedBlockOp(BlockOp.from_dense(r @ r, self.basis), (2 * self.global_phase) % 4)

    def gram(self) -> BlockOp:
        """J†J = RᵀR"""
        r = self.real.to_dense()
        return BlockOp.from_dense(r.T @ r, self.basis)


def assemble_J(Q: BlockOp, sector: Union[Sector, str]) -> PhasedBlockOp:
    """J = e^{iπa†a/2} Q: 每个分块左乘 (-1)^k，整体相位单独记录"""
    sector = Sector.parse(sector)
    if Q.basis.sector is not sector:
        raise TruncationError(f"Q 定义在 {Q.basis.sector} 子空间，而不是 {sector}")
    return PhasedBlockOp(Q.left_boson(z4_diagonal(Q.basis)), sector.global_phase)


def intertwining_residual(Q: BlockOp, hamiltonians: HamiltonianSet, n_bias: int,
                          relative: bool = True) -> float:
    """max|QH₀ - H̃Q|_win / (‖Q‖_win ‖H₀‖_win)；relative=False 时返回未归一的最大元"""
    q = Q.to_dense()
    h = hamiltonians.h0.to_dense()
    ht = hamiltonians.h_tilde.to_dense()
    rows = Q.window(2 * n_bias + 2)
    worst = float(np.abs((q @ h - ht @ q)[rows]).max())
    if not relative:
        return worst
    return worst / float(np.linalg.norm(q[rows]) * np.linalg.norm(h[rows]))


def commutator_residual(J: PhasedBlockOp, H: BlockOp, n_bias: int, relative: bool = True) -> float:
    """max|[J, H]|_win / (‖J‖_win ‖H‖_win)，整体相位不影响比值"""
    r = J.real.to_dense()
    h = H.to_dense()
    rows = J.real.window(2 * n_bias + 2)
    worst = float(np.abs((r @ h - h @ r)[rows]).max())
    if not relative:
        return worst
    return worst / float(np.linalg.norm(r[rows]) * np.linalg.norm(h[rows]))


def element_residuals(Q: BlockOp, hamiltonians: HamiltonianSet, n_bias: int) -> Dict[str, float]:
    """QH₀ - H̃Q 的四个分块方程分别的窗口残差"""
    q = Q.to_dense()
    diff = q @ hamiltonians.h0.to_dense() - hamiltonians.h_tilde.to_dense() @ q
    k = Q.basis.dim
    rows = Q.basis.window(2 * n_bias + 2)
    scale = max(1.0, np.abs(q[Q.window(2 * n_bias + 2)]).max())
    out = {}
    for name, (i, j) in zip(ELEMENTS, ((0, 0), (0, 1), (1, 0), (1, 1))):
        block = diff[i * k:(i + 1) * k, j * k:(j + 1) * k][rows]
        out[name] = float(np.abs(block).max() / scale)
    return out


class SymmetryOperator:
    """
    不显式组装矩阵地把 Q (或 R = ZQ) 作用到一组子空间向量上

    对每个元素先算 (a₋)^m v，再按 a₊† 的 Horner 形式累加，
    与 assemble_Q 的稠密乘积逐元相同。
    """

    def __init__(self, table: CoeffTable, params: ModelParams, sector: Union[Sector, str], cutoff: int):
        if cutoff < min_cutoff(table.n_bias):
            raise TruncationError(f"N={table.n_bias} 需要截断 >= {min_cutoff(table.n_bias)}: {cutoff}")
        self.table = table
        self.sector = Sector.parse(sector)
        self.cutoff = cutoff
        pair = bogoliubov_pair(params, 2 * cutoff)
        self._x = pair.a_plus.dag().matrix
        self._y = pair.a_minus.matrix
        self.basis = FockBasis.for_sector(self.sector, cutoff)
        self._z = np.tile(z4_diagonal(self.basis), 2)

    def _apply_element(self, elem: str, full: np.ndarray) -> np.ndarray:
        terms = self.table.terms(elem)
        if not terms:
            return np.zeros_like(full)
        max_m = max(m for _, m, _ in terms)
        lowered = [full]
        for _ in range(max_m):
            lowered.append(self._y @ lowered[-1])
        by_n: Dict[int, np.ndarray] = {}
        for n, m, value in terms:
            contribution = value * 2.0 ** (-(n + m) / 2) * lowered[m]
            by_n[n] = by_n[n] + contribution if n in by_n else contribution
        result = by_n.get(max(by_n), np.zeros_like(full))
        for n in range(max(by_n) - 1, -1, -1):
            result = self._x @ result
            if n in by_n:
                result = result + by_n[n]
        return result

    def apply_q(self, vectors: np.ndarray) -> np.ndarray:
        k = self.cutoff
        upper = embed_vectors(vectors[:k], self.basis)
        lower = embed_vectors(vectors[k:], self.basis)
        out_upper = self._apply_element("A", upper) + self._apply_element("B", lower)
        out_lower = self._apply_element("C", upper) + self._apply_element("D", lower)
        return np.concatenate([restrict_vectors(out_upper, self.basis),
                               restrict_vectors(out_lower, self.basis)])

    def apply_real(self, vectors: np.ndarray) -> np.ndarray:
        """R v = Z Q v"""
        q_v = self.apply_q(vectors)
        return self._z.reshape((-1,) + (1,) * (q_v.ndim - 1)) * q_v


# ---- J² 多项式 ----

@dataclass(frozen=True)
class JSquarePoly:
    """J†J = Σ y_i H^i 的拟合结果，coeffs 按 y_0, y_1, ... 升幂排列"""
    n_bias: Optional[int]
    coeffs: Tuple[float, ...]
    residual: float
    offdiag: float = 0.0
    basis: str = "power"
    energies: Tuple[float, ...] = field(default=(), repr=False)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, energy):
        return P.polyval(energy, self.coeffs)

    def to_dict(self) -> dict:
        return {
            "N": self.n_bias,
            "degree": self.degree,
            "coeffs": list(self.coeffs),
            "residual": self.residual,
            "offdiag": self.offdiag,
            "basis": self.basis,
            "n_states": len(self.energies),
        }


def analytic_j1_poly(params: ModelParams) -> Tuple[float, float, float]:
    """N = 1 的 (y₀, y₁, y₂) = (Δ²/(64g²) + g²/(4β²), 1/(4β²), 1/(4β²))"""
    params.require_coupling()
    d, g, b = params.delta, params.g, params.beta
    quad = 1.0 / (4.0 * b * b)
    return (d * d / (64.0 * g * g) + g * g * quad, quad, quad)


def _weighted_fit(energies: np.ndarray, values: np.ndarray, degree: int) -> Tuple[np.ndarray, str]:
    # 相对权重: 各个态的 J†J 量级差别很大
    weights = 1.0 / np.maximum(np.abs(values), np.finfo(float).tiny)
    design = P.polyvander(energies, degree) * weights[:, None]
    if np.linalg.cond(design) <= VANDERMONDE_COND_LIMIT:
        coeffs = scipy.linalg.lstsq(design, values * weights)[0]
        return coeffs, "power"
    fitted = Chebyshev.fit(energies, values, degree, w=weights)
    mapped = fitted.mapparms()[0] + fitted.mapparms()[1] * energies
    cheb_design = np.polynomial.chebyshev.chebvander(mapped, degree) * weights[:, None]
    if np.linalg.cond(cheb_design) > CHEBYSHEV_COND_LIMIT:
        raise IllConditioned(f"{degree} 次拟合在 Chebyshev 基下依然病态")
    coeffs = fitted.convert(kind=Polynomial).coef
    return np.pad(coeffs, (0, degree + 1 - len(coeffs))), "chebyshev"


def jsquare_poly(J: PhasedBlockOp, H: BlockOp, degree: int, n_states: Optional[int] = None,
                 n_bias: Optional[int] = None) -> JSquarePoly:
    """
    在 H 最低 n_states 个本征态上拟合 J†J 的对角元

    同时给出这些态之间 (非简并对) J†J 非对角元的最大值，相对于 max|J†J|。
    """
    dim = H.dim
    n_states = min(dim, n_states or 3 * (degree + 1) + 4)
    if n_states < degree + 1:
        raise IllConditioned(f"{n_states} 个本征态不足以拟合 {degree} 次多项式")
    energies, vectors = scipy.linalg.eigh(H.to_dense(), subset_by_index=[0, n_states - 1])
    image = J.real.to_dense() @ vectors
    gram = image.T @ image
    values = np.diag(gram).copy()

    gap = np.abs(energies[:, None] - energies[None, :])
    distinct = gap >= DEGENERACY_TOL * np.maximum(1.0, np.abs(energies))[:, None]
    offdiag = float(np.abs(gram[distinct]).max() / np.abs(gram).max()) if distinct.any() else 0.0

    coeffs, basis = _weighted_fit(energies, values, degree)
    relative = (P.polyval(energies, coeffs) - values) / values
    residual = float(np.sqrt(np.mean(relative ** 2)))
    return JSquarePoly(n_bias, tuple(float(c) for c in coeffs), residual, offdiag, basis,
                       tuple(float(e) for e in energies))


def converged_count(params: ModelParams, sector: Union[Sector, str], cutoff: int,
                    tol: float = CONVERGENCE_TOL) -> int:
    """截断增大 25% 时本征值变化 < tol 的最低能级个数"""
    small = scipy.linalg.eigvalsh(build_h0(params, sector, cutoff, check_lie_form=False).h0.to_dense())
    larger = int(math.ceil(1.25 * cutoff))
    large = scipy.linalg.eigvalsh(build_h0(params, sector, larger, check_lie_form=False).h0.to_dense())
    shifted = np.abs(small - large[:len(small)]) >= tol
    return int(np.argmax(shifted)) if shifted.any() else len(small)


# ---- 宇称标签 ----

@dataclass(frozen=True, eq=False)
class ParityLabels:
    """本征能量、±1 标签以及 ⟨v|R|v⟩ (简并对取 2x2 块的本征值)"""
    energies: np.ndarray
    labels: np.ndarray
    expectations: np.ndarray

    def rescaled(self, poly: JSquarePoly) -> np.ndarray:
        """Π = J / sqrt(poly(H)) 的对角值"""
        return self.expectations / np.sqrt(poly(self.energies))


def label_states(energies: np.ndarray, vectors: np.ndarray, images: np.ndarray,
                 poly: Optional[JSquarePoly] = None,
                 degeneracy_tol: float = DEGENERACY_TOL) -> ParityLabels:
    """images 为 R @ vectors；近简并的相邻能级在 2x2 块内对角化 R"""
    if poly is not None:
        values = poly(energies)
        if np.any(values <= 0.0):
            bad = int(np.argmax(values <= 0.0))
            raise NonPositivePoly(f"第 {bad} 个态上 J² 多项式为 {values[bad]:.3e}")
    expectations = np.einsum("ij,ij->j", vectors, images)
    i = 0
    while i < len(energies) - 1:
        if abs(energies[i + 1] - energies[i]) < degeneracy_tol * max(1.0, abs(energies[i])):
            pair = slice(i, i + 2)
            block = vectors[:, pair].T @ images[:, pair]
            expectations[pair] = scipy.linalg.eigvalsh(0.5 * (block + block.T))
            i += 2
        else:
            i += 1
    labels = np.where(expectations >= 0.0, 1, -1).astype(int)
    return ParityLabels(np.asarray(energies), labels, expectations)


def parity_operator(J: PhasedBlockOp, H: BlockOp, poly: Optional[JSquarePoly] = None,
                    n_states: Optional[int] = None) -> ParityLabels:
    """H 最低 n_states 个本征态的宇称标签 sign⟨v|J|v⟩"""
    if n_states is None:
        n_states = len(poly.energies) if poly is not None and poly.energies else min(H.dim, 20)
    energies, vectors = scipy.linalg.eigh(H.to_dense(), subset_by_index=[0, n_states - 1])
    return label_states(energies, vectors, J.real.to_dense() @ vectors, poly)


# ---- 零空间对照 ----

def intertwining_map(n_bias: int, params: ModelParams, sector: Union[Sector, str],
                     cutoff: int) -> Tuple[np.ndarray, List[CoeffKey]]:
    """系数向量 -> 窗口内 QH - H̃Q 矩阵元的线性映射，列顺序为返回的 keys"""
    if cutoff < min_cutoff(n_bias):
        raise TruncationError(f"N={n_bias} 需要截断 >= {min_cutoff(n_bias)}: {cutoff}")
    hamiltonians = build_h0(params, sector, cutoff, check_lie_form=False)
    h = hamiltonians.h0.to_dense()
    ht = hamiltonians.h_tilde.to_dense()
    rows = hamiltonians.h0.window(2 * n_bias + 2)
    cache = MonomialCache(params, sector, cutoff)
    keys = [(e, n, m) for e in ELEMENTS for n, m in lattice(n_bias)]

    columns = []
    k = cutoff
    for elem, n, m in keys:
        i, j = ELEMENT_BLOCK[elem]
        q = np.zeros((2 * k, 2 * k))
        q[i * k:(i + 1) * k, j * k:(j + 1) * k] = cache.monomial(n, m).matrix
        columns.append((q @ h - ht @ q)[rows].ravel())
    return np.column_stack(columns), keys


def nullspace_symmetry(n_bias: int, params: ModelParams, sector: Union[Sector, str],
                       cutoff: Optional[int] = None) -> CoeffTable:
    """
    独立于递推的数值对照: intertwining_map 的零空间

    精确为零、只剩舍入噪声的行 (最大元 < NOISE_ROW_RTOL * max|M|) 先剔除，
    其余行按最大元、列按范数均衡后做 SVD。σ_min/σ_max > NULLSPACE_TOL 时
    说明该参数下不存在此形式的对称算符。
    """
    params.require_coupling()
    cutoff = cutoff or min_cutoff(n_bias) + 4
    mapping, keys = intertwining_map(n_bias, params, sector, cutoff)

    row_scale = np.abs(mapping).max(axis=1)
    kept = row_scale > NOISE_ROW_RTOL * row_scale.max()
    mapping = mapping[kept] / row_scale[kept, None]
    col_scale = np.linalg.norm(mapping, axis=0)
    col_scale[col_scale == 0] = 1.0
    mapping = mapping / col_scale

    _, singular, vh = scipy.linalg.svd(mapping, full_matrices=False)
    relative = singular / singular[0]
    null = relative < NULLSPACE_TOL
    if not null.any():
        raise EmptyNullspace(
            f"N={n_bias}, ε/(2β)={params.bias_ratio:.6g} 时零空间为空，最小相对奇异值 {relative[-1]:.3e}",
            float(relative[-1]),
        )
    basis = vh[null].T / col_scale[:, None]
    pivot = basis[keys.index(("B", 0, 2 * n_bias))]
    if np.linalg.norm(pivot) < NULLSPACE_TOL * np.abs(basis).max():
        raise EmptyNullspace(f"零空间中没有 B_0,{2 * n_bias} 分量，无法归一化", float(relative[-1]))
    values = basis @ (pivot / (pivot @ pivot))
    entries = {key: float(values[i]) for i, key in enumerate(keys)}
    return CoeffTable(n_bias, entries, params, float(relative[null].max()), int(null.sum()), "nullspace")


# ---- 组合流程 ----

@dataclass(frozen=True, eq=False)
class SymmetryBundle:
    """一组参数下的系数表、哈密顿量、Q 与 J"""
    table: CoeffTable
    hamiltonians: HamiltonianSet
    q: BlockOp
    j: PhasedBlockOp


def build_symmetry(params: ModelParams, sector: Union[Sector, str], cutoff: int,
                   table: Optional[CoeffTable] = None) -> SymmetryBundle:
    """偏置必须是 β 的偶数倍；未给系数表时由递推求解"""
    n_bias = params.n_bias if table is None else table.n_bias
    if n_bias is None:
        raise UnsupportedBias(f"ε/(2β) = {params.bias_ratio:.6g} 不是非负整数")
    table = table or solve_recurrence(n_bias, params)
    hamiltonians = build_h0(params, sector, cutoff, check_lie_form=False)
    q = assemble_Q(table, params, sector, cutoff)
    return SymmetryBundle(table, hamiltonians, q, assemble_J(q, sector))


def fit_state_count(params: ModelParams, sector: Union[Sector, str], cutoff: int, degree: int) -> int:
    """收敛能级与 3(degree+1)+4 中较小者"""
    return min(converged_count(params, sector, cutoff), 3 * (degree + 1) + 4)
