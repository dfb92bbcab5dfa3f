#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
能谱扫描与能级交叉检测
对耦合强度 g 扫描子空间哈密顿量，标记宇称，区分真交叉与避免交叉
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment

from core.fock_algebra import BlockOp, ModelParams, ParameterError, RabiSymmetryError, Sector
from core.model import build_h0
from core.symmetry import SymmetryOperator, label_states, min_cutoff, solve_recurrence

SYMMETRY_TOL = 1e-10
GRID_MIN = 0.01
GRID_MAX = 0.49
CROSSING_THRESHOLD = 1e-6
GAP_FLOOR = 1e-10
INTERVAL_FLOOR = 1e-12
UNLABELED = 0

INV_PHI = (math.sqrt(5) - 1) / 2  # 1 / phi
INV_PHI_SQUARE = (3 - math.sqrt(5)) / 2  # 1 / phi^2


class SpectrumError(RabiSymmetryError):
    """能谱计算错误的基类"""


class NotSymmetric(SpectrumError):
    """哈密顿量矩阵不对称"""


class UnlabeledScan(SpectrumError):
    """需要宇称标签才能判断交叉类型，但扫描没有标签"""


def eigensolve(H: BlockOp, n_levels: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """实对称本征分解，本征值升序；n_levels 只求最低几个"""
    dense = H.to_dense()
    asymmetry = float(np.abs(dense - dense.T).max()) if dense.size else 0.0
    if asymmetry > SYMMETRY_TOL:
        raise NotSymmetric(f"哈密顿量不对称: max|H - Hᵀ| = {asymmetry:.3e}")
    if n_levels is None or n_levels >= dense.shape[0]:
        return scipy.linalg.eigh(dense)
    return scipy.linalg.eigh(dense, subset_by_index=[0, n_levels - 1])


def rescale(energies: np.ndarray, beta: float) -> np.ndarray:
    """(E + 1/2) / β"""
    return (np.asarray(energies) + 0.5) / beta


@dataclass(frozen=True)
class BiasMode:
    """固定 ε (kind="epsilon") 或固定 ε/(2β) (kind="ratio")"""
    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("epsilon", "ratio"):
            raise ParameterError(f"未知的偏置模式: {self.kind}")

    def params_at(self, base: ModelParams, g: float) -> ModelParams:
        params = base.with_coupling(g)
        if self.kind == "ratio":
            return params.with_bias_ratio(self.value)
        return params.with_epsilon(self.value)

    def describe(self) -> str:
        return f"ε/(2β)={self.value:g}" if self.kind == "ratio" else f"ε={self.value:g}"


@dataclass(frozen=True, eq=False)
class PointResult:
    """单个 g 点的能级与标签"""
    g: float
    params: ModelParams
    energies: np.ndarray
    rescaled: np.ndarray
    labels: Optional[np.ndarray]


def evaluate_point(base: ModelParams, bias_mode: BiasMode, g: float, sector: Union[Sector, str],
                   cutoff: int, n_levels: int, with_labels: bool = True) -> PointResult:
    """对角化一个 g 点；ε/(2β) 为整数时用对称算符给出标签"""
    params = bias_mode.params_at(base, g)
    hamiltonian = build_h0(params, sector, cutoff, check_lie_form=False).h0
    energies, vectors = eigensolve(hamiltonian, n_levels)
    labels = None
    n_bias = params.n_bias
    if with_labels and n_bias is not None and cutoff >= min_cutoff(n_bias):
        operator = SymmetryOperator(solve_recurrence(n_bias, params), params, sector, cutoff)
        labels = label_states(energies, vectors, operator.apply_real(vectors)).labels
    return PointResult(g, params, energies, rescale(energies, params.beta), labels)


@dataclass(frozen=True, eq=False)
class SpectrumScan:
    """g 网格上的重标度能级，labels 中 0 表示无标签"""
    base: ModelParams
    bias_mode: BiasMode
    sector: Sector
    cutoff: int
    g_grid: np.ndarray
    levels: np.ndarray
    labels: np.ndarray
    n_levels: int

    @property
    def labelled(self) -> bool:
        return bool(np.all(self.labels != UNLABELED))

    def csv_rows(self) -> Iterator[Tuple[float, int, float, Union[int, str]]]:
        for k, g in enumerate(self.g_grid):
            for level in range(self.n_levels):
                label = int(self.labels[k, level])
                yield float(g), level, float(self.levels[k, level]), label if label != UNLABELED else "unlabeled"


def validate_grid(g_grid: Sequence[float]) -> np.ndarray:
    grid = np.asarray(g_grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ParameterError("g 网格不能为空")
    if np.any(np.diff(grid) <= 0):
        raise ParameterError("g 网格必须严格升序")
    if grid[0] < GRID_MIN or grid[-1] > GRID_MAX:
        raise ParameterError(f"g 网格必须位于 [{GRID_MIN}, {GRID_MAX}] 内: [{grid[0]}, {grid[-1]}]")
    return grid


def sweep(base: ModelParams, bias_mode: BiasMode, g_grid: Sequence[float], sector: Union[Sector, str],
          cutoff: int, n_levels: int, workers: int = 1, with_labels: bool = True) -> SpectrumScan:
    """
    扫描耦合强度

    每个 g 点独立对角化 (固定比例模式下 ε 按 2Nβ(g) 重算)，
    由线程池并行计算，结果按网格顺序合并。
    """
    grid = validate_grid(g_grid)
    sector = Sector.parse(sector)

    def run(g):
        return evaluate_point(base, bias_mode, float(g), sector, cutoff, n_levels, with_labels)

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        points: List[PointResult] = list(pool.map(run, grid))

    levels = np.array([p.rescaled for p in points])
    labels = np.array([
        p.labels if p.labels is not None else np.full(n_levels, UNLABELED) for p in points
    ], dtype=int)
    return SpectrumScan(base, bias_mode, sector, cutoff, grid, levels, labels, n_levels)


def golden_section_search(f: Callable[[float], float], a: float, b: float,
                          interval_tol: float = INTERVAL_FLOOR,
                          value_tol: float = GAP_FLOOR) -> Tuple[float, float]:
    """
    黄金分割搜索

    f 在 [a, b] 内有唯一局部极小；区间缩到 interval_tol 以下或
    函数值低于 value_tol 时停止，返回 (x, f(x))。
    """
    a, b = min(a, b), max(a, b)
    h = b - a
    c = a + INV_PHI_SQUARE * h
    d = a + INV_PHI * h
    yc = f(c)
    yd = f(d)

    while h > interval_tol and min(yc, yd) >= value_tol:
        if yc < yd:
            b = d
            d = c
            yd = yc
            h = INV_PHI * h
            c = a + INV_PHI_SQUARE * h
            yc = f(c)
        else:
            a = c
            c = d
            yc = yd
            h = INV_PHI * h
            d = a + INV_PHI * h
            yd = f(d)

    return (c, yc) if yc < yd else (d, yd)


@dataclass(frozen=True)
class CrossingEvent:
    """相邻能级对 (i, i+1) 的一个能隙极小"""
    level_pair: Tuple[int, int]
    g_star: float
    min_gap: float
    kind: str
    labels: Optional[Tuple[int, int]] = None

    @property
    def is_true(self) -> bool:
        return self.kind == "true"

    def to_dict(self) -> dict:
        return {
            "pair": list(self.level_pair),
            "g_star": self.g_star,
            "min_gap": self.min_gap,
            "kind": self.kind,
            "labels": None if self.labels is None else list(self.labels),
        }


def _local_minima(gaps: np.ndarray) -> List[int]:
    return [k for k in range(1, len(gaps) - 1) if gaps[k] <= gaps[k - 1] and gaps[k] < gaps[k + 1]]


def detect_crossings(scan: SpectrumScan, interval_tol: float = INTERVAL_FLOOR,
                     gap_tol: float = GAP_FLOOR, threshold: float = CROSSING_THRESHOLD,
                     max_level: Optional[int] = None) -> List[CrossingEvent]:
    """
    检测相邻能级的能隙极小并分类

    每个网格极小在相邻两个网格点之间做黄金分割细化；细化后能隙小于
    threshold 且两能级宇称相反时为真交叉，否则为避免交叉。
    """
    if len(scan.g_grid) < 3:
        raise ParameterError("交叉检测至少需要 3 个网格点")
    top = scan.n_levels if max_level is None else min(max_level, scan.n_levels)
    events = []
    for i in range(top - 1):
        gaps = scan.levels[:, i + 1] - scan.levels[:, i]
        for k in _local_minima(gaps):

            def gap_at(g, i=i):
                point = evaluate_point(scan.base, scan.bias_mode, g, scan.sector, scan.cutoff,
                                       i + 2, with_labels=False)
                return float(point.rescaled[i + 1] - point.rescaled[i])

            g_star, min_gap = golden_section_search(gap_at, scan.g_grid[k - 1], scan.g_grid[k + 1],
                                                    interval_tol, gap_tol)
            if min_gap >= threshold:
                events.append(CrossingEvent((i, i + 1), g_star, min_gap, "avoided"))
                continue
            point = evaluate_point(scan.base, scan.bias_mode, g_star, scan.sector, scan.cutoff, i + 2)
            if point.labels is None:
                raise UnlabeledScan(
                    f"能级 ({i}, {i + 1}) 在 g={g_star:.12g} 处能隙 {min_gap:.3e}，"
                    f"但 {scan.bias_mode.describe()} 下没有宇称标签"
                )
            pair_labels = (int(point.labels[i]), int(point.labels[i + 1]))
            kind = "true" if pair_labels[0] != pair_labels[1] else "avoided"
            events.append(CrossingEvent((i, i + 1), g_star, min_gap, kind, pair_labels))
    return events


def track_levels(scan: SpectrumScan, parity_penalty: float = 10.0) -> np.ndarray:
    """
    沿网格追踪能级分支

    相邻网格点之间用线性外推值做最近匹配 (linear_sum_assignment)，
    宇称不同的匹配加 parity_penalty。返回 branches[k, b] = 第 k 点上
    分支 b 对应的能级序号。
    """
    n_points, n_levels = scan.levels.shape
    branches = np.zeros((n_points, n_levels), dtype=int)
    branches[0] = np.arange(n_levels)
    for k in range(1, n_points):
        previous = scan.levels[k - 1, branches[k - 1]]
        if k >= 2:
            previous = 2.0 * previous - scan.levels[k - 2, branches[k - 2]]
        cost = np.abs(previous[:, None] - scan.levels[k][None, :])
        old_labels = scan.labels[k - 1, branches[k - 1]]
        mismatch = (old_labels[:, None] != scan.labels[k][None, :]) \
            & (old_labels[:, None] != UNLABELED) & (scan.labels[k][None, :] != UNLABELED)
        cost = cost + parity_penalty * mismatch
        rows, cols = linear_sum_assignment(cost)
        branches[k, rows] = cols
    return branches
