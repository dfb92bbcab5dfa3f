#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
能谱SVG绘制
用 QSvgGenerator + QPainter 画出重标度能级随 g 的变化，按宇称着色
"""

import os
import tempfile
from typing import List, Optional, Tuple

import numpy as np

# 无显示环境下也能创建 QGuiApplication
os.environ.setdefault("QT_QPA_PLATFORM", "offscreen")

from PyQt5.QtCore import QPointF, QRect, QRectF, QSize, Qt
from PyQt5.QtGui import QColor, QFont, QGuiApplication, QPainter, QPen, QPolygonF
from PyQt5.QtSvg import QSvgGenerator

from core.spectrum import SpectrumScan, UNLABELED, track_levels

PARITY_COLORS = {
    1: QColor("#1f4fbf"),     # 正宇称: 蓝
    -1: QColor("#c8102e"),    # 负宇称: 红
    UNLABELED: QColor("#8c8c8c"),
}
WIDTH = 800
HEIGHT = 600
MARGIN_LEFT = 80
MARGIN_RIGHT = 30
MARGIN_TOP = 50
MARGIN_BOTTOM = 60
TICKS = 5

_app = None


def ensure_qt_application() -> QGuiApplication:
    """QPainter 绘制文字前必须存在 QGuiApplication"""
    global _app
    app = QGuiApplication.instance()
    if app is None:
        _app = QGuiApplication(["rabi-sym"])
        app = _app
    return app


def _segments(colors: List[int]) -> List[Tuple[int, int, int]]:
    """把相邻同色的网格区间合并为 (起点, 终点, 颜色)"""
    runs = []
    start = 0
    for k in range(1, len(colors) + 1):
        if k == len(colors) or colors[k] != colors[start]:
            runs.append((start, k, colors[start]))
            start = k
    return runs


class SpectrumPlot:
    """坐标变换与坐标轴"""

    def __init__(self, g_range: Tuple[float, float], e_range: Tuple[float, float]):
        self.g_min, self.g_max = g_range
        pad = 0.03 * (e_range[1] - e_range[0] or 1.0)
        self.e_min, self.e_max = e_range[0] - pad, e_range[1] + pad
        self.area = QRectF(MARGIN_LEFT, MARGIN_TOP,
                           WIDTH - MARGIN_LEFT - MARGIN_RIGHT,
                           HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)

    def point(self, g: float, e: float) -> QPointF:
        x = self.area.left() + (g - self.g_min) / (self.g_max - self.g_min) * self.area.width()
        y = self.area.bottom() - (e - self.e_min) / (self.e_max - self.e_min) * self.area.height()
        return QPointF(x, y)

    def draw_axes(self, painter: QPainter, title: str):
        painter.setPen(QPen(QColor("#000000"), 1))
        painter.drawRect(self.area)
        painter.setFont(QFont("Sans", 9))
        for value in np.linspace(self.g_min, self.g_max, TICKS):
            p = self.point(value, self.e_min)
            painter.drawLine(p, QPointF(p.x(), p.y() - 5))
            painter.drawText(QRectF(p.x() - 30, p.y() + 4, 60, 16), Qt.AlignCenter, f"{value:.2f}")
        for value in np.linspace(self.e_min, self.e_max, TICKS):
            p = self.point(self.g_min, value)
            painter.drawLine(p, QPointF(p.x() + 5, p.y()))
            painter.drawText(QRectF(p.x() - 64, p.y() - 8, 58, 16), Qt.AlignRight | Qt.AlignVCenter, f"{value:.2f}")
        painter.setFont(QFont("Sans", 11))
        painter.drawText(QRectF(self.area.left(), HEIGHT - 30, self.area.width(), 20), Qt.AlignCenter, "g")
        painter.save()
        painter.translate(20, self.area.center().y())
        painter.rotate(-90)
        painter.drawText(QRectF(-100, -10, 200, 20), Qt.AlignCenter, "(E + 1/2) / β")
        painter.restore()
        painter.drawText(QRectF(0, 10, WIDTH, 24), Qt.AlignCenter, title)


def render_spectrum_svg(scan: SpectrumScan, path: str, title: Optional[str] = None,
                        branches: Optional[np.ndarray] = None) -> str:
    """
    把扫描结果画成 SVG

    Args:
        scan: 能谱扫描
        path: 输出文件路径
        title: 图标题，缺省由偏置与 Δ 生成
        branches: track_levels 的结果，缺省时现算

    Returns:
        写出的文件路径
    """
    ensure_qt_application()
    if branches is None:
        branches = track_levels(scan)
    title = title or f"{scan.bias_mode.describe()}, Δ={scan.base.delta:.4g}, {scan.sector.value}"
    plot = SpectrumPlot((float(scan.g_grid[0]), float(scan.g_grid[-1])),
                        (float(scan.levels.min()), float(scan.levels.max())))

    directory = os.path.dirname(os.path.abspath(path))
    fd, temp_path = tempfile.mkstemp(prefix=".spectrum.", suffix=".svg", dir=directory)
    os.close(fd)
    try:
        generator = QSvgGenerator()
        generator.setFileName(temp_path)
        generator.setSize(QSize(WIDTH, HEIGHT))
        generator.setViewBox(QRect(0, 0, WIDTH, HEIGHT))
        generator.setTitle(title)

        painter = QPainter()
        painter.begin(generator)
        painter.setRenderHint(QPainter.Antialiasing)
        painter.fillRect(QRect(0, 0, WIDTH, HEIGHT), QColor("#ffffff"))
        plot.draw_axes(painter, title)

        for b in range(scan.n_levels):
            levels = branches[:, b]
            grid_idx = np.arange(len(scan.g_grid))
            energies = scan.levels[grid_idx, levels]
            colors = [int(c) for c in scan.labels[grid_idx, levels]]
            for start, stop, color in _segments(colors):
                # 与下一段首点相连，避免断线
                end = min(stop + 1, len(grid_idx))
                polygon = QPolygonF([plot.point(scan.g_grid[k], energies[k]) for k in range(start, end)])
                painter.setPen(QPen(PARITY_COLORS.get(color, PARITY_COLORS[UNLABELED]), 1.4))
                painter.drawPolyline(polygon)
        painter.end()
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise
    return path
