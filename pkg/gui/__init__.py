# -*- coding: utf-8 -*-
"""
绘图模块
用 Qt 的 SVG 后端输出能谱图
"""

__version__ = "1.0.0"
