# -*- coding: utf-8 -*-
"""
核心模块
Fock 代数、模型哈密顿量、对称算符、能谱扫描与任务调度
"""

__version__ = "1.0.0"
