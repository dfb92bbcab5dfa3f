#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
Setup script for the rabi-sym command line tool
"""

from setuptools import setup, find_packages

setup(
    name="rabi-sym",
    version="1.0.0",
    description="非对称双光子Rabi模型的隐藏对称性与能谱工具",
    packages=find_packages(exclude=["test"]),
    py_modules=["main", "run"],
    python_requires=">=3.8",
    install_requires=[
        'numpy>=1.22',
        'scipy>=1.9',
        'PyQt5>=5.15.0',
        'psutil>=5.9.0',
    ],
    extras_require={
        'test': ['pytest>=7.0'],
    },
    entry_points={
        'console_scripts': [
            'rabi-sym=main:main',
        ],
    },
)
