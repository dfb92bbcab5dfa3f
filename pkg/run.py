#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
启动脚本
检查依赖后运行命令行工具
"""

import sys


def check_dependencies():
    """检查依赖包是否安装"""
    missing_packages = []

    for package in ("numpy", "scipy", "PyQt5", "psutil"):
        try:
            __import__(package)
        except ImportError:
            missing_packages.append(package)

    if missing_packages:
        print("错误: 缺少以下依赖包:")
        for package in missing_packages:
            print(f"  - {package}")
        print("\n请运行以下命令安装依赖:")
        print("pip install -r requirements.txt")
        return False

    return True


def main():
    """主函数"""
    if not check_dependencies():
        return 1

    from main import main as app_main
    return app_main()


if __name__ == "__main__":
    sys.exit(main())
