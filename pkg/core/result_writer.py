#!/usr/bin/env python3
# -*- coding: utf-8 -*-
"""
结果写入器
以原子方式 (临时文件 + 重命名) 写出 CSV 与 JSON 结果
"""

import os
import csv
import json
import math
import tempfile
from typing import Any, Callable, Iterable, Sequence

import numpy as np


def to_plain(value: Any) -> Any:
    """把 numpy 标量/数组和元组转换成 JSON 可写的普通对象，非有限浮点数写成 null"""
    if isinstance(value, dict):
        return {str(k): to_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def format_float(value: float) -> str:
    """最短的可精确回读的十进制表示"""
    return repr(float(value))


class ResultWriter:
    """输出目录下的原子写入"""

    def __init__(self, output_dir: str, verbose: bool = True):
        self.output_dir = output_dir
        self.verbose = verbose
        os.makedirs(self.output_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def atomic_write(self, name: str, write: Callable[[Any], None], newline: str = None) -> str:
        """先写同目录下的临时文件，再 os.replace 到目标位置"""
        target = self.path(name)
        fd, temp_path = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=self.output_dir)
        try:
            with os.fdopen(fd, 'w', encoding='utf-8', newline=newline) as f:
                write(f)
            os.replace(temp_path, target)
        except BaseException:
            if os.path.exists(temp_path):
                os.remove(temp_path)
            raise
        if self.verbose:
            print(f"结果已保存: {target}")
        return target

    def write_json(self, name: str, data: Any) -> str:
        def write(f):
            json.dump(to_plain(data), f, indent=2, ensure_ascii=False)
            f.write("\n")
        return self.atomic_write(name, write)

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
        def write(f):
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
        return self.atomic_write(name, write, newline="")
