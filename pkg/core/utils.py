"""
工具函数模块 - 日志、随机种子和运行环境
"""
import hashlib
import logging
import sys
from typing import Optional

import psutil

_LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def setup_logging(level: int = logging.INFO):
    """为命令行配置单一的 stderr 日志输出"""
    root = logging.getLogger()
    for handler in list(root.handlers):
        root.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(_LOG_FORMAT))
    root.addHandler(handler)
    root.setLevel(level)


def derive_seed(master_seed: int, *keys) -> int:
    """
    从主种子和若干键派生稳定的 64 位子种子

    与 Python 内置 hash 不同，结果在不同进程之间保持一致，
    因此只重跑部分实验单元时也能得到相同结果。

    Args:
        master_seed: 主种子
        keys: 任意可转为字符串的键，例如 (策略名, 预算, 重复序号)

    Returns:
        64 位无符号整数种子
    """
    text = '|'.join([str(int(master_seed))] + [str(k) for k in keys])
    digest = hashlib.sha256(text.encode('utf-8')).digest()
    return int.from_bytes(digest[:8], 'little')


def default_worker_count(requested: Optional[int] = None) -> int:
    """获取并行工作线程数（0 或 None 表示使用物理核心数）"""
    if requested and requested > 0:
        return int(requested)
    count = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    return max(1, int(count))


def peak_memory_mb() -> float:
    """当前进程常驻内存（MB）"""
    return psutil.Process().memory_info().rss / (1024 * 1024)
