"""
标签传播模块 - 归一化高斯核图上的标签置信度扩散（可锁定人工标签）
"""
import logging
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from ..affinity import gaussian_affinity, normalize_propagation
from ..exceptions import LabellingError
from .assignment import LabelAssignment
from .exemplars import ExemplarSet
from .labeller import Labeller

logger = logging.getLogger(__name__)


class LPParams:
    """标签传播参数"""

    def __init__(self, alpha: float = 0.2, sigma: float = 0.16, max_iterations: int = 1000,
                 tolerance: float = 1e-6, locked: bool = False):
        if not 0.0 < alpha < 1.0:
            raise LabellingError(f"alpha 必须在 (0, 1) 内: {alpha}")
        if sigma <= 0 or max_iterations < 1 or tolerance <= 0:
            raise LabellingError("sigma、tolerance 必须为正，max_iterations 必须 >= 1")
        self.alpha = float(alpha)
        self.sigma = float(sigma)
        self.max_iterations = int(max_iterations)
        self.tolerance = float(tolerance)
        self.locked = bool(locked)

    @classmethod
    def from_config(cls, config, locked: bool = False) -> 'LPParams':
        return cls(
            alpha=config.get('lp_alpha', 0.2),
            sigma=config.get('lp_sigma', 0.16),
            max_iterations=config.get('lp_max_iterations', 1000),
            tolerance=config.get('lp_tolerance', 1e-6),
            locked=locked,
        )


class LabelMatrix:
    """n×c 非负标签矩阵（初始 Y 或传播中的 F）"""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)

    @classmethod
    def one_hot(cls, n: int, n_classes: int, rows: Sequence[int], labels: Sequence[int]) -> 'LabelMatrix':
        """标注行为 one-hot，其余行全零"""
        values = np.zeros((n, n_classes))
        values[np.asarray(rows, dtype=int), np.asarray(labels, dtype=int)] = 1.0
        return cls(values)

    def is_initial(self) -> bool:
        """每行是 one-hot 或全零"""
        row_sums = self.values.sum(axis=1)
        binary = np.isin(self.values, (0.0, 1.0)).all()
        return bool(binary and np.isin(row_sums, (0.0, 1.0)).all())

    def argmax(self) -> np.ndarray:
        """逐行取最大类别（平局取下标最小者）"""
        return np.argmax(self.values, axis=1)


def closed_form_propagation(S: np.ndarray, Y: np.ndarray, alpha: float) -> np.ndarray:
    """非锁定传播的不动点 F* = (1 - alpha)(I - alpha S)^-1 Y"""
    n = S.shape[0]
    return (1.0 - alpha) * linalg.solve(np.eye(n) - alpha * S, Y, assume_a='sym')


def propagate_labels(X, exemplars: ExemplarSet, labeller: Labeller,
                     params: Optional[LPParams] = None) -> LabelAssignment:
    """
    标签传播

    W 为全连接高斯核，S = D^-1/2 W D^-1/2。从 F = Y 开始迭代
    F <- alpha S F + (1 - alpha) Y，直到 F 的最大变化小于 tolerance。
    locked=True 时每轮之后把已标注行重置为其 one-hot 标签。

    Args:
        X: n×d 样本矩阵
        exemplars: 要交给标注者的样例
        labeller: 标注者
        params: 传播参数

    Returns:
        带置信度矩阵 F 的标签分配；未收敛时 converged=False
    """
    params = params or LPParams()
    X = np.asarray(X, dtype=float)
    if len(exemplars) == 0:
        raise LabellingError("没有样例，无法传播标签")
    n = X.shape[0]
    rows = exemplars.indices
    given = labeller.label_many(rows)
    Y = LabelMatrix.one_hot(n, labeller.n_classes, rows, given).values
    S = normalize_propagation(gaussian_affinity(X, params.sigma)).values

    F = Y.copy()
    converged = False
    iteration = 0
    for iteration in range(1, params.max_iterations + 1):
        F_new = params.alpha * (S @ F) + (1.0 - params.alpha) * Y
        if params.locked:
            F_new[rows] = Y[rows]
        change = float(np.max(np.abs(F_new - F)))
        F = F_new
        if change < params.tolerance:
            converged = True
            break
    if not converged:
        logger.warning("标签传播在 %d 轮内未收敛", params.max_iterations)

    labels = LabelMatrix(F).argmax()
    violations = int(np.sum(labels[rows] != given))
    method = 'llp' if params.locked else 'lp'
    logger.info("%s 完成: n=%d, %d 个样例, %d 轮, 覆盖人工标签 %d 个",
                method.upper(), n, rows.size, iteration, violations)
    return LabelAssignment(labels, F, rows, given, method=method, converged=converged,
                           iterations=iteration, clamp_violations=violations)
