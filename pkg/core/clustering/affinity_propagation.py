"""
亲和传播聚类模块 - 责任度/可用度消息传递

确定性实现：不使用随机扰动，相同输入总是得到相同结果。
"""
import logging
from typing import Optional, Union

import numpy as np

from ..affinity import AffinityMatrix
from ..exceptions import ClusteringError
from .base import ClusterAssignment

logger = logging.getLogger(__name__)

TIE_BREAK_SCALE = 1e-12


class APParams:
    """亲和传播参数"""

    def __init__(self, damping: float = 0.5, preference: Union[str, float] = 'median',
                 max_iterations: int = 1000, convergence_window: int = 50):
        if not 0.0 < damping < 1.0:
            raise ClusteringError(f"damping 必须在 (0, 1) 内: {damping}")
        if preference != 'median' and not isinstance(preference, (int, float)):
            raise ClusteringError(f"preference 只能是 'median' 或数值: {preference!r}")
        if max_iterations < 1 or convergence_window < 1:
            raise ClusteringError("max_iterations 和 convergence_window 必须 >= 1")
        self.damping = float(damping)
        self.preference = preference
        self.max_iterations = int(max_iterations)
        self.convergence_window = int(convergence_window)

    @classmethod
    def from_config(cls, config) -> 'APParams':
        return cls(
            damping=config.get('ap_damping', 0.5),
            preference=config.get('ap_preference', 'median'),
            max_iterations=config.get('ap_max_iterations', 1000),
            convergence_window=config.get('ap_convergence_window', 50),
        )


def resolve_preference(S: np.ndarray, preference: Union[str, float]) -> float:
    """preference='median' 时取非对角相似度的中位数"""
    if preference == 'median':
        off_diagonal = S[~np.eye(S.shape[0], dtype=bool)]
        return float(np.median(off_diagonal))
    return float(preference)


class APState:
    """消息传递状态：责任度 r(i,k)、可用度 a(i,k) 与相似度 s(i,k)"""

    def __init__(self, similarity: np.ndarray):
        S = np.array(similarity, dtype=float)
        n = S.shape[0]
        # 按列下标递减的扰动消除对称退化，平局时偏向较小下标；
        # 幅度随 S 的取值范围缩放，须远大于消息更新的舍入误差
        ramp = (n - np.arange(n, dtype=float)) / n
        spread = float(np.ptp(S)) or float(np.abs(S).max()) or 1.0
        S += TIE_BREAK_SCALE * spread * ramp[None, :]
        self.similarity = S
        self.responsibility = np.zeros_like(S)
        self.availability = np.zeros_like(S)

    def update(self, damping: float):
        """执行一轮带阻尼的责任度与可用度更新"""
        S = self.similarity
        R = self.responsibility
        A = self.availability
        rows = np.arange(S.shape[0])

        AS = A + S
        best = np.argmax(AS, axis=1)
        first = AS[rows, best]
        AS[rows, best] = -np.inf
        second = np.max(AS, axis=1)
        R_new = S - first[:, None]
        R_new[rows, best] = S[rows, best] - second
        R = damping * R + (1.0 - damping) * R_new

        Rp = np.maximum(R, 0.0)
        Rp[rows, rows] = R[rows, rows]
        A_new = Rp.sum(axis=0)[None, :] - Rp
        self_availability = A_new[rows, rows].copy()
        A_new = np.minimum(A_new, 0.0)
        A_new[rows, rows] = self_availability
        A = damping * A + (1.0 - damping) * A_new

        if not (np.isfinite(R).all() and np.isfinite(A).all()):
            raise ClusteringError("消息出现非有限值")
        self.responsibility = R
        self.availability = A

    def evidence(self) -> np.ndarray:
        """r(k,k) + a(k,k)"""
        return np.diag(self.responsibility) + np.diag(self.availability)

    def exemplars(self) -> np.ndarray:
        """当前样例集合（升序下标）"""
        return np.flatnonzero(self.evidence() > 0)


def _assign(similarity: np.ndarray, exemplars: np.ndarray) -> np.ndarray:
    """每个样本归到相似度最高的样例，样例归属自身"""
    labels = np.argmax(similarity[:, exemplars], axis=1)
    labels[exemplars] = np.arange(exemplars.size)
    return labels


def affinity_propagation(S: Union[AffinityMatrix, np.ndarray],
                         params: Optional[APParams] = None) -> ClusterAssignment:
    """
    亲和传播聚类

    对角线设为 preference，迭代直到样例集合连续 convergence_window 轮不变
    或达到 max_iterations。每个样本归到相似度最高的样例（平局取下标最小者），
    样例归属自身；随后每个簇换成簇内相似度之和最大的成员作样例并重新分配一次。

    Args:
        S: 余弦相似度矩阵（或任意对称相似度数组）
        params: AP 参数

    Returns:
        带 exemplar_of 的聚类结果；未收敛时 converged=False
    """
    params = params or APParams()
    values = S.values if isinstance(S, AffinityMatrix) else np.asarray(S, dtype=float)
    n = values.shape[0]
    if values.ndim != 2 or values.shape[1] != n or n < 2:
        raise ClusteringError(f"相似度矩阵必须是 n×n 且 n >= 2: {values.shape}")

    similarity = np.array(values, dtype=float)
    preference = resolve_preference(similarity, params.preference)
    np.fill_diagonal(similarity, preference)

    state = APState(similarity)
    previous = None
    stable = 0
    converged = False
    iteration = 0
    for iteration in range(1, params.max_iterations + 1):
        state.update(params.damping)
        current = state.exemplars()
        if previous is not None and np.array_equal(current, previous):
            stable += 1
        else:
            stable = 0
        previous = current
        if stable >= params.convergence_window and current.size > 0:
            converged = True
            break

    exemplars = state.exemplars()
    if exemplars.size == 0:
        # 没有任何样例时退回证据最大的单个样本
        exemplars = np.array([int(np.argmax(state.evidence()))])
        converged = False
    if not converged:
        logger.warning("AP 在 %d 轮内未收敛，返回当前划分 (%d 个样例)", iteration, exemplars.size)

    labels = _assign(similarity, exemplars)
    # 每个簇改用簇内相似度之和最大的成员作样例，再重新分配
    for k in range(exemplars.size):
        members = np.flatnonzero(labels == k)
        exemplars[k] = members[np.argmax(similarity[np.ix_(members, members)].sum(axis=0))]
    exemplars = np.sort(exemplars)
    labels = _assign(similarity, exemplars)
    result = ClusterAssignment(labels, n_clusters=exemplars.size, exemplar_of=exemplars,
                               converged=converged, iterations=iteration, method='ap')
    logger.info("AP 完成: n=%d, %d 个簇, %d 轮, preference=%.4f", n, exemplars.size,
                iteration, preference)
    return result
