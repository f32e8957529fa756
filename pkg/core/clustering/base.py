"""
聚类结果模块 - 样本到簇的划分
"""
from typing import List, Optional, Sequence

import numpy as np
from sklearn.metrics.cluster import contingency_matrix

from ..exceptions import ClusteringError


class ClusterAssignment:
    """
    聚类结果

    labels 为每个样本的簇下标（0..n_clusters-1 连续且每簇非空）；
    exemplar_of 仅 AP 结果提供，stats 仅层次聚类结果提供。
    """

    def __init__(self, labels, n_clusters: Optional[int] = None,
                 exemplar_of: Optional[Sequence[int]] = None,
                 stats: Optional[list] = None, converged: bool = True,
                 iterations: int = 0, method: str = ''):
        self.labels = np.asarray(labels, dtype=int)
        self.n_clusters = int(n_clusters if n_clusters is not None else
                              (self.labels.max() + 1 if self.labels.size else 0))
        self.exemplar_of = None if exemplar_of is None else np.asarray(exemplar_of, dtype=int)
        self.stats = stats
        self.converged = bool(converged)
        self.iterations = int(iterations)
        self.method = method
        self.history: List[dict] = []
        self._validate()

    def _validate(self):
        if self.labels.ndim != 1 or self.labels.size == 0:
            raise ClusteringError("labels 必须是非空一维数组")
        counts = np.bincount(self.labels, minlength=self.n_clusters)
        if self.labels.min() < 0 or counts.size != self.n_clusters or (counts == 0).any():
            raise ClusteringError("簇下标必须连续且每个簇非空")
        if self.exemplar_of is not None:
            if self.exemplar_of.size != self.n_clusters:
                raise ClusteringError("每个簇必须恰有一个样例")
            if (self.labels[self.exemplar_of] != np.arange(self.n_clusters)).any():
                raise ClusteringError("样例必须属于自己的簇")

    @classmethod
    def from_labels(cls, labels, **kwargs) -> 'ClusterAssignment':
        """按首次出现顺序把任意簇标记重编号为连续下标"""
        labels = np.asarray(labels)
        _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
        order = np.argsort(first, kind='stable')
        remap = np.empty_like(order)
        remap[order] = np.arange(order.size)
        return cls(remap[inverse.ravel()], n_clusters=order.size, **kwargs)

    @property
    def n_samples(self) -> int:
        return int(self.labels.size)

    def members(self, cluster: int) -> np.ndarray:
        """某个簇的样本下标（升序）"""
        return np.flatnonzero(self.labels == cluster)

    def clusters(self) -> List[np.ndarray]:
        return [self.members(k) for k in range(self.n_clusters)]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_clusters)

    def purity(self, y_true) -> float:
        """簇纯度：每簇多数类样本数之和 / 样本总数"""
        table = contingency_matrix(np.asarray(y_true), self.labels)
        return float(table.max(axis=0).sum() / self.n_samples)

    def __repr__(self) -> str:
        return (f"ClusterAssignment(method={self.method!r}, n={self.n_samples}, "
                f"clusters={self.n_clusters}, converged={self.converged})")
