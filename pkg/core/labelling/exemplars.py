"""
样例选择模块 - 簇均值样例、AP 样例、AP 细化样例与随机样例
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from ..affinity import cosine_similarity_matrix
from ..clustering import APParams, ClusterAssignment, affinity_propagation
from ..exceptions import LabellingError

logger = logging.getLogger(__name__)

ORIGINS = ('cluster_mean', 'ap_exemplar', 'ap_refine', 'random')


class ExemplarSet:
    """
    交给标注者的样例集合

    cluster_of[i] 为第 i 个样例所代表的（子）簇下标；随机样例没有所属簇。
    AP 细化时 partition 记录子簇划分，标签按子簇传递。
    """

    def __init__(self, indices: Sequence[int], origin: str,
                 cluster_of: Optional[Sequence[int]] = None,
                 partition: Optional[ClusterAssignment] = None,
                 parent_of: Optional[Sequence[int]] = None):
        if origin not in ORIGINS:
            raise LabellingError(f"未知样例来源: {origin!r}")
        self.indices = np.asarray(indices, dtype=int)
        if self.indices.size == 0:
            raise LabellingError("样例集合为空")
        if np.unique(self.indices).size != self.indices.size:
            raise LabellingError("样例下标重复")
        self.origin = origin
        self.cluster_of = None if cluster_of is None else np.asarray(cluster_of, dtype=int)
        self.partition = partition
        self.parent_of = None if parent_of is None else np.asarray(parent_of, dtype=int)

    @classmethod
    def from_ap(cls, clusters: ClusterAssignment) -> 'ExemplarSet':
        """直接使用 AP 聚类自身的样例"""
        if clusters.exemplar_of is None:
            raise LabellingError("聚类结果没有样例（不是 AP 结果）")
        return cls(clusters.exemplar_of, 'ap_exemplar', cluster_of=np.arange(clusters.n_clusters))

    @property
    def subcluster_of(self) -> Optional[np.ndarray]:
        """AP 细化时每个样本所属的子簇下标"""
        return None if self.partition is None else self.partition.labels

    def __len__(self) -> int:
        return int(self.indices.size)

    def __repr__(self) -> str:
        return f"ExemplarSet(origin={self.origin!r}, count={len(self)})"


def mean_exemplars(X, clusters: ClusterAssignment) -> ExemplarSet:
    """
    每个簇取离簇均值最近的样本作为样例（平局取下标最小者）

    Args:
        X: n×d 样本矩阵
        clusters: 聚类结果

    Returns:
        每簇恰好一个样例
    """
    X = np.asarray(X, dtype=float)
    picks = []
    for cluster in range(clusters.n_clusters):
        members = clusters.members(cluster)
        centre = X[members].mean(axis=0)
        distance = np.linalg.norm(X[members] - centre, axis=1)
        picks.append(int(members[np.argmin(distance)]))
    return ExemplarSet(picks, 'cluster_mean', cluster_of=np.arange(clusters.n_clusters))


def ap_refine_exemplars(X, clusters: ClusterAssignment,
                        ap_params: Optional[APParams] = None) -> ExemplarSet:
    """
    在每个簇内部用各自的余弦相似度矩阵再做一次 AP，输出所有子簇样例

    单样本簇直接以自身为样例。子簇划分记录在 partition 中，
    后续标签按子簇（而不是父簇）传递。
    """
    X = np.asarray(X, dtype=float)
    ap_params = ap_params or APParams()
    sub_labels = np.empty(clusters.n_samples, dtype=int)
    exemplars: List[int] = []
    parents: List[int] = []
    for cluster in range(clusters.n_clusters):
        members = clusters.members(cluster)
        offset = len(exemplars)
        if members.size == 1:
            sub_labels[members] = offset
            exemplars.append(int(members[0]))
            parents.append(cluster)
            continue
        sub = affinity_propagation(cosine_similarity_matrix(X[members]), ap_params)
        sub_labels[members] = offset + sub.labels
        exemplars.extend(int(members[e]) for e in sub.exemplar_of)
        parents.extend([cluster] * sub.n_clusters)
    partition = ClusterAssignment(sub_labels, n_clusters=len(exemplars), exemplar_of=exemplars,
                                  method='ap_refine')
    logger.info("AP 细化: %d 个簇 -> %d 个子簇样例", clusters.n_clusters, len(exemplars))
    return ExemplarSet(exemplars, 'ap_refine', cluster_of=np.arange(len(exemplars)),
                       partition=partition, parent_of=parents)


def random_exemplars(n: int, m: int, seed: int) -> ExemplarSet:
    """从 n 个样本中无放回均匀抽取 m 个样例（可由种子复现）"""
    if m < 1 or m > n:
        raise LabellingError(f"样例数 m={m} 必须在 [1, n={n}] 内")
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(n, size=m, replace=False))
    return ExemplarSet(picks, 'random')
