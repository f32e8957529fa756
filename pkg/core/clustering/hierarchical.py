"""
锁定层次聚类模块 - KL2 距离合并、ΔBIC 停止

同一株植物的多张图像在初始化时就锁定在同一个簇中；算法只合并不拆分，
因此锁定关系在结果中总是成立。
"""
import logging
from typing import List, Optional, Sequence, Union

import numpy as np

from ..affinity import median_pairwise_distance
from ..exceptions import ClusteringError
from .base import ClusterAssignment

logger = logging.getLogger(__name__)


class HierParams:
    """层次聚类参数"""

    def __init__(self, bic_lambda: float = 1.0, variance_floor: float = 1e-6,
                 singleton_std: Union[str, float] = 'median_pairwise',
                 locked_group_stats: str = 'singleton', singleton_fallback: bool = True):
        if bic_lambda <= 0 or variance_floor <= 0:
            raise ClusteringError("bic_lambda 和 variance_floor 必须为正")
        if singleton_std != 'median_pairwise' and (
                not isinstance(singleton_std, (int, float)) or singleton_std <= 0):
            raise ClusteringError(f"singleton_std 只能是 'median_pairwise' 或正数: {singleton_std!r}")
        if locked_group_stats not in ('empirical', 'singleton'):
            raise ClusteringError(f"locked_group_stats 只能是 empirical 或 singleton: {locked_group_stats!r}")
        self.bic_lambda = float(bic_lambda)
        self.variance_floor = float(variance_floor)
        self.singleton_std = singleton_std
        self.locked_group_stats = locked_group_stats
        self.singleton_fallback = bool(singleton_fallback)

    @classmethod
    def from_config(cls, config) -> 'HierParams':
        return cls(
            bic_lambda=config.get('hier_bic_lambda', 1.0),
            variance_floor=config.get('hier_variance_floor', 1e-6),
            singleton_std=config.get('hier_singleton_std', 'median_pairwise'),
            locked_group_stats=config.get('hier_locked_group_stats', 'singleton'),
            singleton_fallback=config.get('hier_singleton_fallback', True),
        )


class GaussianClusterStats:
    """对角协方差高斯簇模型"""

    def __init__(self, mean, variance, count: int):
        self.mean = np.asarray(mean, dtype=float)
        self.variance = np.asarray(variance, dtype=float)
        self.count = int(count)
        if self.count < 1:
            raise ClusteringError("簇样本数必须 >= 1")

    @classmethod
    def singleton(cls, points: np.ndarray, std: float, floor: float) -> 'GaussianClusterStats':
        """孤立样本（或按孤立样本处理的锁定组）：均值取位置，各维标准差取 std"""
        points = np.atleast_2d(points)
        variance = np.full(points.shape[1], max(std * std, floor))
        return cls(points.mean(axis=0), variance, points.shape[0])

    @classmethod
    def from_samples(cls, points: np.ndarray, floor: float, singleton_std: float,
                     fallback: bool = True) -> 'GaussianClusterStats':
        """
        由样本估计经验均值和逐维方差

        样本数不足 2 时方差无法估计：fallback=True 时退回孤立样本标准差，
        否则使用方差下限。
        """
        points = np.atleast_2d(points)
        if points.shape[0] < 2:
            std = singleton_std if fallback else 0.0
            return cls.singleton(points, std, floor)
        variance = np.maximum(points.var(axis=0), floor)
        return cls(points.mean(axis=0), variance, points.shape[0])

    def log_det(self) -> float:
        """对角协方差行列式的对数"""
        return float(np.sum(np.log(self.variance)))


def kl2_distance(a: GaussianClusterStats, b: GaussianClusterStats) -> float:
    """
    对称 KL 散度 KL(a||b) + KL(b||a)（对角高斯）

    1/2 * sum[ va/vb + vb/va - 2 + (ma - mb)^2 (1/va + 1/vb) ]
    """
    va, vb = a.variance, b.variance
    diff2 = (a.mean - b.mean) ** 2
    value = 0.5 * np.sum(va / vb + vb / va - 2.0 + diff2 * (1.0 / va + 1.0 / vb))
    return max(float(value), 0.0)


def _kl2_to_many(a: GaussianClusterStats, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    va = a.variance[None, :]
    diff2 = (a.mean[None, :] - means) ** 2
    values = 0.5 * np.sum(va / variances + variances / va - 2.0
                          + diff2 * (1.0 / va + 1.0 / variances), axis=1)
    return np.maximum(values, 0.0)


def delta_bic(a: GaussianClusterStats, b: GaussianClusterStats,
              merged: GaussianClusterStats, N: int, params: HierParams) -> float:
    """
    合并两个簇的 ΔBIC，>= 0 表示允许合并

    ΔBIC = na ln|Σa| + nb ln|Σb| - nm ln|Σm| + λ p ln N，p = 2d
    """
    if merged.count != a.count + b.count:
        raise ClusteringError("merged.count 必须等于 a.count + b.count")
    p = 2 * a.mean.shape[0]
    return (a.count * a.log_det() + b.count * b.log_det() - merged.count * merged.log_det()
            + params.bic_lambda * p * np.log(N))


def _initial_groups(n: int, plant_ids: Optional[Sequence]) -> List[List[int]]:
    if plant_ids is None:
        return [[i] for i in range(n)]
    if len(plant_ids) != n:
        raise ClusteringError(f"plant_ids 数量 {len(plant_ids)} 与样本数 {n} 不一致")
    groups = {}
    for i, plant_id in enumerate(plant_ids):
        groups.setdefault(plant_id, []).append(i)
    return list(groups.values())


def locked_hierarchical(X, plant_ids: Optional[Sequence] = None,
                        params: Optional[HierParams] = None) -> ClusterAssignment:
    """
    锁定凝聚层次聚类

    以植物分组初始化（无分组时每个样本单独成簇），反复合并 KL2 距离最近的一对簇，
    当最近一对的 ΔBIC < 0 或只剩一个簇时停止。

    Args:
        X: n×d 样本矩阵
        plant_ids: 每个样本的植物 id，None 表示没有分组
        params: 层次聚类参数

    Returns:
        带每簇高斯统计量的聚类结果
    """
    params = params or HierParams()
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ClusteringError(f"至少需要 2 个样本，实际 {n}")
    if params.singleton_std == 'median_pairwise':
        singleton_std = median_pairwise_distance(X)
    else:
        singleton_std = float(params.singleton_std)
    floor = params.variance_floor

    members = _initial_groups(n, plant_ids)
    stats: List[GaussianClusterStats] = []
    for group in members:
        if params.locked_group_stats == 'empirical' and len(group) > 1:
            stats.append(GaussianClusterStats.from_samples(X[group], floor, singleton_std,
                                                           params.singleton_fallback))
        else:
            stats.append(GaussianClusterStats.singleton(X[group], singleton_std, floor))

    c = len(members)
    means = np.vstack([s.mean for s in stats])
    variances = np.vstack([s.variance for s in stats])
    distance = np.full((c, c), np.inf)
    for i in range(c - 1):
        distance[i, i + 1:] = _kl2_to_many(stats[i], means[i + 1:], variances[i + 1:])
    alive = list(range(c))
    history = []

    while len(alive) > 1:
        sub = distance[np.ix_(alive, alive)]
        flat = int(np.argmin(sub))
        i, j = alive[flat // len(alive)], alive[flat % len(alive)]
        merged_members = members[i] + members[j]
        merged = GaussianClusterStats.from_samples(X[merged_members], floor, singleton_std,
                                                   params.singleton_fallback)
        dbic = delta_bic(stats[i], stats[j], merged, n, params)
        logger.debug("候选合并 %d+%d: KL2=%.6g, ΔBIC=%.6g", i, j, sub.flat[flat], dbic)
        if dbic < 0:
            break
        history.append({'n_clusters_before': len(alive), 'kl2': float(sub.flat[flat]),
                        'delta_bic': float(dbic)})
        members[i] = sorted(merged_members)
        stats[i] = merged
        means[i], variances[i] = merged.mean, merged.variance
        alive.remove(j)
        distance[j, :] = np.inf
        distance[:, j] = np.inf
        # 只维护上三角：i 行对更大下标，i 列对更小下标
        others = np.array([k for k in alive if k != i], dtype=int)
        if others.size:
            kl = _kl2_to_many(merged, means[others], variances[others])
            for k, value in zip(others, kl):
                if k > i:
                    distance[i, k] = value
                else:
                    distance[k, i] = value

    labels = np.empty(n, dtype=int)
    final_stats = []
    for cluster, index in enumerate(alive):
        labels[members[index]] = cluster
        final_stats.append(stats[index])
    result = ClusterAssignment(labels, n_clusters=len(alive), stats=final_stats,
                               iterations=len(history), method='hierarchical')
    result.history = history
    logger.info("锁定层次聚类完成: %d 个初始组 -> %d 个簇 (%d 次合并)", c, len(alive), len(history))
    return result
