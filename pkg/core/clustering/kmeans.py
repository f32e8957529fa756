"""
k-means 聚类模块 - k-means++ 初始化与多次重复运行
"""
import logging
from typing import List, Optional

import numpy as np
from scipy.spatial.distance import cdist

from ..exceptions import ClusteringError
from .base import ClusterAssignment

logger = logging.getLogger(__name__)


class KMeansParams:
    """k-means 参数"""

    def __init__(self, k: int, n_runs: int = 10, max_iterations: int = 300,
                 tolerance: float = 1e-6, seed: int = 0):
        if k < 1 or n_runs < 1 or max_iterations < 1:
            raise ClusteringError("k、n_runs、max_iterations 必须 >= 1")
        if tolerance < 0:
            raise ClusteringError("tolerance 不能为负")
        self.k = int(k)
        self.n_runs = int(n_runs)
        self.max_iterations = int(max_iterations)
        self.tolerance = float(tolerance)
        self.seed = int(seed)

    @classmethod
    def from_config(cls, config, k: int, seed: Optional[int] = None) -> 'KMeansParams':
        return cls(
            k=k,
            n_runs=config.get('kmeans_runs', 10),
            max_iterations=config.get('kmeans_max_iterations', 300),
            tolerance=config.get('kmeans_tolerance', 1e-6),
            seed=config.get('master_seed', 0) if seed is None else seed,
        )


class KMeansRun:
    """单次 k-means 运行的结果"""

    def __init__(self, assignment: ClusterAssignment, centroids: np.ndarray,
                 inertia: float, inertia_history: List[float], seed: int):
        self.assignment = assignment
        self.centroids = centroids
        self.inertia = inertia
        self.inertia_history = inertia_history  # 每轮 Lloyd 迭代后的惯性
        self.seed = seed


def kmeans_plusplus(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ 初始化，返回被选为初始中心的样本下标"""
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    closest = cdist(X, X[chosen], 'sqeuclidean').ravel()
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            pick = int(rng.choice(n, p=closest / total))
        else:
            # 剩余样本都与已选中心重合，均匀选取未选过的样本
            remaining = np.setdiff1d(np.arange(n), chosen)
            pick = int(rng.choice(remaining))
        chosen.append(pick)
        closest = np.minimum(closest, cdist(X, X[[pick]], 'sqeuclidean').ravel())
    return np.array(chosen, dtype=int)


def _fill_empty_clusters(X: np.ndarray, labels: np.ndarray, centroids: np.ndarray, k: int) -> np.ndarray:
    """把离自身中心最远的样本移入空簇"""
    labels = labels.copy()
    while True:
        counts = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return labels
        dist = np.sum((X - centroids[labels]) ** 2, axis=1)
        movable = counts[labels] > 1
        dist = np.where(movable, dist, -np.inf)
        donor = int(np.argmax(dist))
        labels[donor] = empty[0]
        centroids[empty[0]] = X[donor]


def _lloyd(X: np.ndarray, centroids: np.ndarray, params: KMeansParams):
    k = params.k
    history: List[float] = []
    labels = None
    for iteration in range(1, params.max_iterations + 1):
        labels = np.argmin(cdist(X, centroids, 'sqeuclidean'), axis=1)
        labels = _fill_empty_clusters(X, labels, centroids, k)
        new_centroids = np.vstack([X[labels == j].mean(axis=0) for j in range(k)])
        history.append(float(np.sum((X - new_centroids[labels]) ** 2)))
        shift = float(np.max(np.linalg.norm(new_centroids - centroids, axis=1)))
        centroids = new_centroids
        if shift < params.tolerance:
            return labels, centroids, history, True, iteration
    return labels, centroids, history, False, params.max_iterations


def kmeans(X, params: KMeansParams) -> List[KMeansRun]:
    """
    重复 n_runs 次 k-means，每次使用从主种子派生的独立随机数发生器

    Args:
        X: n×d 样本矩阵
        params: k-means 参数

    Returns:
        每次运行一个 KMeansRun（含聚类结果与惯性）

    Raises:
        ClusteringError: k > n
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if params.k > n:
        raise ClusteringError(f"k={params.k} 大于样本数 {n}")
    runs = []
    for run_index, child in enumerate(np.random.SeedSequence(params.seed).spawn(params.n_runs)):
        rng = np.random.default_rng(child)
        seeds = kmeans_plusplus(X, params.k, rng)
        labels, centroids, history, converged, iterations = _lloyd(X, X[seeds].copy(), params)
        assignment = ClusterAssignment(labels, n_clusters=params.k, converged=converged,
                                       iterations=iterations, method='kmeans')
        runs.append(KMeansRun(assignment, centroids, history[-1], history,
                              int(child.generate_state(1, np.uint64)[0])))
        logger.debug("k-means 第 %d 次: inertia=%.6g, %d 轮", run_index, history[-1], iterations)
    logger.info("k-means 完成: k=%d, %d 次运行, 最小 inertia=%.6g",
                params.k, len(runs), min(r.inertia for r in runs))
    return runs
