"""
相似度矩阵模块 - 余弦相似度、欧氏距离、高斯核与对称归一化传播矩阵
"""
import logging
from enum import Enum
from pathlib import Path
from typing import Optional, Union

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .exceptions import AffinityError, ZeroNormError

logger = logging.getLogger(__name__)


class AffinityKind(str, Enum):
    COSINE_SIMILARITY = 'cosine_similarity'
    EUCLIDEAN_DISTANCE = 'euclidean_distance'
    GAUSSIAN_KERNEL = 'gaussian_kernel'
    NORMALIZED_PROPAGATION = 'normalized_propagation'


class AffinityMatrix:
    """构造后不可修改的 n×n 对称矩阵"""

    def __init__(self, values: np.ndarray, kind: AffinityKind, sigma: Optional[float] = None):
        values = np.array(values, dtype=float)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise AffinityError(f"矩阵必须是方阵: {values.shape}")
        values.setflags(write=False)
        self.values = values
        self.kind = AffinityKind(kind)
        self.sigma = sigma

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def submatrix(self, indices) -> 'AffinityMatrix':
        """取若干样本之间的子矩阵"""
        idx = np.asarray(indices, dtype=int)
        return AffinityMatrix(self.values[np.ix_(idx, idx)], self.kind, self.sigma)

    def __repr__(self) -> str:
        return f"AffinityMatrix(n={self.n}, kind={self.kind.value})"


def _as_samples(X, min_rows: int = 2) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise AffinityError(f"输入必须是 n×d 矩阵: {X.shape}")
    if X.shape[0] < min_rows:
        raise AffinityError(f"至少需要 {min_rows} 个样本，实际 {X.shape[0]}")
    return X


def cosine_similarity_matrix(X) -> AffinityMatrix:
    """
    余弦相似度矩阵

    Args:
        X: n×d 样本矩阵，不允许零向量行

    Returns:
        值域 [-1, 1] 的对称矩阵，对角线为 1
    """
    X = _as_samples(X)
    norms = np.linalg.norm(X, axis=1)
    bad = np.flatnonzero(norms == 0.0)
    if bad.size:
        raise ZeroNormError(f"第 {int(bad[0])} 行为零向量，余弦相似度无定义")
    U = X / norms[:, None]
    S = U @ U.T
    S = np.clip((S + S.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(S, 1.0)
    return AffinityMatrix(S, AffinityKind.COSINE_SIMILARITY)


def pairwise_euclidean(X) -> AffinityMatrix:
    """两两欧氏距离，对角线为 0"""
    X = _as_samples(X)
    return AffinityMatrix(squareform(pdist(X, 'euclidean')), AffinityKind.EUCLIDEAN_DISTANCE)


def median_pairwise_distance(X) -> float:
    """所有 n(n-1)/2 个样本对距离的中位数（偶数个时取中间两个的平均）"""
    X = _as_samples(X)
    return float(np.median(pdist(X, 'euclidean')))


def gaussian_affinity(X, sigma: float) -> AffinityMatrix:
    """
    全连接高斯核 W[i][j] = exp(-|xi - xj|^2 / (2 sigma^2))，对角线置 0

    Args:
        X: n×d 样本矩阵
        sigma: 核标准差，必须为正

    Returns:
        gaussian_kernel 类型的矩阵
    """
    if not sigma or sigma <= 0:
        raise AffinityError(f"sigma 必须为正: {sigma}")
    X = _as_samples(X)
    sq = pdist(X, 'sqeuclidean')
    W = squareform(np.exp(-sq / (2.0 * sigma * sigma)))
    return AffinityMatrix(W, AffinityKind.GAUSSIAN_KERNEL, sigma=float(sigma))


def normalize_propagation(W: AffinityMatrix) -> AffinityMatrix:
    """
    对称归一化 S = D^-1/2 W D^-1/2

    Raises:
        AffinityError: 输入不是非负、零对角的高斯核，或存在度为 0 的孤立样本
    """
    if W.kind != AffinityKind.GAUSSIAN_KERNEL:
        raise AffinityError(f"需要 gaussian_kernel 矩阵，实际 {W.kind.value}")
    values = W.values
    if (values < 0).any():
        raise AffinityError("核矩阵含负值")
    if np.any(np.diag(values) != 0.0):
        raise AffinityError("核矩阵对角线必须为 0")
    degree = values.sum(axis=1)
    isolated = np.flatnonzero(degree <= 0.0)
    if isolated.size:
        raise AffinityError(f"样本 {int(isolated[0])} 度为 0，无法归一化")
    inv_sqrt = 1.0 / np.sqrt(degree)
    S = values * inv_sqrt[:, None] * inv_sqrt[None, :]
    S = (S + S.T) / 2.0
    return AffinityMatrix(S, AffinityKind.NORMALIZED_PROPAGATION, sigma=W.sigma)


def spectral_radius(matrix: Union[AffinityMatrix, np.ndarray], iterations: int = 500,
                    seed: int = 0) -> float:
    """幂迭代估计对称矩阵的谱半径"""
    values = matrix.values if isinstance(matrix, AffinityMatrix) else np.asarray(matrix, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(values.shape[0])
    v /= np.linalg.norm(v)
    estimate = 0.0
    for _ in range(iterations):
        w = values @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        # 对称矩阵用 |Av| 作为估计，正负特征值都适用
        estimate = norm
        v = w / norm
    return float(estimate)


def dump_matrix_csv(matrix: AffinityMatrix, path: Union[str, Path]) -> Path:
    """按行优先导出完整矩阵，便于调试"""
    path = Path(path)
    np.savetxt(path, matrix.values, delimiter=',', fmt='%.17g')
    return path
