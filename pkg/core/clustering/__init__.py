"""
聚类模块 - 亲和传播、锁定层次聚类和 k-means
"""

from .base import ClusterAssignment
from .affinity_propagation import APParams, APState, affinity_propagation, resolve_preference
from .kmeans import KMeansParams, KMeansRun, kmeans, kmeans_plusplus
from .hierarchical import (
    GaussianClusterStats, HierParams, delta_bic, kl2_distance, locked_hierarchical,
)

__all__ = [
    'ClusterAssignment',
    'APParams', 'APState', 'affinity_propagation', 'resolve_preference',
    'KMeansParams', 'KMeansRun', 'kmeans', 'kmeans_plusplus',
    'GaussianClusterStats', 'HierParams', 'delta_bic', 'kl2_distance', 'locked_hierarchical',
]
