"""
标签分配模块 - 按簇传递样例标签与按植物多数投票
"""
import logging
from typing import Optional, Sequence

import numpy as np

from ..clustering import ClusterAssignment
from ..exceptions import LabellingError
from .exemplars import ExemplarSet
from .labeller import Labeller

logger = logging.getLogger(__name__)


class LabelAssignment:
    """
    每张训练图像的预测标签

    confidences 为 n×c 置信度（标签传播为 F，簇方法为 one-hot）；
    labelled_indices 为交给人工标注的样例，exemplar_labels 为对应的人工标签。
    """

    def __init__(self, labels, confidences, labelled_indices, exemplar_labels,
                 method: str = '', converged: bool = True, iterations: int = 0,
                 clamp_violations: int = 0):
        self.labels = np.asarray(labels, dtype=int)
        self.confidences = np.asarray(confidences, dtype=float)
        self.labelled_indices = np.asarray(labelled_indices, dtype=int)
        self.exemplar_labels = np.asarray(exemplar_labels, dtype=int)
        self.method = method
        self.converged = bool(converged)
        self.iterations = int(iterations)
        self.clamp_violations = int(clamp_violations)
        if self.confidences.shape[0] != self.labels.size:
            raise LabellingError("置信度行数与样本数不一致")
        if self.labelled_indices.size and (
                self.labelled_indices.min() < 0 or self.labelled_indices.max() >= self.labels.size):
            raise LabellingError("样例下标超出范围")

    @property
    def n_samples(self) -> int:
        return int(self.labels.size)

    @property
    def n_labelled(self) -> int:
        return int(self.labelled_indices.size)

    def percent_labelled(self) -> float:
        """人工标注比例（%）"""
        return self.n_labelled / self.n_samples * 100.0

    def accuracy(self, y_true) -> float:
        """标注准确率（%）"""
        return float(np.mean(self.labels == np.asarray(y_true)) * 100.0)

    def with_labels(self, labels, method: Optional[str] = None) -> 'LabelAssignment':
        """复制一份并替换标签（置信度等保持不变）"""
        return LabelAssignment(labels, self.confidences, self.labelled_indices, self.exemplar_labels,
                               method=method or self.method, converged=self.converged,
                               iterations=self.iterations, clamp_violations=self.clamp_violations)


def _one_hot(labels: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((labels.size, n_classes))
    out[np.arange(labels.size), labels] = 1.0
    return out


def assign_cluster_labels(clusters: ClusterAssignment, exemplars: ExemplarSet,
                          labeller: Labeller) -> LabelAssignment:
    """
    每个（子）簇内所有样本取该簇样例的人工标签

    AP 细化的样例集合自带子簇划分，此时忽略 clusters 而按子簇传递。
    一个簇有多个样例时取其中的多数标签（平局取下标较小的类别）。

    Raises:
        LabellingError: 某个簇没有样例
    """
    if exemplars.partition is not None:
        clusters = exemplars.partition
    exemplar_labels = labeller.label_many(exemplars.indices)
    owners = exemplars.cluster_of
    if owners is None:
        owners = clusters.labels[exemplars.indices]
    votes = np.zeros((clusters.n_clusters, labeller.n_classes), dtype=int)
    np.add.at(votes, (owners, exemplar_labels), 1)
    unlabelled = np.flatnonzero(votes.sum(axis=1) == 0)
    if unlabelled.size:
        raise LabellingError(f"簇 {int(unlabelled[0])} 没有样例")
    cluster_label = np.argmax(votes, axis=1)
    labels = cluster_label[clusters.labels]
    return LabelAssignment(labels, _one_hot(labels, labeller.n_classes), exemplars.indices,
                           exemplar_labels, method=exemplars.origin)


def majority_vote(assignment: LabelAssignment, plant_ids: Sequence) -> LabelAssignment:
    """
    同一株植物的所有图像统一为其图像中的多数类别

    平局时先比较该植物各图像置信度之和，再取下标最小的类别。
    """
    if len(plant_ids) != assignment.n_samples:
        raise LabellingError("plant_ids 数量与样本数不一致")
    groups = {}
    for i, plant_id in enumerate(plant_ids):
        groups.setdefault(plant_id, []).append(i)
    n_classes = assignment.confidences.shape[1]
    labels = assignment.labels.copy()
    for members in groups.values():
        if len(members) == 1:
            continue
        counts = np.bincount(assignment.labels[members], minlength=n_classes)
        tied = np.flatnonzero(counts == counts.max())
        if tied.size > 1:
            mass = assignment.confidences[members][:, tied].sum(axis=0)
            winner = int(tied[np.argmax(mass)])
        else:
            winner = int(tied[0])
        labels[members] = winner
    return assignment.with_labels(labels)
