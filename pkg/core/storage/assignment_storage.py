"""
分配结果存储模块 - 聚类/标签导出与人工标注文件读取
"""
import logging
from pathlib import Path
from typing import Dict, Sequence, Union

import numpy as np
import pandas as pd

from ..clustering import ClusterAssignment
from ..exceptions import LabellingError
from ..labelling import ExemplarSet, LabelAssignment
from .base import BaseStorage

logger = logging.getLogger(__name__)


class AssignmentStorage(BaseStorage):
    """聚类结果、标签分配和标注文件的 CSV 读写"""

    def save_clusters(self, clusters: ClusterAssignment, image_ids: Sequence[str],
                      exemplar_indices=None, name: Union[str, Path] = 'clusters.csv') -> Path:
        """
        导出聚类结果: image_id, cluster_index, is_exemplar

        Args:
            clusters: 聚类结果
            image_ids: 与聚类样本一一对应的图像 id
            exemplar_indices: 样例下标，默认使用 AP 自身的样例
            name: 文件名
        """
        if exemplar_indices is None:
            exemplar_indices = clusters.exemplar_of if clusters.exemplar_of is not None else []
        is_exemplar = np.zeros(clusters.n_samples, dtype=bool)
        is_exemplar[np.asarray(exemplar_indices, dtype=int)] = True
        frame = pd.DataFrame({
            'image_id': list(image_ids),
            'cluster_index': clusters.labels,
            'is_exemplar': is_exemplar,
        })
        return self._save_csv(name, frame)

    def save_labels(self, assignment: LabelAssignment, image_ids: Sequence[str],
                    class_names: Sequence[str], name: Union[str, Path] = 'labels.csv') -> Path:
        """导出标签分配: image_id, assigned_label, was_exemplar"""
        was_exemplar = np.zeros(assignment.n_samples, dtype=bool)
        was_exemplar[assignment.labelled_indices] = True
        frame = pd.DataFrame({
            'image_id': list(image_ids),
            'assigned_label': [class_names[i] for i in assignment.labels],
            'was_exemplar': was_exemplar,
        })
        return self._save_csv(name, frame)

    def save_exemplar_requests(self, exemplars: Union[ExemplarSet, Sequence[int]],
                               image_ids: Sequence[str],
                               name: Union[str, Path] = 'exemplars.csv') -> Path:
        """导出待人工标注的样例清单（label 列留空，填好后作为标注文件使用）"""
        indices = exemplars.indices if isinstance(exemplars, ExemplarSet) else np.asarray(exemplars)
        frame = pd.DataFrame({
            'image_id': [image_ids[int(i)] for i in indices],
            'label': [''] * len(indices),
        })
        return self._save_csv(name, frame)

    def load_annotations(self, name: Union[str, Path]) -> Dict[str, str]:
        """读取人工标注文件: image_id, label"""
        frame = self._load_csv(name, dtype=str, keep_default_na=False)
        if not {'image_id', 'label'} <= set(frame.columns):
            raise LabellingError(f"标注文件 {name} 需要 image_id 和 label 两列")
        frame = frame[frame['label'].str.strip() != '']
        duplicated = frame['image_id'][frame['image_id'].duplicated()]
        if not duplicated.empty:
            raise LabellingError(f"标注文件中 image_id 重复: {duplicated.iloc[0]}")
        annotations = dict(zip(frame['image_id'], frame['label'].str.strip()))
        logger.info("读取标注文件 %s: %d 条", name, len(annotations))
        return annotations


# 全局实例
assignment_storage = AssignmentStorage()
