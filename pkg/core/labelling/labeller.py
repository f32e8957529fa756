"""
标注者模块 - 模拟的理想标注者或基于标注文件的标注者
"""
import logging
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..exceptions import LabellingError

logger = logging.getLogger(__name__)


class Labeller:
    """
    为样例提供类别标签

    oracle 模式直接返回真实标签（假设人工总能正确标注）；
    file 模式从标注文件 (image_id -> 类别名) 查询。
    """

    MODES = ('oracle', 'file')

    def __init__(self, mode: str, image_ids: Sequence[str], class_names: Sequence[str],
                 true_labels: Optional[Sequence[int]] = None,
                 annotations: Optional[Dict[str, str]] = None):
        if mode not in self.MODES:
            raise LabellingError(f"未知标注模式: {mode!r}")
        if mode == 'oracle' and true_labels is None:
            raise LabellingError("oracle 模式需要真实标签")
        if mode == 'file' and annotations is None:
            raise LabellingError("file 模式需要标注表")
        self.mode = mode
        self.image_ids = list(image_ids)
        self.class_names = list(class_names)
        self._class_index = {name: i for i, name in enumerate(self.class_names)}
        self._true = None if true_labels is None else np.asarray(true_labels, dtype=int)
        self._annotations = dict(annotations or {})
        self.queried: List[int] = []  # 按顺序记录被询问过的样本

    @classmethod
    def oracle(cls, view) -> 'Labeller':
        """针对某个数据划分视图的理想标注者"""
        return cls('oracle', view.image_ids, view.class_names, true_labels=view.y)

    @classmethod
    def from_annotations(cls, view, annotations: Dict[str, str]) -> 'Labeller':
        """针对某个数据划分视图、由标注表驱动的标注者"""
        return cls('file', view.image_ids, view.class_names, annotations=annotations)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def label(self, index: int) -> int:
        """返回样本 index 的类别下标"""
        index = int(index)
        self.queried.append(index)
        if self.mode == 'oracle':
            return int(self._true[index])
        image_id = self.image_ids[index]
        if image_id not in self._annotations:
            raise LabellingError(f"标注文件中缺少图像 {image_id}")
        name = self._annotations[image_id]
        if name not in self._class_index:
            raise LabellingError(f"图像 {image_id} 的标签 {name!r} 不在类别列表中")
        return self._class_index[name]

    def label_many(self, indices) -> np.ndarray:
        return np.array([self.label(i) for i in indices], dtype=int)
