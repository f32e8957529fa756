"""
模型存储模块 - softmax 模型的 JSON 读写
"""
from pathlib import Path
from typing import Union

from ..classifier import SoftmaxModel
from .base import BaseStorage


class ModelStorage(BaseStorage):
    """分类器模型存储管理"""

    def save(self, model: SoftmaxModel, name: Union[str, Path] = 'model.json') -> Path:
        """保存模型"""
        return self._save_json(name, model.to_dict())

    def load(self, name: Union[str, Path] = 'model.json') -> SoftmaxModel:
        """加载模型"""
        return SoftmaxModel.from_dict(self._load_json(name))
