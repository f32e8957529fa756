"""
存储模块 - 分割后的存储组件
"""

from .base import BaseStorage
from .dataset_storage import DatasetStorage, infer_format, load_dataset, save_dataset
from .model_storage import ModelStorage
from .assignment_storage import AssignmentStorage
from .report_storage import ReportStorage

# 导出全局实例
from .dataset_storage import dataset_storage
from .assignment_storage import assignment_storage

__all__ = [
    'BaseStorage',
    'DatasetStorage', 'dataset_storage', 'infer_format', 'load_dataset', 'save_dataset',
    'ModelStorage',
    'AssignmentStorage', 'assignment_storage',
    'ReportStorage',
]
