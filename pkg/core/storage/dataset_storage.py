"""
数据集存储模块 - JSONL/CSV 格式的数据集读写
"""
import json
import logging
from pathlib import Path
from typing import List, Optional, Union

import numpy as np
import pandas as pd

from ..config import app_config
from ..dataset import Dataset, ImageSample
from ..exceptions import DatasetValidationError, DimensionMismatchError, UnknownFormatError
from .base import BaseStorage

logger = logging.getLogger(__name__)

FORMATS = ('jsonl', 'csv')
_ID_COLUMNS = ['image_id', 'plant_id', 'split', 'label']


def infer_format(path: Union[str, Path]) -> str:
    """根据文件后缀推断格式"""
    suffix = Path(path).suffix.lower().lstrip('.')
    if suffix in ('jsonl', 'ndjson'):
        return 'jsonl'
    if suffix == 'csv':
        return 'csv'
    raise UnknownFormatError(f"无法从后缀推断数据格式: {path}")


class DatasetStorage(BaseStorage):
    """数据集文件读写（JSONL 为规范格式）"""

    def load(self, path: Union[str, Path], fmt: Optional[str] = None,
             normalize: Optional[bool] = None) -> Dataset:
        """
        读取并校验数据集

        Args:
            path: 文件路径
            fmt: 'jsonl' 或 'csv'，None 时按后缀推断
            normalize: 是否逐行 L2 归一化，None 时读取配置 normalize_features

        Returns:
            校验后的数据集，类别按字典序排列
        """
        path = self._path(path)
        fmt = fmt or infer_format(path)
        if fmt not in FORMATS:
            raise UnknownFormatError(f"不支持的数据格式: {fmt}")
        samples = self._read_jsonl(path) if fmt == 'jsonl' else self._read_csv(path)
        ds = Dataset(samples)
        if normalize is None:
            normalize = bool(app_config.get('normalize_features', True))
        if normalize:
            ds = ds.normalized()
        logger.info("加载数据集 %s: %d 张图像, %d 个类别, d=%d", path, len(ds), ds.n_classes, ds.d)
        return ds

    def save(self, ds: Dataset, path: Union[str, Path], fmt: Optional[str] = None) -> Path:
        """保存数据集；浮点数以可精确回读的形式写出"""
        path = self._path(path)
        fmt = fmt or infer_format(path)
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True)
        if fmt == 'jsonl':
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                for sample in ds.samples:
                    f.write(json.dumps(sample.to_dict(), ensure_ascii=False))
                    f.write('\n')
        elif fmt == 'csv':
            frame = pd.DataFrame({
                'image_id': [s.image_id for s in ds.samples],
                'plant_id': [s.plant_id for s in ds.samples],
                'split': [s.split for s in ds.samples],
                'label': [s.true_label for s in ds.samples],
            })
            features = pd.DataFrame(ds.X, columns=[f"f{i}" for i in range(ds.d)])
            frame = pd.concat([frame, features], axis=1)
            frame.to_csv(path, index=False, float_format='%.17g', lineterminator='\n')
        else:
            raise UnknownFormatError(f"不支持的数据格式: {fmt}")
        return path

    def _read_jsonl(self, path: Path) -> List[ImageSample]:
        samples = []
        with open(path, 'r', encoding='utf-8') as f:
            for line_no, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    samples.append(ImageSample.from_dict(json.loads(line)))
                except (KeyError, json.JSONDecodeError) as e:
                    raise DatasetValidationError(f"{path}:{line_no} 行格式错误: {e}") from e
        return samples

    def _read_csv(self, path: Path) -> List[ImageSample]:
        try:
            frame = pd.read_csv(path, dtype={c: str for c in _ID_COLUMNS}, keep_default_na=False,
                                float_precision='round_trip')
        except pd.errors.ParserError as e:
            raise DimensionMismatchError(f"{path} 行字段数与表头不一致: {e}") from e
        missing = [c for c in _ID_COLUMNS if c not in frame.columns]
        if missing:
            raise DatasetValidationError(f"{path} 缺少列: {missing}")
        feature_cols = sorted((c for c in frame.columns if c.startswith('f') and c[1:].isdigit()),
                              key=lambda c: int(c[1:]))
        values = frame[feature_cols].apply(pd.to_numeric, errors='coerce').to_numpy(dtype=float)
        samples = []
        for row, record in enumerate(frame[_ID_COLUMNS].itertuples(index=False)):
            vec = values[row]
            present = ~np.isnan(vec)
            # 短行在尾部留下空值；中间的空值视为损坏
            width = int(present.sum())
            if width and not present[:width].all():
                raise DatasetValidationError(f"{path} 第 {row + 2} 行特征含空值")
            samples.append(ImageSample(record.image_id, record.plant_id, record.split,
                                       record.label, vec[:width]))
        return samples


# 全局实例
dataset_storage = DatasetStorage()


def load_dataset(path: Union[str, Path], format: Optional[str] = None,
                 normalize: Optional[bool] = None) -> Dataset:
    """读取数据集（见 DatasetStorage.load）"""
    return dataset_storage.load(path, format, normalize)


def save_dataset(ds: Dataset, path: Union[str, Path], format: Optional[str] = None) -> Path:
    """保存数据集（见 DatasetStorage.save）"""
    return dataset_storage.save(ds, path, format)
