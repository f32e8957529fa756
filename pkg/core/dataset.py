"""
数据集模块 - 图像样本、校验、归一化与合成数据生成
"""
import logging
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .exceptions import (
    DatasetValidationError, DimensionMismatchError, DuplicateImageIdError,
    EmptyTrainSplitError, LabelConflictError, SplitConflictError, ZeroNormError,
)

logger = logging.getLogger(__name__)

SPLITS = ('train', 'test')
UNIT_NORM_TOLERANCE = 1e-12


def l2_normalize(features) -> np.ndarray:
    """
    对单个描述子向量做 L2 归一化

    Args:
        features: 实数向量

    Returns:
        欧氏范数为 1 的同方向向量

    Raises:
        ZeroNormError: 向量范数为 0
    """
    return l2_normalize_rows(np.asarray(features, dtype=float)[None, :])[0]


def l2_normalize_rows(X) -> np.ndarray:
    """
    逐行 L2 归一化，任意一行为零向量时报错

    范数与 1 相差不超过 UNIT_NORM_TOLERANCE 的行原样保留，
    因此对已归一化的数据再做一次归一化结果逐位不变。
    """
    X = np.asarray(X, dtype=float)
    norms = np.linalg.norm(X, axis=1)
    bad = np.flatnonzero(~np.isfinite(norms) | (norms == 0.0))
    if bad.size:
        raise ZeroNormError(f"第 {int(bad[0])} 行为零向量，无法归一化")
    norms[np.abs(norms - 1.0) <= UNIT_NORM_TOLERANCE] = 1.0
    return X / norms[:, None]


class ImageSample:
    """单张分割后的植物图像"""

    def __init__(self, image_id: str, plant_id: str, split: str,
                 true_label: str, features):
        self.image_id = str(image_id)
        self.plant_id = str(plant_id)
        self.split = split
        self.true_label = str(true_label)
        self.features = np.asarray(features, dtype=float)

    def to_dict(self) -> dict:
        """转换为字典（JSONL 行格式）"""
        return {
            'image_id': self.image_id,
            'plant_id': self.plant_id,
            'split': self.split,
            'label': self.true_label,
            'features': [float(v) for v in self.features],
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'ImageSample':
        """从字典创建"""
        return cls(
            image_id=data['image_id'],
            plant_id=data['plant_id'],
            split=data['split'],
            true_label=data['label'],
            features=data['features'],
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ImageSample):
            return NotImplemented
        return (self.image_id == other.image_id and self.plant_id == other.plant_id
                and self.split == other.split and self.true_label == other.true_label
                and np.array_equal(self.features, other.features))

    def __repr__(self) -> str:
        return f"ImageSample({self.image_id!r}, plant={self.plant_id!r}, {self.split}, {self.true_label!r})"


class SplitView:
    """数据集某一划分的数组视图（行顺序与数据集一致）"""

    def __init__(self, dataset: 'Dataset', split: str):
        self.split = split
        self.indices = dataset.indices(split)
        self.X = dataset.X[self.indices]
        self.y = dataset.y[self.indices]
        self.image_ids = [dataset.samples[i].image_id for i in self.indices]
        self.plant_ids = [dataset.samples[i].plant_id for i in self.indices]
        self.class_names = list(dataset.class_names)

    def __len__(self) -> int:
        return len(self.indices)

    def plant_groups(self) -> 'OrderedDict[str, List[int]]':
        """植物 id -> 该植物图像在视图中的局部下标（按首次出现排序）"""
        groups: 'OrderedDict[str, List[int]]' = OrderedDict()
        for local, plant_id in enumerate(self.plant_ids):
            groups.setdefault(plant_id, []).append(local)
        return groups

    def has_multi_image_plants(self) -> bool:
        return any(len(members) > 1 for members in self.plant_groups().values())


class Dataset:
    """
    已校验的数据集

    构造时检查：特征维度一致、image_id 唯一、每株植物只属于一个划分和一个类别、
    训练集非空。类别按字典序排列，保证类别下标可复现。
    """

    def __init__(self, samples: Sequence[ImageSample],
                 class_names: Optional[Sequence[str]] = None):
        self.samples: List[ImageSample] = list(samples)
        self._validate()
        labels = sorted({s.true_label for s in self.samples})
        if class_names is None:
            self.class_names = labels
        else:
            missing = set(labels) - set(class_names)
            if missing:
                raise DatasetValidationError(f"class_names 未覆盖标签: {sorted(missing)}")
            self.class_names = sorted(class_names)
        self.d = int(self.samples[0].features.shape[0])
        self._class_index = {name: i for i, name in enumerate(self.class_names)}
        self.X = np.vstack([s.features for s in self.samples])
        self.y = np.array([self._class_index[s.true_label] for s in self.samples], dtype=int)

    def _validate(self):
        """按约定顺序逐项校验，每类问题抛出各自的异常"""
        if not self.samples:
            raise EmptyTrainSplitError("数据集为空")
        dim = None
        for row, sample in enumerate(self.samples):
            if sample.features.ndim != 1:
                raise DimensionMismatchError(f"第 {row} 行特征不是一维向量")
            if dim is None:
                dim = sample.features.shape[0]
            elif sample.features.shape[0] != dim:
                raise DimensionMismatchError(
                    f"第 {row} 行 ({sample.image_id}) 特征维度 {sample.features.shape[0]}，应为 {dim}")
        seen = set()
        for sample in self.samples:
            if sample.image_id in seen:
                raise DuplicateImageIdError(f"image_id 重复: {sample.image_id}")
            seen.add(sample.image_id)
        plant_split: Dict[str, str] = {}
        plant_label: Dict[str, str] = {}
        for sample in self.samples:
            if sample.split not in SPLITS:
                raise DatasetValidationError(f"未知划分 {sample.split!r} ({sample.image_id})")
            split = plant_split.setdefault(sample.plant_id, sample.split)
            if split != sample.split:
                raise SplitConflictError(f"植物 {sample.plant_id} 同时出现在 train 和 test 中")
        for sample in self.samples:
            label = plant_label.setdefault(sample.plant_id, sample.true_label)
            if label != sample.true_label:
                raise LabelConflictError(
                    f"植物 {sample.plant_id} 带有多个标签: {label!r}, {sample.true_label!r}")
        if not any(s.split == 'train' for s in self.samples):
            raise EmptyTrainSplitError("训练集为空")

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def image_ids(self) -> List[str]:
        return [s.image_id for s in self.samples]

    @property
    def plant_ids(self) -> List[str]:
        return [s.plant_id for s in self.samples]

    def __len__(self) -> int:
        return len(self.samples)

    def class_index(self, label: str) -> int:
        """类别名 -> 下标"""
        return self._class_index[label]

    def indices(self, split: str) -> np.ndarray:
        """某一划分在数据集中的行号"""
        return np.array([i for i, s in enumerate(self.samples) if s.split == split], dtype=int)

    def subset(self, split: str) -> SplitView:
        return SplitView(self, split)

    def normalized(self) -> 'Dataset':
        """返回特征逐行 L2 归一化后的新数据集"""
        X = l2_normalize_rows(self.X)
        samples = [ImageSample(s.image_id, s.plant_id, s.split, s.true_label, X[i])
                   for i, s in enumerate(self.samples)]
        return Dataset(samples, self.class_names)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.class_names == other.class_names and self.samples == other.samples

    def __repr__(self) -> str:
        return f"Dataset(n={len(self.samples)}, d={self.d}, classes={self.class_names})"


def split_counts(ds: Dataset, unit: str = 'images') -> pd.DataFrame:
    """
    统计每个类别在 train/test 中的数量

    Args:
        ds: 数据集
        unit: 'images' 统计图像数，'plants' 统计植物数

    Returns:
        以类别名为索引、列为 train/test 的整数表
    """
    if unit not in ('images', 'plants'):
        raise ValueError(f"unit 只能是 images 或 plants: {unit!r}")
    table = pd.DataFrame(0, index=pd.Index(ds.class_names, name='class'),
                         columns=list(SPLITS), dtype=int)
    if unit == 'images':
        for sample in ds.samples:
            table.loc[sample.true_label, sample.split] += 1
    else:
        seen = set()
        for sample in ds.samples:
            if sample.plant_id not in seen:
                seen.add(sample.plant_id)
                table.loc[sample.true_label, sample.split] += 1
    return table


# ============== 合成数据 ==============
class SyntheticSpec:
    """合成数据集参数"""

    def __init__(self, n_classes: int, plants_per_class: int,
                 images_per_plant: Union[int, Tuple[int, int]], d: int,
                 class_separation: float, within_class_spread: float,
                 within_plant_spread: float, seed: int,
                 class_plant_counts: Optional[Sequence[int]] = None,
                 class_names: Optional[Sequence[str]] = None,
                 train_fraction: float = 0.5):
        if isinstance(images_per_plant, (int, np.integer)):
            images_per_plant = (int(images_per_plant), int(images_per_plant))
        self.n_classes = int(n_classes)
        self.plants_per_class = int(plants_per_class)
        self.images_per_plant = (int(images_per_plant[0]), int(images_per_plant[1]))
        self.d = int(d)
        self.class_separation = float(class_separation)
        self.within_class_spread = float(within_class_spread)
        self.within_plant_spread = float(within_plant_spread)
        self.seed = int(seed)
        self.class_plant_counts = [int(c) for c in class_plant_counts] if class_plant_counts else None
        self.class_names = list(class_names) if class_names else [
            f"class{i:02d}" for i in range(self.n_classes)]
        self.train_fraction = float(train_fraction)
        self.validate()

    def validate(self):
        """校验参数"""
        if self.n_classes < 1 or self.plants_per_class < 1 or self.d < 1:
            raise DatasetValidationError("n_classes、plants_per_class、d 必须 >= 1")
        lo, hi = self.images_per_plant
        if lo < 1 or hi < lo:
            raise DatasetValidationError(f"images_per_plant 范围无效: {self.images_per_plant}")
        if self.class_separation < 0:
            raise DatasetValidationError("class_separation 不能为负")
        if self.within_class_spread <= 0 or self.within_plant_spread <= 0:
            raise DatasetValidationError("spread 必须为正")
        if self.within_plant_spread > self.within_class_spread:
            raise DatasetValidationError("within_plant_spread 不能大于 within_class_spread")
        if len(self.class_names) != self.n_classes or len(set(self.class_names)) != self.n_classes:
            raise DatasetValidationError("class_names 数量必须等于 n_classes 且不重复")
        if self.class_plant_counts is not None:
            if len(self.class_plant_counts) != self.n_classes or min(self.class_plant_counts) < 1:
                raise DatasetValidationError("class_plant_counts 必须为每个类别给出 >= 1 的数量")
        if not 0.0 < self.train_fraction < 1.0:
            raise DatasetValidationError("train_fraction 必须在 (0, 1) 内")

    def plant_counts(self) -> List[int]:
        return self.class_plant_counts or [self.plants_per_class] * self.n_classes

    def to_dict(self) -> dict:
        """转换为字典（JSON 配置格式）"""
        return {
            'n_classes': self.n_classes,
            'plants_per_class': self.plants_per_class,
            'images_per_plant': list(self.images_per_plant),
            'd': self.d,
            'class_separation': self.class_separation,
            'within_class_spread': self.within_class_spread,
            'within_plant_spread': self.within_plant_spread,
            'seed': self.seed,
            'class_plant_counts': self.class_plant_counts,
            'class_names': self.class_names,
            'train_fraction': self.train_fraction,
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'SyntheticSpec':
        """从字典创建"""
        images = data.get('images_per_plant', 1)
        if isinstance(images, list):
            images = tuple(images)
        return cls(
            n_classes=data['n_classes'],
            plants_per_class=data['plants_per_class'],
            images_per_plant=images,
            d=data['d'],
            class_separation=data['class_separation'],
            within_class_spread=data['within_class_spread'],
            within_plant_spread=data['within_plant_spread'],
            seed=data.get('seed', 0),
            class_plant_counts=data.get('class_plant_counts'),
            class_names=data.get('class_names'),
            train_fraction=data.get('train_fraction', 0.5),
        )


def _draw_class_centres(rng: np.random.Generator, spec: SyntheticSpec) -> np.ndarray:
    # 类别数不超过维度时取正交方向，两两距离恰为 class_separation
    radius = spec.class_separation / np.sqrt(2.0)
    if spec.n_classes <= spec.d:
        q, _ = np.linalg.qr(rng.standard_normal((spec.d, spec.n_classes)))
        return q.T * radius
    directions = rng.standard_normal((spec.n_classes, spec.d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    return directions * radius


def synthetic_class_centres(spec: SyntheticSpec) -> np.ndarray:
    """生成器使用的真实类别中心（归一化之前）"""
    return _draw_class_centres(np.random.default_rng(spec.seed), spec)


def generate_synthetic(spec: SyntheticSpec) -> Dataset:
    """
    按参数生成可复现的合成数据集

    类别中心 -> 植物中心 (within_class_spread) -> 每张图像 (within_plant_spread)，
    最后逐行 L2 归一化。每个类别按植物对半划分 train/test。

    Args:
        spec: 合成数据参数

    Returns:
        已校验、已归一化的数据集
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    centres = _draw_class_centres(rng, spec)
    lo, hi = spec.images_per_plant
    samples: List[ImageSample] = []
    for ci, (name, n_plants) in enumerate(zip(spec.class_names, spec.plant_counts())):
        plant_centres = centres[ci] + spec.within_class_spread * rng.standard_normal((n_plants, spec.d))
        n_images = rng.integers(lo, hi + 1, size=n_plants)
        order = rng.permutation(n_plants)
        n_train = int(np.ceil(n_plants * spec.train_fraction - 1e-9))
        train_plants = set(order[:n_train].tolist())
        for j in range(n_plants):
            plant_id = f"{name}-p{j:03d}"
            split = 'train' if j in train_plants else 'test'
            noise = spec.within_plant_spread * rng.standard_normal((int(n_images[j]), spec.d))
            for k, row in enumerate(plant_centres[j] + noise):
                samples.append(ImageSample(f"{plant_id}-i{k}", plant_id, split, name, row))
    X = l2_normalize_rows(np.vstack([s.features for s in samples]))
    for i, sample in enumerate(samples):
        sample.features = X[i]
    ds = Dataset(samples, spec.class_names)
    logger.info("生成合成数据集: %d 张图像, %d 个类别, d=%d", len(ds), ds.n_classes, ds.d)
    return ds
