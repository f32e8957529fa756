"""
测试公共夹具
"""
import numpy as np
import pytest

from core.config import Config
from core.dataset import Dataset, ImageSample, SyntheticSpec, generate_synthetic


def make_sample(image_id, plant_id, split, label, features):
    return ImageSample(image_id, plant_id, split, label, features)


@pytest.fixture
def config(tmp_path):
    """不读取用户目录的默认配置"""
    return Config(tmp_path / 'config.json')


@pytest.fixture
def two_triads():
    """两组紧凑的三点簇，分别靠近 (1,0,0) 与 (0,1,0)"""
    return np.array([
        [1.00, 0.02, 0.00],
        [0.98, 0.00, 0.03],
        [0.99, -0.02, 0.01],
        [0.00, 1.00, 0.02],
        [0.03, 0.98, 0.00],
        [-0.01, 0.99, -0.02],
    ])


@pytest.fixture
def tiny_dataset():
    """两个类别、四株植物的手工数据集"""
    samples = [
        make_sample('a1-1', 'a1', 'train', 'a', [1.0, 0.1]),
        make_sample('a1-2', 'a1', 'train', 'a', [0.9, 0.2]),
        make_sample('b1-1', 'b1', 'train', 'b', [0.1, 1.0]),
        make_sample('a2-1', 'a2', 'test', 'a', [1.0, 0.0]),
        make_sample('b2-1', 'b2', 'test', 'b', [0.0, 1.0]),
        make_sample('b2-2', 'b2', 'test', 'b', [0.2, 0.9]),
    ]
    return Dataset(samples)


def separated_spec(seed=0, **overrides):
    """类间距离远大于类内散布的四类合成数据（每类 6 株训练植物）"""
    params = dict(n_classes=4, plants_per_class=12, images_per_plant=(2, 3), d=16,
                  class_separation=1.0, within_class_spread=0.03, within_plant_spread=0.01,
                  seed=seed)
    params.update(overrides)
    return SyntheticSpec(**params)


@pytest.fixture
def separated_dataset():
    return generate_synthetic(separated_spec())


def hard_spec(seed=0):
    """类别重叠、最小类别植物数明显偏少的合成数据"""
    return SyntheticSpec(n_classes=4, plants_per_class=20, images_per_plant=(1, 3), d=16,
                         class_separation=0.5, within_class_spread=0.08,
                         within_plant_spread=0.03, seed=seed,
                         class_plant_counts=[24, 24, 24, 8])
