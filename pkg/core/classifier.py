"""
分类器模块 - 描述子空间上的多项 softmax 分类器与按植物得分求和
"""
import logging
from collections import OrderedDict
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from .exceptions import ClassifierError, DimensionMismatchError, SingleClassError

logger = logging.getLogger(__name__)

SCORE_MODES = ('probability', 'logit')


class TrainConfig:
    """训练参数"""

    def __init__(self, learning_rate: float = 0.1, l2_penalty: float = 1e-4, epochs: int = 500,
                 seed: int = 0, tolerance: float = 1e-8):
        if learning_rate <= 0 or epochs < 1 or l2_penalty < 0 or tolerance < 0:
            raise ClassifierError("learning_rate 必须为正，epochs >= 1，l2_penalty/tolerance 非负")
        self.learning_rate = float(learning_rate)
        self.l2_penalty = float(l2_penalty)
        self.epochs = int(epochs)
        self.seed = int(seed)
        self.tolerance = float(tolerance)

    @classmethod
    def from_config(cls, config, seed: Optional[int] = None) -> 'TrainConfig':
        return cls(
            learning_rate=config.get('train_learning_rate', 0.1),
            l2_penalty=config.get('train_l2_penalty', 1e-4),
            epochs=config.get('train_epochs', 500),
            seed=config.get('master_seed', 0) if seed is None else seed,
            tolerance=config.get('train_tolerance', 1e-8),
        )


class SoftmaxModel:
    """c×d 权重与 c 维偏置"""

    def __init__(self, weights, bias, class_names: Sequence[str]):
        self.weights = np.asarray(weights, dtype=float)
        self.bias = np.asarray(bias, dtype=float)
        self.class_names = list(class_names)
        if len(self.class_names) < 2:
            raise ClassifierError("至少需要两个类别")
        if self.weights.shape[0] != len(self.class_names) or self.bias.shape != (len(self.class_names),):
            raise ClassifierError("权重/偏置形状与类别数不一致")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise ClassifierError("模型参数含非有限值")
        self.loss_history: List[float] = []

    @property
    def d(self) -> int:
        return int(self.weights.shape[1])

    def logits(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.d:
            raise DimensionMismatchError(f"特征维度 {X.shape[1]} 与模型维度 {self.d} 不一致")
        return X @ self.weights.T + self.bias

    def to_dict(self) -> dict:
        """转换为字典（权重按行优先）"""
        return {
            'class_names': self.class_names,
            'weights': self.weights.tolist(),
            'bias': self.bias.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'SoftmaxModel':
        """从字典创建"""
        return cls(data['weights'], data['bias'], data['class_names'])


def _loss(X, targets, W, b, l2_penalty) -> float:
    Z = X @ W.T + b
    nll = np.mean(logsumexp(Z, axis=1) - Z[np.arange(X.shape[0]), targets])
    return float(nll + 0.5 * l2_penalty * np.sum(W * W))


def train_softmax(X_labelled, labels, config: Optional[TrainConfig] = None,
                  class_names: Optional[Sequence[str]] = None) -> SoftmaxModel:
    """
    全批量梯度下降训练 softmax 分类器（交叉熵 + L2 惩罚）

    权重零初始化，结果与种子无关；损失变化小于 tolerance 时提前停止。

    Args:
        X_labelled: n×d 已归一化的特征
        labels: 每行的类别下标
        config: 训练参数
        class_names: 全部类别名（默认按标签最大值生成）

    Raises:
        SingleClassError: 训练标签只有一个类别
    """
    config = config or TrainConfig()
    X = np.asarray(X_labelled, dtype=float)
    y = np.asarray(labels, dtype=int)
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ClassifierError("特征与标签数量不一致")
    if np.unique(y).size < 2:
        raise SingleClassError("训练标签只有一个类别，分类器无定义")
    if class_names is None:
        class_names = [str(i) for i in range(int(y.max()) + 1)]
    c, d = len(class_names), X.shape[1]
    n = X.shape[0]
    targets = np.zeros((n, c))
    targets[np.arange(n), y] = 1.0

    W = np.zeros((c, d))
    b = np.zeros(c)
    history = [_loss(X, y, W, b, config.l2_penalty)]
    for epoch in range(config.epochs):
        P = softmax(X @ W.T + b, axis=1)
        residual = (P - targets) / n
        W = W - config.learning_rate * (residual.T @ X + config.l2_penalty * W)
        b = b - config.learning_rate * residual.sum(axis=0)
        history.append(_loss(X, y, W, b, config.l2_penalty))
        if abs(history[-2] - history[-1]) < config.tolerance:
            break
    model = SoftmaxModel(W, b, class_names)
    model.loss_history = history
    logger.debug("softmax 训练: %d 轮, loss %.6f -> %.6f", len(history) - 1, history[0], history[-1])
    return model


def predict_scores(model: SoftmaxModel, X) -> np.ndarray:
    """每行 softmax 概率，行和为 1"""
    return softmax(model.logits(X), axis=1)


class PlantPredictions:
    """按植物汇总的预测结果"""

    def __init__(self, plant_ids: List[str], plant_scores: np.ndarray, plant_classes: np.ndarray,
                 image_classes: np.ndarray, image_plant: List[str]):
        self.plant_ids = plant_ids
        self.plant_scores = plant_scores
        self.plant_classes = plant_classes
        self.image_classes = image_classes
        self.image_plant = image_plant

    def plant_class_of(self) -> Dict[str, int]:
        return dict(zip(self.plant_ids, self.plant_classes.tolist()))


def classify_plants(model: SoftmaxModel, X, plant_ids: Sequence[str],
                    score_mode: str = 'probability') -> PlantPredictions:
    """
    按植物汇总图像得分：植物类别为各图像得分之和的最大类（平局取下标最小者）

    Args:
        model: 分类器
        X: 图像特征
        plant_ids: 每张图像所属植物
        score_mode: 'probability' 对 softmax 概率求和，'logit' 对原始 logit 求和

    Returns:
        植物级与图像级的预测类别
    """
    if score_mode not in SCORE_MODES:
        raise ClassifierError(f"未知 score_mode: {score_mode!r}")
    scores = predict_scores(model, X) if score_mode == 'probability' else model.logits(X)
    if len(plant_ids) != scores.shape[0]:
        raise ClassifierError("plant_ids 数量与图像数不一致")
    groups: 'OrderedDict[str, List[int]]' = OrderedDict()
    for i, plant_id in enumerate(plant_ids):
        groups.setdefault(plant_id, []).append(i)
    plant_scores = np.vstack([scores[members].sum(axis=0) for members in groups.values()])
    return PlantPredictions(
        plant_ids=list(groups.keys()),
        plant_scores=plant_scores,
        plant_classes=np.argmax(plant_scores, axis=1),
        image_classes=np.argmax(scores, axis=1),
        image_plant=list(plant_ids),
    )
