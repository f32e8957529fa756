"""
评估指标模块 - 标注准确率、分类准确率、逐类真阳性率与减少倍数
"""
import math
from typing import Dict, Optional, Sequence

import numpy as np
from sklearn.metrics import confusion_matrix, normalized_mutual_info_score

from ..classifier import PlantPredictions
from ..clustering import ClusterAssignment
from ..dataset import Dataset
from ..labelling import LabelAssignment

NAN = float('nan')


def reduction_factor(percent_labelled: float) -> float:
    """完全标注工作量与实际标注量之比: 100 / 标注百分比"""
    if percent_labelled <= 0:
        return NAN
    return 100.0 / percent_labelled


def per_class_tpr(y_true, y_pred, n_classes: int) -> np.ndarray:
    """
    逐类召回率（%），某类没有真实样本时为 NaN

    Args:
        y_true: 真实类别下标
        y_pred: 预测类别下标
        n_classes: 类别总数
    """
    table = confusion_matrix(y_true, y_pred, labels=list(range(n_classes)))
    support = table.sum(axis=1)
    with np.errstate(invalid='ignore', divide='ignore'):
        tpr = np.where(support > 0, np.diag(table) / np.maximum(support, 1) * 100.0, np.nan)
    return tpr


class MetricRecord:
    """单次运行（一个策略、一个预算、一次重复）的指标"""

    NUMERIC_FIELDS = (
        'percent_labelled', 'labelling_accuracy', 'classification_accuracy_plant',
        'classification_accuracy_image', 'reduction_factor', 'n_exemplars', 'n_clusters',
        'cluster_purity', 'cluster_nmi', 'clamp_violations',
    )

    def __init__(self, percent_labelled: float, labelling_accuracy: float,
                 classification_accuracy_plant: float, classification_accuracy_image: float,
                 per_class_tpr: Dict[str, float], n_exemplars: int,
                 n_clusters: float = NAN, cluster_purity: float = NAN, cluster_nmi: float = NAN,
                 clamp_violations: int = 0):
        self.percent_labelled = float(percent_labelled)
        self.labelling_accuracy = float(labelling_accuracy)
        self.classification_accuracy_plant = float(classification_accuracy_plant)
        self.classification_accuracy_image = float(classification_accuracy_image)
        self.reduction_factor = reduction_factor(self.percent_labelled)
        self.per_class_tpr = dict(per_class_tpr)
        self.n_exemplars = int(n_exemplars)
        self.n_clusters = float(n_clusters)
        self.cluster_purity = float(cluster_purity)
        self.cluster_nmi = float(cluster_nmi)
        self.clamp_violations = int(clamp_violations)

    def to_dict(self) -> dict:
        """转换为字典"""
        data = {name: getattr(self, name) for name in self.NUMERIC_FIELDS}
        data['per_class_tpr'] = dict(self.per_class_tpr)
        return data


def compute_metrics(assignment: LabelAssignment, predictions: Optional[PlantPredictions],
                    ds: Dataset, clusters: Optional[ClusterAssignment] = None) -> MetricRecord:
    """
    计算一次运行的全部指标

    标注准确率在训练集所有图像上计算；分类准确率以植物级为主、同时给出图像级；
    逐类真阳性率按植物级预测在测试集上计算。

    Args:
        assignment: 训练集上的标签分配
        predictions: 测试集上的分类结果（测试集为空时为 None）
        ds: 数据集
        clusters: 可选的聚类结果，用于报告簇数量与纯度
    """
    train = ds.subset('train')
    labelling_accuracy = assignment.accuracy(train.y)
    plant_accuracy = image_accuracy = NAN
    tpr = {name: NAN for name in ds.class_names}
    if predictions is not None and len(predictions.plant_ids):
        test = ds.subset('test')
        truth = {plant_id: int(label) for plant_id, label in zip(test.plant_ids, test.y)}
        plant_true = np.array([truth[p] for p in predictions.plant_ids], dtype=int)
        plant_accuracy = float(np.mean(predictions.plant_classes == plant_true) * 100.0)
        image_accuracy = float(np.mean(predictions.image_classes == test.y) * 100.0)
        values = per_class_tpr(plant_true, predictions.plant_classes, ds.n_classes)
        tpr = {name: float(v) for name, v in zip(ds.class_names, values)}
    n_clusters = purity = nmi = NAN
    if clusters is not None:
        n_clusters = clusters.n_clusters
        purity = clusters.purity(train.y) * 100.0
        nmi = float(normalized_mutual_info_score(train.y, clusters.labels))
    return MetricRecord(
        percent_labelled=assignment.percent_labelled(),
        labelling_accuracy=labelling_accuracy,
        classification_accuracy_plant=plant_accuracy,
        classification_accuracy_image=image_accuracy,
        per_class_tpr=tpr,
        n_exemplars=assignment.n_labelled,
        n_clusters=n_clusters,
        cluster_purity=purity,
        cluster_nmi=nmi,
        clamp_violations=assignment.clamp_violations,
    )


def summarize(records: Sequence[MetricRecord], class_names: Sequence[str]) -> dict:
    """对重复运行取均值与标准差（总体标准差），NaN 不参与"""
    summary = {}
    for name in MetricRecord.NUMERIC_FIELDS:
        values = np.array([getattr(r, name) for r in records], dtype=float)
        finite = values[~np.isnan(values)]
        summary[name] = float(finite.mean()) if finite.size else NAN
        summary[f"{name}_std"] = float(finite.std()) if finite.size else NAN
    summary['clamp_violations'] = float(sum(r.clamp_violations for r in records))
    tpr = {}
    for class_name in class_names:
        values = np.array([r.per_class_tpr.get(class_name, NAN) for r in records], dtype=float)
        finite = values[~np.isnan(values)]
        tpr[class_name] = float(finite.mean()) if finite.size else NAN
    summary['per_class_tpr'] = tpr
    # 减少倍数按平均标注比例计算，与表格中的百分比保持一致
    summary['reduction_factor'] = reduction_factor(summary['percent_labelled']) \
        if not math.isnan(summary['percent_labelled']) else NAN
    return summary
