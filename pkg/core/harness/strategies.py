"""
策略模块 - 各测试策略的聚类与标注组合

    Full      无聚类，全部人工标注
    KMeans    k-means -> 簇均值样例
    Mean      锁定层次聚类 -> 簇均值样例
    AP_Refine 锁定层次聚类 -> 簇内 AP 细化样例
    AP        AP -> AP 样例
    LP/LLP    随机样例 -> 标签传播（非锁定/锁定）
    APLP/APLLP AP 样例 -> 标签传播（非锁定/锁定）
"""
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from ..affinity import cosine_similarity_matrix
from ..classifier import SoftmaxModel, TrainConfig, classify_plants, train_softmax
from ..clustering import (
    APParams, ClusterAssignment, HierParams, KMeansParams, affinity_propagation, kmeans,
    locked_hierarchical,
)
from ..config import Config, app_config
from ..dataset import Dataset, SplitView
from ..exceptions import StrategySpecError
from ..labelling import (
    ExemplarSet, LabelAssignment, Labeller, LPParams, ap_refine_exemplars,
    assign_cluster_labels, majority_vote, mean_exemplars, propagate_labels, random_exemplars,
)
from ..utils import derive_seed
from .metrics import MetricRecord, compute_metrics, summarize

logger = logging.getLogger(__name__)

STRATEGY_NAMES = ('Full', 'KMeans', 'Mean', 'AP_Refine', 'AP', 'LP', 'LLP', 'APLP', 'APLLP')
# 需要预先给定簇数/样例数的策略
BUDGETED = frozenset({'KMeans', 'LP', 'LLP'})
RANDOMISED = frozenset({'KMeans', 'LP', 'LLP'})
CLUSTER_LABELLED = frozenset({'KMeans', 'Mean', 'AP_Refine', 'AP'})
PROPAGATED = {'LP': False, 'LLP': True, 'APLP': False, 'APLLP': True}
# 样例数由聚类自动决定、可以被 match 引用的策略
MATCHABLE = frozenset({'Mean', 'AP_Refine', 'AP', 'APLP', 'APLLP'})


class Budget:
    """样例预算: auto（由聚类决定）、percent（训练图像百分比）或 match（与另一策略相同）"""

    def __init__(self, kind: str = 'auto', value=None):
        if kind not in ('auto', 'percent', 'match'):
            raise StrategySpecError(f"未知预算类型: {kind!r}")
        if kind == 'percent' and not (value is not None and 0 < float(value) <= 100):
            raise StrategySpecError(f"百分比预算必须在 (0, 100] 内: {value!r}")
        if kind == 'match' and value not in MATCHABLE:
            raise StrategySpecError(f"match 只能引用 {sorted(MATCHABLE)}: {value!r}")
        self.kind = kind
        self.value = float(value) if kind == 'percent' else value

    @classmethod
    def parse(cls, text) -> 'Budget':
        """解析 'auto'、'10%'、'10'、'match:AP' 形式的预算"""
        if text is None:
            return cls('auto')
        if isinstance(text, (int, float)):
            return cls('percent', float(text))
        text = str(text).strip()
        if text == 'auto':
            return cls('auto')
        if text.startswith('match:'):
            return cls('match', text.split(':', 1)[1].strip())
        try:
            return cls('percent', float(text.rstrip('%')))
        except ValueError:
            raise StrategySpecError(f"无法解析预算: {text!r}") from None

    def label(self) -> str:
        if self.kind == 'percent':
            return f"{self.value:g}%"
        if self.kind == 'match':
            return f"match:{self.value}"
        return 'auto'

    def resolve(self, n_train: int, match_counts: Optional[Dict[str, int]] = None) -> Optional[int]:
        """换算成样例个数；auto 返回 None"""
        if self.kind == 'auto':
            return None
        if self.kind == 'percent':
            return int(min(n_train, max(1, round(self.value / 100.0 * n_train))))
        if not match_counts or self.value not in match_counts:
            raise StrategySpecError(f"缺少 {self.value} 的样例数，无法解析 {self.label()}")
        return int(min(n_train, match_counts[self.value]))

    def __eq__(self, other) -> bool:
        return isinstance(other, Budget) and (self.kind, self.value) == (other.kind, other.value)

    def __repr__(self) -> str:
        return f"Budget({self.label()})"


class StrategySpec:
    """一个实验单元：策略名、样例预算、重复次数和主种子"""

    def __init__(self, name: str, budget: Optional[Budget] = None,
                 repetitions: Optional[int] = None, seed: int = 0):
        if name not in STRATEGY_NAMES:
            raise StrategySpecError(f"未知策略: {name!r}")
        budget = budget or Budget('auto')
        if name in BUDGETED and budget.kind == 'auto':
            raise StrategySpecError(f"{name} 需要预先给定样例数（percent 或 match）")
        if name not in BUDGETED and budget.kind != 'auto':
            raise StrategySpecError(f"{name} 的样例数由聚类自动决定，不能指定预算 {budget.label()}")
        if repetitions is None:
            repetitions = 10 if name in RANDOMISED else 1
        if repetitions < 1:
            raise StrategySpecError("repetitions 必须 >= 1")
        if name not in RANDOMISED and repetitions != 1:
            raise StrategySpecError(f"{name} 是确定性策略，repetitions 必须为 1")
        self.name = name
        self.budget = budget
        self.repetitions = int(repetitions)
        self.seed = int(seed)

    def run_seed(self, repetition) -> int:
        """按 (策略, 预算, 重复序号) 派生的子种子"""
        return derive_seed(self.seed, self.name, self.budget.label(), repetition)

    def exemplar_seed(self) -> int:
        """第一次重复选样例时使用的种子（导出待标注样例与正式标注保持一致）"""
        return self.run_seed('kmeans' if self.name == 'KMeans' else 0)

    def __repr__(self) -> str:
        return f"StrategySpec({self.name}, {self.budget.label()}, reps={self.repetitions})"


class RunOutcome:
    """一次重复运行的产物"""

    def __init__(self, assignment: LabelAssignment, raw_assignment: LabelAssignment,
                 model: Optional[SoftmaxModel], metrics: MetricRecord,
                 exemplars: Optional[ExemplarSet], clusters: Optional[ClusterAssignment]):
        self.assignment = assignment
        self.raw_assignment = raw_assignment  # 多数投票之前
        self.model = model
        self.metrics = metrics
        self.exemplars = exemplars
        self.clusters = clusters


class StrategyResult:
    """一个实验单元所有重复运行的结果"""

    def __init__(self, spec: StrategySpec, runs: List[RunOutcome], class_names: List[str]):
        self.spec = spec
        self.runs = runs
        self.class_names = class_names

    @property
    def metrics(self) -> List[MetricRecord]:
        return [r.metrics for r in self.runs]

    def summary(self) -> dict:
        return summarize(self.metrics, self.class_names)


def select_exemplars(view: SplitView, name: str, count: Optional[int], seed: int,
                     config: Optional[Config] = None) -> Tuple[ExemplarSet, Optional[ClusterAssignment]]:
    """
    按策略做聚类并选出样例（不询问标注者）

    Args:
        view: 训练集视图
        name: 策略名（Full 除外）
        count: 需要预算的策略的样例数
        seed: 随机策略的种子
        config: 配置

    Returns:
        (样例集合, 聚类结果或 None)
    """
    config = config or app_config
    if name in ('AP', 'APLP', 'APLLP'):
        clusters = affinity_propagation(cosine_similarity_matrix(view.X), APParams.from_config(config))
        return ExemplarSet.from_ap(clusters), clusters
    if name in ('Mean', 'AP_Refine'):
        clusters = locked_hierarchical(view.X, view.plant_ids, HierParams.from_config(config))
        if name == 'Mean':
            return mean_exemplars(view.X, clusters), clusters
        return ap_refine_exemplars(view.X, clusters, APParams.from_config(config)), clusters
    if name == 'KMeans':
        params = KMeansParams.from_config(config, k=count, seed=seed)
        params.n_runs = 1
        clusters = kmeans(view.X, params)[0].assignment
        return mean_exemplars(view.X, clusters), clusters
    if name in ('LP', 'LLP'):
        return random_exemplars(len(view), count, seed), None
    raise StrategySpecError(f"{name} 没有样例选择步骤")


def auto_exemplar_count(ds: Dataset, name: str, config: Optional[Config] = None) -> int:
    """自动决定样例数的策略在训练集上产生的样例个数"""
    if name not in MATCHABLE:
        raise StrategySpecError(f"{name} 的样例数不是自动决定的")
    exemplars, _ = select_exemplars(ds.subset('train'), name, None, 0, config)
    return len(exemplars)


def _label(view: SplitView, name: str, exemplars: Optional[ExemplarSet],
           clusters: Optional[ClusterAssignment], labeller: Labeller, config: Config) -> LabelAssignment:
    if name == 'Full':
        everything = np.arange(len(view))
        labels = labeller.label_many(everything)
        confidences = np.zeros((len(view), labeller.n_classes))
        confidences[everything, labels] = 1.0
        return LabelAssignment(labels, confidences, everything, labels, method='full')
    if name in CLUSTER_LABELLED:
        return assign_cluster_labels(clusters, exemplars, labeller)
    return propagate_labels(view.X, exemplars, labeller, LPParams.from_config(config, PROPAGATED[name]))


def _finish_run(ds: Dataset, view: SplitView, spec: StrategySpec, raw: LabelAssignment,
                exemplars, clusters, seed: int, config: Config) -> RunOutcome:
    assignment = raw
    if spec.name != 'Full' and view.has_multi_image_plants():
        assignment = majority_vote(raw, view.plant_ids)
    model = train_softmax(view.X, assignment.labels, TrainConfig.from_config(config, seed=seed),
                          class_names=ds.class_names)
    test = ds.subset('test')
    predictions = None
    if len(test):
        predictions = classify_plants(model, test.X, test.plant_ids,
                                      config.get('score_mode', 'probability'))
    metrics = compute_metrics(assignment, predictions, ds, clusters)
    return RunOutcome(assignment, raw, model, metrics, exemplars, clusters)


def run_strategy(ds: Dataset, spec: StrategySpec, config: Optional[Config] = None,
                 match_counts: Optional[Dict[str, int]] = None,
                 labeller: Optional[Labeller] = None) -> StrategyResult:
    """
    执行一个策略单元：聚类 -> 选样例 -> 标注 -> （多数投票）-> 训练分类器 -> 测试集评估

    随机策略重复 spec.repetitions 次，每次使用独立子种子；KMeans 的重复即
    一次 k-means 调用中的多次运行。

    Args:
        ds: 数据集
        spec: 策略单元
        config: 配置
        match_counts: match 预算引用的策略样例数（缺失时现场计算）
        labeller: 标注者，默认使用训练集上的理想标注者
    """
    config = config or app_config
    view = ds.subset('train')
    labeller = labeller or Labeller.oracle(view)
    if spec.budget.kind == 'match' and (not match_counts or spec.budget.value not in match_counts):
        match_counts = dict(match_counts or {})
        match_counts[spec.budget.value] = auto_exemplar_count(ds, spec.budget.value, config)
    count = spec.budget.resolve(len(view), match_counts)

    runs: List[RunOutcome] = []
    if spec.name == 'KMeans':
        params = KMeansParams.from_config(config, k=count, seed=spec.run_seed('kmeans'))
        params.n_runs = spec.repetitions
        for index, run in enumerate(kmeans(view.X, params)):
            exemplars = mean_exemplars(view.X, run.assignment)
            raw = assign_cluster_labels(run.assignment, exemplars, labeller)
            runs.append(_finish_run(ds, view, spec, raw, exemplars, run.assignment,
                                    spec.run_seed(index), config))
    else:
        for index in range(spec.repetitions):
            seed = spec.run_seed(index)
            exemplars = clusters = None
            if spec.name != 'Full':
                exemplars, clusters = select_exemplars(view, spec.name, count, seed, config)
            raw = _label(view, spec.name, exemplars, clusters, labeller, config)
            runs.append(_finish_run(ds, view, spec, raw, exemplars, clusters, seed, config))
    result = StrategyResult(spec, runs, list(ds.class_names))
    summary = result.summary()
    logger.info("%s [%s]: 标注 %.1f%%, 标注准确率 %.1f%%, 植物分类准确率 %.1f%%",
                spec.name, spec.budget.label(), summary['percent_labelled'],
                summary['labelling_accuracy'], summary['classification_accuracy_plant'])
    return result
