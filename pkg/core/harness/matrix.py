"""
实验矩阵模块 - 按 (策略, 预算) 并行执行实验单元并汇总成报告
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

from ..config import Config, app_config
from ..dataset import Dataset
from ..exceptions import StrategySpecError
from ..utils import default_worker_count, peak_memory_mb
from .metrics import MetricRecord
from .strategies import Budget, MATCHABLE, RANDOMISED, StrategySpec, auto_exemplar_count, run_strategy

logger = logging.getLogger(__name__)

# 默认实验矩阵：每个策略及其预算列表
DEFAULT_MATRIX = [
    {'name': 'Full'},
    {'name': 'KMeans', 'budgets': ['5%', '10%', '20%']},
    {'name': 'Mean'},
    {'name': 'AP_Refine'},
    {'name': 'AP'},
    {'name': 'LP', 'budgets': ['10%', '20%', 'match:AP', 'match:AP_Refine']},
    {'name': 'LLP', 'budgets': ['10%', '20%', 'match:AP', 'match:AP_Refine']},
    {'name': 'APLP'},
    {'name': 'APLLP'},
]


def _clean(value):
    """NaN 写成 null，保证 report.json 是标准 JSON"""
    if isinstance(value, float) and math.isnan(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_clean(v) for v in value]
    return value


def _restore(value):
    if value is None:
        return float('nan')
    if isinstance(value, dict):
        return {k: _restore(v) for k, v in value.items()}
    return value


class MatrixCell:
    """实验矩阵中的一个单元（尚未校验）"""

    def __init__(self, name: str, budget: str = 'auto'):
        self.name = name
        self.budget = budget

    def to_dict(self) -> dict:
        return {'name': self.name, 'budget': self.budget}


class MatrixConfig:
    """
    实验矩阵配置

    JSON 格式::

        {"master_seed": 0, "repetitions": 10, "workers": 0,
         "strategies": [{"name": "KMeans", "budgets": ["5%", "10%"]}, {"name": "AP"}]}
    """

    def __init__(self, cells: Sequence[MatrixCell], master_seed: int = 0,
                 repetitions: int = 10, workers: int = 0):
        if not cells:
            raise StrategySpecError("实验矩阵为空")
        self.cells = list(cells)
        self.master_seed = int(master_seed)
        self.repetitions = int(repetitions)
        self.workers = int(workers)

    @classmethod
    def from_dict(cls, data: dict, config: Optional[Config] = None) -> 'MatrixConfig':
        """从字典创建，未给出的全局项取配置中的值"""
        config = config or app_config
        cells = []
        for entry in data.get('strategies', DEFAULT_MATRIX):
            if 'name' not in entry:
                raise StrategySpecError(f"策略条目缺少 name: {entry!r}")
            for budget in entry.get('budgets', ['auto']):
                cells.append(MatrixCell(entry['name'], str(budget)))
        return cls(
            cells,
            master_seed=data.get('master_seed', config.get('master_seed', 0)),
            repetitions=data.get('repetitions', config.get('repetitions', 10)),
            workers=data.get('workers', config.get('workers', 0)),
        )

    @classmethod
    def default(cls, config: Optional[Config] = None) -> 'MatrixConfig':
        return cls.from_dict({}, config)

    def build_spec(self, cell: MatrixCell) -> StrategySpec:
        """把单元转换为经过校验的 StrategySpec（确定性策略只跑一次）"""
        repetitions = self.repetitions if cell.name in RANDOMISED else 1
        return StrategySpec(cell.name, Budget.parse(cell.budget), repetitions, self.master_seed)


class ReportRow:
    """报告中的一行：一个策略单元在所有重复上的汇总"""

    def __init__(self, test_name: str, budget: str, n_repetitions: int = 0,
                 summary: Optional[dict] = None, runs: Optional[List[dict]] = None,
                 error: Optional[str] = None):
        self.test_name = test_name
        self.budget = budget
        self.n_repetitions = int(n_repetitions)
        self.summary = dict(summary or {})
        self.runs = list(runs or [])  # 每次重复的指标
        self.error = error

    @classmethod
    def from_result(cls, result) -> 'ReportRow':
        return cls(result.spec.name, result.spec.budget.label(), len(result.runs),
                   result.summary(), [m.to_dict() for m in result.metrics])

    @classmethod
    def failed(cls, name: str, budget: str, error: Exception) -> 'ReportRow':
        return cls(name, budget, error=f"{type(error).__name__}: {error}")

    def value(self, key: str) -> float:
        return self.summary.get(key, float('nan'))

    def per_class_tpr(self) -> Dict[str, float]:
        return dict(self.summary.get('per_class_tpr', {}))

    def to_dict(self) -> dict:
        return _clean({
            'test_name': self.test_name,
            'budget': self.budget,
            'n_repetitions': self.n_repetitions,
            'summary': self.summary,
            'runs': self.runs,
            'error': self.error,
        })

    @classmethod
    def from_dict(cls, data: dict) -> 'ReportRow':
        return cls(data['test_name'], data['budget'], data.get('n_repetitions', 0),
                   _restore(data.get('summary') or {}), [_restore(r) for r in data.get('runs', [])],
                   data.get('error'))


class ExperimentReport:
    """实验报告：所有单元的结果（顺序与矩阵配置一致）和元数据"""

    def __init__(self, rows: List[ReportRow], metadata: Optional[dict] = None):
        self.rows = list(rows)
        self.metadata = dict(metadata or {})

    @property
    def class_names(self) -> List[str]:
        return list(self.metadata.get('class_names', []))

    @property
    def errors(self) -> List[ReportRow]:
        return [row for row in self.rows if row.error]

    def row(self, test_name: str, budget: str = 'auto') -> Optional[ReportRow]:
        for row in self.rows:
            if row.test_name == test_name and row.budget == budget:
                return row
        return None

    def to_dict(self) -> dict:
        return {'metadata': _clean(self.metadata), 'rows': [row.to_dict() for row in self.rows]}

    @classmethod
    def from_dict(cls, data: dict) -> 'ExperimentReport':
        return cls([ReportRow.from_dict(r) for r in data.get('rows', [])], data.get('metadata', {}))


def compute_match_counts(ds: Dataset, specs: Sequence[StrategySpec],
                         config: Optional[Config] = None) -> Dict[str, object]:
    """
    预先计算 match 预算引用的样例数

    Returns:
        策略名 -> 样例数；计算失败时为对应的异常，引用它的单元会记录为错误
    """
    counts: Dict[str, object] = {}
    targets = sorted({s.budget.value for s in specs if s.budget.kind == 'match'})
    for target in targets:
        if target not in MATCHABLE:
            continue
        try:
            counts[target] = auto_exemplar_count(ds, target, config)
            logger.info("match:%s -> %d 个样例", target, counts[target])
        except Exception as e:  # noqa: BLE001
            logger.warning("计算 %s 的样例数失败: %s", target, e)
            counts[target] = e
    return counts


def run_matrix(ds: Dataset, matrix: MatrixConfig, config: Optional[Config] = None) -> ExperimentReport:
    """
    执行实验矩阵，单元之间并行；某个单元出错只记录在该行，其余照常运行

    Args:
        ds: 数据集
        matrix: 实验矩阵配置
        config: 算法配置

    Returns:
        实验报告
    """
    config = config or app_config
    specs: List[object] = []
    for cell in matrix.cells:
        try:
            specs.append(matrix.build_spec(cell))
        except StrategySpecError as e:
            logger.warning("无效的实验单元 %s [%s]: %s", cell.name, cell.budget, e)
            specs.append(e)
    valid = [s for s in specs if isinstance(s, StrategySpec)]
    match_counts = compute_match_counts(ds, valid, config)

    def execute(index: int) -> ReportRow:
        cell, spec = matrix.cells[index], specs[index]
        if not isinstance(spec, StrategySpec):
            return ReportRow.failed(cell.name, cell.budget, spec)
        if spec.budget.kind == 'match' and isinstance(match_counts.get(spec.budget.value), Exception):
            return ReportRow.failed(cell.name, spec.budget.label(), match_counts[spec.budget.value])
        counts = {k: v for k, v in match_counts.items() if not isinstance(v, Exception)}
        try:
            return ReportRow.from_result(run_strategy(ds, spec, config, counts))
        except Exception as e:  # noqa: BLE001
            logger.error("实验单元 %s [%s] 失败: %s", spec.name, spec.budget.label(), e, exc_info=True)
            return ReportRow.failed(spec.name, spec.budget.label(), e)

    workers = default_worker_count(matrix.workers)
    logger.info("开始实验矩阵: %d 个单元, %d 个工作线程", len(matrix.cells), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        rows = list(pool.map(execute, range(len(matrix.cells))))
    memory = peak_memory_mb()
    logger.info("实验矩阵完成, 常驻内存 %.1f MB, %d 个单元出错",
                memory, sum(1 for r in rows if r.error))

    train, test = ds.subset('train'), ds.subset('test')
    metadata = {
        'class_names': list(ds.class_names),
        'n_train_images': len(train),
        'n_test_images': len(test),
        'n_train_plants': len(train.plant_groups()),
        'n_test_plants': len(test.plant_groups()),
        'dimension': ds.d,
        'master_seed': matrix.master_seed,
        'repetitions': matrix.repetitions,
        'match_counts': {k: v for k, v in match_counts.items() if not isinstance(v, Exception)},
        'metric_fields': list(MetricRecord.NUMERIC_FIELDS),
    }
    return ExperimentReport(rows, metadata)
