"""
实验模块 - 测试策略、评估指标、实验矩阵与报告输出
"""

from .metrics import MetricRecord, compute_metrics, per_class_tpr, reduction_factor, summarize
from .strategies import (
    STRATEGY_NAMES, Budget, RunOutcome, StrategyResult, StrategySpec,
    auto_exemplar_count, run_strategy, select_exemplars,
)
from .matrix import (
    DEFAULT_MATRIX, ExperimentReport, MatrixCell, MatrixConfig, ReportRow,
    compute_match_counts, run_matrix,
)
from .report import emit_report, format_table, load_report

__all__ = [
    'MetricRecord', 'compute_metrics', 'per_class_tpr', 'reduction_factor', 'summarize',
    'STRATEGY_NAMES', 'Budget', 'RunOutcome', 'StrategyResult', 'StrategySpec',
    'auto_exemplar_count', 'run_strategy', 'select_exemplars',
    'DEFAULT_MATRIX', 'ExperimentReport', 'MatrixCell', 'MatrixConfig', 'ReportRow',
    'compute_match_counts', 'run_matrix',
    'emit_report', 'format_table', 'load_report',
]
