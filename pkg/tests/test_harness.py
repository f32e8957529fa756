import math

import numpy as np
import pandas as pd
import pytest
from PIL import Image
from scipy.stats import spearmanr

from core.dataset import generate_synthetic
from core.exceptions import ReportError, StrategySpecError
from core.harness import (
    Budget, ExperimentReport, MatrixConfig, StrategySpec, auto_exemplar_count, emit_report,
    format_table, load_report, per_class_tpr, reduction_factor, run_matrix, run_strategy,
    select_exemplars, summarize,
)
from core.harness.report import RESULT_COLUMNS
from core.labelling import Labeller

from conftest import hard_spec, separated_spec


# ============== 预算与策略单元 ==============

@pytest.mark.parametrize('text, kind, value', [
    ('auto', 'auto', None),
    ('10%', 'percent', 10.0),
    ('12.5', 'percent', 12.5),
    (20, 'percent', 20.0),
    ('match:AP', 'match', 'AP'),
])
def test_budget_parse(text, kind, value):
    budget = Budget.parse(text)
    assert (budget.kind, budget.value) == (kind, value)


@pytest.mark.parametrize('text', ['ten', '0%', '150%', 'match:LP', 'match:Full'])
def test_budget_parse_rejects(text):
    with pytest.raises(StrategySpecError):
        Budget.parse(text)


def test_budget_resolve():
    assert Budget.parse('10%').resolve(50) == 5
    assert Budget.parse('0.1%').resolve(50) == 1
    assert Budget.parse('100%').resolve(50) == 50
    assert Budget.parse('auto').resolve(50) is None
    assert Budget.parse('match:AP').resolve(50, {'AP': 7}) == 7
    assert Budget.parse('match:AP').resolve(50, {'AP': 70}) == 50
    with pytest.raises(StrategySpecError):
        Budget.parse('match:AP').resolve(50, {})


def test_budget_label():
    assert Budget.parse('10').label() == '10%'
    assert Budget.parse('match:AP_Refine').label() == 'match:AP_Refine'


def test_strategy_spec_defaults():
    assert StrategySpec('LP', Budget.parse('10%')).repetitions == 10
    assert StrategySpec('AP').repetitions == 1


@pytest.mark.parametrize('name, budget, repetitions', [
    ('Bogus', 'auto', None),
    ('AP', '10%', None),
    ('LP', 'auto', None),
    ('KMeans', 'auto', None),
    ('AP', 'auto', 3),
    ('LLP', '10%', 0),
])
def test_strategy_spec_rejects(name, budget, repetitions):
    with pytest.raises(StrategySpecError):
        StrategySpec(name, Budget.parse(budget), repetitions)


def test_run_seeds_differ_per_repetition():
    spec = StrategySpec('LP', Budget.parse('10%'), seed=5)
    assert spec.run_seed(0) != spec.run_seed(1)
    assert spec.run_seed(0) == StrategySpec('LP', Budget.parse('10%'), seed=5).run_seed(0)
    assert spec.run_seed(0) != StrategySpec('LP', Budget.parse('20%'), seed=5).run_seed(0)


# ============== 指标 ==============

def test_reduction_factor_headline():
    assert reduction_factor(8.1) == pytest.approx(12.3, abs=0.05)
    assert reduction_factor(100.0) == 1.0
    assert math.isnan(reduction_factor(0.0))


def test_per_class_tpr_hand_case():
    y_true = [0, 0, 0, 1, 1, 2, 2, 2, 2]
    y_pred = [0, 0, 1, 1, 1, 2, 2, 3, 0]
    tpr = per_class_tpr(y_true, y_pred, 4)
    assert tpr[:3] == pytest.approx([200 / 3, 100.0, 50.0])
    assert math.isnan(tpr[3])


def test_summarize_mean_and_std(separated_dataset, config):
    result = run_strategy(separated_dataset, StrategySpec('LP', Budget.parse('20%'), 3), config)
    summary = summarize(result.metrics, separated_dataset.class_names)
    values = [m.labelling_accuracy for m in result.metrics]
    assert summary['labelling_accuracy'] == pytest.approx(np.mean(values))
    assert summary['labelling_accuracy_std'] == pytest.approx(np.std(values))
    assert summary['reduction_factor'] == pytest.approx(100.0 / summary['percent_labelled'])


# ============== 策略 ==============

def test_full_labels_everything(separated_dataset, config):
    result = run_strategy(separated_dataset, StrategySpec('Full'), config)
    metrics = result.metrics[0]
    assert metrics.percent_labelled == 100.0
    assert metrics.labelling_accuracy == 100.0
    assert metrics.classification_accuracy_plant >= 95.0
    assert metrics.reduction_factor == 1.0
    assert result.runs[0].assignment.method == 'full'


@pytest.mark.parametrize('name', ['Mean', 'AP_Refine', 'AP', 'APLP', 'APLLP'])
def test_clustering_strategies_on_separated_benchmark(separated_dataset, config, name):
    result = run_strategy(separated_dataset, StrategySpec(name), config)
    metrics = result.metrics[0]
    assert metrics.labelling_accuracy == 100.0
    assert metrics.classification_accuracy_plant >= 95.0
    assert metrics.percent_labelled < 100.0
    assert metrics.clamp_violations == 0 or name == 'APLP'


def test_locked_strategies_never_overwrite_labels(separated_dataset, config):
    for name, budget in [('LLP', Budget.parse('10%')), ('APLLP', None)]:
        result = run_strategy(separated_dataset, StrategySpec(name, budget, None if budget else 1),
                              config)
        for run in result.runs:
            raw = run.raw_assignment
            assert np.array_equal(raw.labels[raw.labelled_indices], raw.exemplar_labels)
            assert run.metrics.clamp_violations == 0


def test_kmeans_repetitions_are_runs_of_one_call(separated_dataset, config):
    result = run_strategy(separated_dataset, StrategySpec('KMeans', Budget.parse('10%'), 4), config)
    assert len(result.runs) == 4
    n_train = len(separated_dataset.subset('train'))
    assert all(run.clusters.n_clusters == round(0.1 * n_train) for run in result.runs)


def test_match_budget_uses_ap_count(separated_dataset, config):
    expected = auto_exemplar_count(separated_dataset, 'AP', config)
    result = run_strategy(separated_dataset, StrategySpec('LP', Budget.parse('match:AP'), 2), config)
    assert all(m.n_exemplars == expected for m in result.metrics)


def test_auto_count_rejects_budgeted_strategy(separated_dataset, config):
    with pytest.raises(StrategySpecError):
        auto_exemplar_count(separated_dataset, 'LP', config)


def test_run_strategy_is_deterministic(config):
    ds = generate_synthetic(separated_spec(seed=3))
    spec = StrategySpec('LLP', Budget.parse('10%'), 3, seed=11)
    first = [m.to_dict() for m in run_strategy(ds, spec, config).metrics]
    second = [m.to_dict() for m in run_strategy(ds, spec, config).metrics]
    np.testing.assert_equal(first, second)


def test_exemplar_seed_matches_first_repetition(separated_dataset, config):
    spec = StrategySpec('LP', Budget.parse('10%'), 1, seed=2)
    view = separated_dataset.subset('train')
    exemplars, _ = select_exemplars(view, 'LP', Budget.parse('10%').resolve(len(view)),
                                    spec.exemplar_seed(), config)
    result = run_strategy(separated_dataset, spec, config)
    assert np.array_equal(np.sort(exemplars.indices), np.sort(result.runs[0].exemplars.indices))


def test_custom_labeller_is_used(tiny_dataset, config):
    view = tiny_dataset.subset('train')
    labeller = Labeller.oracle(view)
    run_strategy(tiny_dataset, StrategySpec('Full'), config, labeller=labeller)
    assert sorted(labeller.queried) == [0, 1, 2]


# ============== 实验矩阵 ==============

def test_matrix_single_full_row(separated_dataset, config):
    matrix = MatrixConfig.from_dict({'strategies': [{'name': 'Full'}], 'workers': 1}, config)
    report = run_matrix(separated_dataset, matrix, config)
    assert len(report.rows) == 1
    row = report.rows[0]
    assert (row.test_name, row.budget, row.error) == ('Full', 'auto', None)
    assert row.value('percent_labelled') == 100.0
    assert report.metadata['class_names'] == separated_dataset.class_names


def test_matrix_records_bad_cells(separated_dataset, config):
    data = {'workers': 2, 'repetitions': 2, 'strategies': [
        {'name': 'Full'},
        {'name': 'AP', 'budgets': ['10%']},
        {'name': 'Bogus'},
        {'name': 'LP', 'budgets': ['20%']},
    ]}
    report = run_matrix(separated_dataset, MatrixConfig.from_dict(data, config), config)
    assert [r.test_name for r in report.rows] == ['Full', 'AP', 'Bogus', 'LP']
    assert [bool(r.error) for r in report.rows] == [False, True, True, False]
    assert report.rows[2].error.startswith('StrategySpecError')
    assert report.row('LP', '20%').n_repetitions == 2
    assert len(report.errors) == 2


def test_matrix_rejects_empty(config):
    with pytest.raises(StrategySpecError):
        MatrixConfig.from_dict({'strategies': []}, config)


def test_matrix_default_cells(config):
    matrix = MatrixConfig.default(config)
    names = {(c.name, c.budget) for c in matrix.cells}
    assert ('LLP', 'match:AP_Refine') in names and ('KMeans', '5%') in names
    assert matrix.build_spec(next(c for c in matrix.cells if c.name == 'AP')).repetitions == 1


# ============== 报告输出 ==============

@pytest.fixture
def small_report(separated_dataset, config):
    data = {'workers': 1, 'repetitions': 2, 'strategies': [
        {'name': 'Full'}, {'name': 'AP'}, {'name': 'LP', 'budgets': ['10%', 'match:AP']},
    ]}
    return run_matrix(separated_dataset, MatrixConfig.from_dict(data, config), config)


def test_emit_report_is_byte_reproducible(small_report, tmp_path):
    first = emit_report(small_report, tmp_path / 'a')
    second = emit_report(small_report, tmp_path / 'b')
    assert [p.name for p in first] == [p.name for p in second]
    for a, b in zip(first, second):
        assert a.read_bytes() == b.read_bytes()


def test_rerun_matrix_writes_identical_report(separated_dataset, config, tmp_path):
    data = {'workers': 2, 'repetitions': 2, 'strategies': [{'name': 'Full'}, {'name': 'AP'}]}
    for name in ('a', 'b'):
        report = run_matrix(separated_dataset, MatrixConfig.from_dict(data, config), config)
        emit_report(report, tmp_path / name, svg=False)
        assert 'peak_memory_mb' not in report.metadata
    for file in ('report.json', 'results.csv', 'per_class_tpr.csv'):
        assert (tmp_path / 'a' / file).read_bytes() == (tmp_path / 'b' / file).read_bytes()


def test_emit_report_files_and_columns(small_report, tmp_path):
    names = {p.name for p in emit_report(small_report, tmp_path, png=True)}
    assert {'results.csv', 'per_class_tpr.csv', 'report.json', 'labelling_curve.svg',
            'classification_curve.svg', 'labelling_curve.png'} <= names
    results = pd.read_csv(tmp_path / 'results.csv')
    assert list(results.columns) == RESULT_COLUMNS
    assert len(results) == 4
    tpr = pd.read_csv(tmp_path / 'per_class_tpr.csv')
    assert list(tpr.columns) == ['test_name', 'budget'] + small_report.class_names
    with Image.open(tmp_path / 'labelling_curve.png') as image:
        assert image.size == (720, 480)
    assert (tmp_path / 'labelling_curve.svg').read_text(encoding='utf-8').startswith('<svg')


def test_load_report_round_trip(small_report, tmp_path):
    emit_report(small_report, tmp_path)
    loaded = load_report(tmp_path)
    assert [(r.test_name, r.budget) for r in loaded.rows] == \
        [(r.test_name, r.budget) for r in small_report.rows]
    full = loaded.row('Full')
    assert full.value('labelling_accuracy') == 100.0
    assert math.isnan(full.value('n_clusters'))
    assert loaded.metadata['match_counts'] == small_report.metadata['match_counts']
    assert 'Full' in format_table(loaded)


def test_emit_empty_report_is_error(tmp_path):
    with pytest.raises(ReportError):
        emit_report(ExperimentReport([]), tmp_path)


def test_load_missing_report(tmp_path):
    with pytest.raises(ReportError):
        load_report(tmp_path)


# ============== 困难数据上的定性趋势 ==============

@pytest.mark.slow
def test_qualitative_trends_on_hard_benchmark(config):
    seeds = range(10)
    labelling = {name: [] for name in ('APLP', 'APLLP', 'LP', 'LLP')}
    gaps = {}
    budgets, kmeans_accuracy = [], []
    for seed in seeds:
        ds = generate_synthetic(hard_spec(seed))
        results = [run_strategy(ds, StrategySpec(name, seed=seed), config)
                   for name in ('APLP', 'APLLP')]
        results += [run_strategy(ds, StrategySpec(name, Budget.parse('match:AP'), seed=seed), config)
                    for name in ('LP', 'LLP')]
        for percent in (5, 10, 20):
            result = run_strategy(ds, StrategySpec('KMeans', Budget.parse(percent), seed=seed), config)
            budgets.append(percent)
            kmeans_accuracy.append(result.summary()['labelling_accuracy'])
            results.append(result)
        for result in results:
            summary = result.summary()
            if result.spec.name in labelling:
                labelling[result.spec.name].append(summary['labelling_accuracy'])
            gaps.setdefault(result.spec.name, []).append(
                summary['classification_accuracy_plant'] - summary['labelling_accuracy'])

    means = {name: np.mean(values) for name, values in labelling.items()}
    for guided in ('APLP', 'APLLP'):
        for random in ('LP', 'LLP'):
            assert means[guided] >= means[random]
    assert spearmanr(budgets, kmeans_accuracy).correlation >= 0
    for name, values in gaps.items():
        assert np.mean(np.abs(values)) <= 5.0, name


@pytest.mark.slow
def test_full_bounds_classification_on_hard_benchmark(config):
    cells = [('Full', None), ('AP', None), ('APLLP', None), ('APLP', None),
             ('KMeans', '10%'), ('LLP', 'match:AP')]
    accuracy = {name: [] for name, _ in cells}
    for seed in range(10):
        ds = generate_synthetic(hard_spec(seed))
        for name, budget in cells:
            spec = StrategySpec(name, Budget.parse(budget) if budget else None, seed=seed)
            accuracy[name].append(run_strategy(ds, spec, config).summary()['classification_accuracy_plant'])
    full = np.mean(accuracy['Full'])
    for name, values in accuracy.items():
        assert np.mean(values) <= full + 2.0, name
