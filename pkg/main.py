"""
ScoutLabel - 植物图像聚类与选择性标注工具
入口文件
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from core.affinity import cosine_similarity_matrix
from core.clustering import (
    APParams, HierParams, KMeansParams, affinity_propagation, kmeans, locked_hierarchical,
)
from core.config import Config, app_config
from core.dataset import SyntheticSpec, generate_synthetic, split_counts
from core.exceptions import ScoutLabelError
from core.harness import (
    STRATEGY_NAMES, Budget, MatrixConfig, StrategySpec, auto_exemplar_count, emit_report,
    format_table, load_report, run_matrix, run_strategy, select_exemplars,
)
from core.labelling import Labeller
from core.storage import AssignmentStorage, ModelStorage, dataset_storage
from core.utils import setup_logging

logger = logging.getLogger('scoutlabel')

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CELL_ERRORS = 3


def _load_json(path) -> dict:
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


def _print_errors(errors):
    """以机器可读的 JSON 把错误列表写到 stderr"""
    print(json.dumps({'errors': errors}, ensure_ascii=False), file=sys.stderr)


def _load(args, config):
    return dataset_storage.load(args.data, fmt=args.format,
                                normalize=bool(config.get('normalize_features', True)))


# ============== 子命令 ==============

def cmd_generate(args, config) -> int:
    """按合成数据描述生成数据集"""
    spec = SyntheticSpec.from_dict(_load_json(args.spec))
    if args.seed is not None:
        spec.seed = args.seed
    ds = generate_synthetic(spec)
    dataset_storage.save(ds, args.out, fmt=args.format)
    print(f"已生成 {len(ds)} 张图像 -> {args.out}")
    return EXIT_OK


def cmd_summary(args, config) -> int:
    """打印类别 × 划分的数量表"""
    ds = _load(args, config)
    table = split_counts(ds, unit=args.unit)
    print(table.to_string())
    print(f"\n共 {len(ds)} 张图像, {ds.n_classes} 个类别, 维度 {ds.d}")
    return EXIT_OK


def cmd_run(args, config) -> int:
    """执行实验矩阵并输出报告"""
    ds = _load(args, config)
    data = _load_json(args.matrix) if args.matrix else {}
    if args.workers is not None:
        data['workers'] = args.workers
    if args.repetitions is not None:
        data['repetitions'] = args.repetitions
    if args.seed is not None:
        data['master_seed'] = args.seed
    matrix = MatrixConfig.from_dict(data, config)
    report = run_matrix(ds, matrix, config)
    emit_report(report, args.out, svg=not args.no_svg, png=args.png)
    print(format_table(report))
    if report.errors:
        _print_errors([{'type': 'CellError', 'test_name': row.test_name, 'budget': row.budget,
                        'message': row.error} for row in report.errors])
        return EXIT_CELL_ERRORS
    return EXIT_OK


def cmd_cluster(args, config) -> int:
    """只做聚类，导出每张图像的簇编号"""
    ds = _load(args, config)
    view = ds.subset(args.split) if args.split != 'all' else None
    X = view.X if view is not None else ds.X
    image_ids = view.image_ids if view is not None else [s.image_id for s in ds.samples]
    plant_ids = view.plant_ids if view is not None else [s.plant_id for s in ds.samples]
    y_true = view.y if view is not None else ds.y
    seed = config.get('master_seed', 0) if args.seed is None else args.seed

    if args.algo == 'ap':
        clusters = affinity_propagation(cosine_similarity_matrix(X), APParams.from_config(config))
    elif args.algo == 'kmeans':
        if not args.k:
            raise ScoutLabelError("kmeans 需要 --k")
        runs = kmeans(X, KMeansParams.from_config(config, k=args.k, seed=seed))
        clusters = min(runs, key=lambda run: run.inertia).assignment
    else:
        clusters = locked_hierarchical(X, plant_ids, HierParams.from_config(config))

    AssignmentStorage().save_clusters(clusters, image_ids, name=args.out)
    print(json.dumps({
        'algo': args.algo,
        'n_samples': clusters.n_samples,
        'n_clusters': clusters.n_clusters,
        'converged': clusters.converged,
        'iterations': clusters.iterations,
        'purity': round(clusters.purity(y_true) * 100.0, 4),
    }, ensure_ascii=False))
    return EXIT_OK


def cmd_label(args, config) -> int:
    """
    对训练集执行一个标注策略

    先用 --list-exemplars 导出待标注样例，人工填好标签后
    再用 --annotations 读入标注文件完成标注。
    """
    ds = _load(args, config)
    view = ds.subset('train')
    seed = config.get('master_seed', 0) if args.seed is None else args.seed
    repetitions = 1 if args.strategy in ('KMeans', 'LP', 'LLP') else None
    spec = StrategySpec(args.strategy, Budget.parse(args.budget), repetitions, seed)
    storage = AssignmentStorage()

    if args.list_exemplars:
        if spec.name == 'Full':
            indices = np.arange(len(view))
        else:
            count = spec.budget.resolve(len(view), _match_counts(ds, spec, config))
            indices = select_exemplars(view, spec.name, count, spec.exemplar_seed(), config)[0].indices
        storage.save_exemplar_requests(indices, view.image_ids, name=args.list_exemplars)
        print(f"已导出 {len(indices)} 个待标注样例 -> {args.list_exemplars}")
        return EXIT_OK

    labeller = None
    if args.annotations:
        labeller = Labeller.from_annotations(view, storage.load_annotations(args.annotations))
    result = run_strategy(ds, spec, config, labeller=labeller)
    outcome = result.runs[0]
    if args.out:
        storage.save_labels(outcome.assignment, view.image_ids, ds.class_names, name=args.out)
    if args.model:
        ModelStorage().save(outcome.model, args.model)
    print(json.dumps(outcome.metrics.to_dict(), ensure_ascii=False, sort_keys=True))
    return EXIT_OK


def _match_counts(ds, spec, config):
    if spec.budget.kind != 'match':
        return None
    return {spec.budget.value: auto_exemplar_count(ds, spec.budget.value, config)}


def cmd_report(args, config) -> int:
    """重新输出已有的实验报告"""
    report = load_report(args.input)
    emit_report(report, args.out or args.input, svg=args.svg, png=args.png)
    print(format_table(report))
    return EXIT_OK


# ============== 参数解析 ==============

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='scoutlabel', description='植物图像聚类与选择性标注工具')
    parser.add_argument('--config', help='JSON 配置文件（默认 ~/.scoutlabel/config.json）')
    parser.add_argument('--log-level', default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='日志级别')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('generate', help='生成合成数据集')
    p.add_argument('--spec', required=True, help='合成数据描述 JSON')
    p.add_argument('--out', required=True, help='输出数据集路径 (.jsonl/.csv)')
    p.add_argument('--format', choices=['jsonl', 'csv'])
    p.add_argument('--seed', type=int)
    p.set_defaults(handler=cmd_generate)

    def add_data(p):
        p.add_argument('--data', required=True, help='数据集路径 (.jsonl/.csv)')
        p.add_argument('--format', choices=['jsonl', 'csv'])

    p = sub.add_parser('summary', help='打印数据集的类别/划分数量表')
    add_data(p)
    p.add_argument('--unit', choices=['images', 'plants'], default='images')
    p.set_defaults(handler=cmd_summary)

    p = sub.add_parser('run', help='执行实验矩阵')
    add_data(p)
    p.add_argument('--matrix', help='实验矩阵 JSON，缺省为完整测试矩阵')
    p.add_argument('--out', required=True, help='结果目录')
    p.add_argument('--workers', type=int)
    p.add_argument('--repetitions', type=int)
    p.add_argument('--seed', type=int, help='主种子')
    p.add_argument('--no-svg', action='store_true', help='不输出 SVG 曲线图')
    p.add_argument('--png', action='store_true', help='额外输出 PNG 曲线图')
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser('cluster', help='聚类并导出簇编号')
    add_data(p)
    p.add_argument('--algo', choices=['ap', 'kmeans', 'hier'], required=True)
    p.add_argument('--k', type=int, help='kmeans 的簇数')
    p.add_argument('--split', choices=['train', 'test', 'all'], default='train')
    p.add_argument('--seed', type=int)
    p.add_argument('--out', required=True, help='输出 CSV')
    p.set_defaults(handler=cmd_cluster)

    p = sub.add_parser('label', help='对训练集执行一个标注策略')
    add_data(p)
    p.add_argument('--strategy', choices=STRATEGY_NAMES, required=True)
    p.add_argument('--budget', default='auto', help="样例预算: auto、10%% 或 match:AP")
    p.add_argument('--annotations', help='人工标注文件 (image_id,label)')
    p.add_argument('--list-exemplars', help='只导出待标注样例到该 CSV')
    p.add_argument('--out', help='输出标签 CSV')
    p.add_argument('--model', help='输出分类器模型 JSON')
    p.add_argument('--seed', type=int)
    p.set_defaults(handler=cmd_label)

    p = sub.add_parser('report', help='从 report.json 重新输出报告')
    p.add_argument('--in', dest='input', required=True, help='结果目录')
    p.add_argument('--out', help='输出目录，默认与 --in 相同')
    p.add_argument('--svg', action='store_true', help='输出 SVG 曲线图')
    p.add_argument('--png', action='store_true', help='输出 PNG 曲线图')
    p.set_defaults(handler=cmd_report)
    return parser


def main(argv=None) -> int:
    """命令行入口"""
    parser = build_parser()
    args = parser.parse_args(argv)
    setup_logging(getattr(logging, args.log_level))
    try:
        config = app_config
        if args.config:
            if not Path(args.config).exists():
                raise FileNotFoundError(f"配置文件不存在: {args.config}")
            config = Config(args.config)
        return args.handler(args, config)
    except (ScoutLabelError, ValueError, OSError) as e:
        logger.debug("命令失败", exc_info=True)
        _print_errors([{'type': type(e).__name__, 'message': str(e)}])
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
