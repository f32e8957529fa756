"""
报告输出模块 - 结果表格、逐类真阳性率、report.json 与准确率曲线图
"""
import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union
from xml.sax.saxutils import escape

import pandas as pd
from PIL import Image, ImageDraw, ImageFont

from ..exceptions import ReportError
from ..storage import ReportStorage
from .matrix import ExperimentReport, ReportRow

logger = logging.getLogger(__name__)

RESULT_COLUMNS = [
    'test_name', 'budget', 'percent_labelled', 'labelling_accuracy',
    'classification_accuracy_plant', 'classification_accuracy_image', 'reduction_factor',
    'n_exemplars', 'n_clusters', 'cluster_purity', 'cluster_nmi',
    'labelling_accuracy_std', 'classification_accuracy_plant_std',
    'classification_accuracy_image_std', 'n_repetitions', 'error',
]

# 每个策略固定颜色，输出与运行顺序无关
PALETTE = {
    'Full': '#000000', 'KMeans': '#1f77b4', 'Mean': '#ff7f0e', 'AP_Refine': '#2ca02c',
    'AP': '#d62728', 'LP': '#9467bd', 'LLP': '#8c564b', 'APLP': '#e377c2', 'APLLP': '#17becf',
}
FALLBACK_COLOUR = '#7f7f7f'

CHARTS = {
    'labelling_curve': ('labelling_accuracy', '标注准确率 (%)', 'Labelling accuracy (%)'),
    'classification_curve': ('classification_accuracy_plant', '植物分类准确率 (%)',
                             'Plant classification accuracy (%)'),
}


# ============== 表格 ==============

def results_frame(report: ExperimentReport) -> pd.DataFrame:
    """结果总表，每个实验单元一行"""
    records = []
    for row in report.rows:
        record = {'test_name': row.test_name, 'budget': row.budget,
                  'n_repetitions': row.n_repetitions, 'error': row.error or ''}
        for column in RESULT_COLUMNS:
            if column not in record:
                record[column] = row.value(column)
        records.append(record)
    return pd.DataFrame(records, columns=RESULT_COLUMNS)


def tpr_frame(report: ExperimentReport) -> pd.DataFrame:
    """逐类真阳性率表（植物级，测试集）"""
    class_names = report.class_names
    records = []
    for row in report.rows:
        tpr = row.per_class_tpr()
        record = {'test_name': row.test_name, 'budget': row.budget}
        record.update({name: tpr.get(name, float('nan')) for name in class_names})
        records.append(record)
    return pd.DataFrame(records, columns=['test_name', 'budget'] + class_names)


# ============== 曲线图 ==============

class ChartLayout:
    """
    准确率 (y) 对样例数 (x) 的折线图几何布局

    SVG 与 PNG 使用同一套坐标，保证两种输出一致。
    """

    WIDTH = 720
    HEIGHT = 480
    LEFT, RIGHT, TOP, BOTTOM = 70, 170, 40, 60

    def __init__(self, title: str, y_label: str, series: Dict[str, List[Tuple[float, float]]]):
        self.title = title
        self.y_label = y_label
        self.series = series
        xs = [x for points in series.values() for x, _ in points]
        self.x_max = self._nice_ceiling(max(xs) if xs else 1.0)

    @staticmethod
    def _nice_ceiling(value: float) -> float:
        if value <= 0:
            return 1.0
        magnitude = 10 ** math.floor(math.log10(value))
        for step in (1, 2, 2.5, 5, 10):
            if step * magnitude >= value:
                return step * magnitude
        return 10 * magnitude

    @property
    def plot_width(self) -> float:
        return self.WIDTH - self.LEFT - self.RIGHT

    @property
    def plot_height(self) -> float:
        return self.HEIGHT - self.TOP - self.BOTTOM

    def to_pixel(self, x: float, y: float) -> Tuple[float, float]:
        px = self.LEFT + x / self.x_max * self.plot_width
        py = self.TOP + (1.0 - y / 100.0) * self.plot_height
        return round(px, 2), round(py, 2)

    def x_ticks(self) -> List[float]:
        return [self.x_max * i / 5 for i in range(6)]

    @staticmethod
    def y_ticks() -> List[float]:
        return [0.0, 20.0, 40.0, 60.0, 80.0, 100.0]

    def legend_position(self, index: int) -> Tuple[float, float]:
        return self.WIDTH - self.RIGHT + 20, self.TOP + 10 + index * 22


def chart_series(report: ExperimentReport, metric: str) -> Dict[str, List[Tuple[float, float]]]:
    """按策略收集 (平均样例数, 指标均值) 点列，按样例数排序；出错或缺值的单元跳过"""
    series: Dict[str, List[Tuple[float, float]]] = {}
    for row in report.rows:
        if row.error:
            continue
        x, y = row.value('n_exemplars'), row.value(metric)
        if math.isnan(x) or math.isnan(y):
            continue
        series.setdefault(row.test_name, []).append((float(x), float(y)))
    return {name: sorted(points) for name, points in series.items()}


def _fmt(value: float) -> str:
    return f"{value:.2f}"


def _tick_label(value: float) -> str:
    return f"{value:g}"


def render_svg(layout: ChartLayout) -> str:
    """生成折线图 SVG 文本（不依赖绘图库，输出字节可复现）"""
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{layout.WIDTH}" height="{layout.HEIGHT}" '
        f'viewBox="0 0 {layout.WIDTH} {layout.HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{layout.WIDTH}" height="{layout.HEIGHT}" fill="#ffffff"/>',
        f'<text x="{layout.WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">'
        f'{escape(layout.title)}</text>',
    ]
    x0, y0 = layout.to_pixel(0, 0)
    x1, y1 = layout.to_pixel(layout.x_max, 100)
    for tick in layout.y_ticks():
        _, py = layout.to_pixel(0, tick)
        parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(py)}" x2="{_fmt(x1)}" y2="{_fmt(py)}" '
                     f'stroke="#dddddd"/>')
        parts.append(f'<text x="{_fmt(x0 - 8)}" y="{_fmt(py + 4)}" text-anchor="end">'
                     f'{_tick_label(tick)}</text>')
    for tick in layout.x_ticks():
        px, _ = layout.to_pixel(tick, 0)
        parts.append(f'<line x1="{_fmt(px)}" y1="{_fmt(y0)}" x2="{_fmt(px)}" y2="{_fmt(y0 + 5)}" '
                     f'stroke="#000000"/>')
        parts.append(f'<text x="{_fmt(px)}" y="{_fmt(y0 + 20)}" text-anchor="middle">'
                     f'{_tick_label(round(tick, 6))}</text>')
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y0)}" stroke="#000000"/>')
    parts.append(f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x0)}" y2="{_fmt(y1)}" stroke="#000000"/>')
    parts.append(f'<text x="{_fmt((x0 + x1) / 2)}" y="{_fmt(y0 + 45)}" text-anchor="middle">'
                 f'{escape("样例数")}</text>')
    parts.append(f'<text x="18" y="{_fmt((y0 + y1) / 2)}" text-anchor="middle" '
                 f'transform="rotate(-90 18 {_fmt((y0 + y1) / 2)})">{escape(layout.y_label)}</text>')

    for index, name in enumerate(sorted(layout.series)):
        colour = PALETTE.get(name, FALLBACK_COLOUR)
        pixels = [layout.to_pixel(x, y) for x, y in layout.series[name]]
        if len(pixels) > 1:
            points = ' '.join(f"{_fmt(px)},{_fmt(py)}" for px, py in pixels)
            parts.append(f'<polyline points="{points}" fill="none" stroke="{colour}" stroke-width="2"/>')
        for px, py in pixels:
            parts.append(f'<circle cx="{_fmt(px)}" cy="{_fmt(py)}" r="4" fill="{colour}"/>')
        lx, ly = layout.legend_position(index)
        parts.append(f'<line x1="{_fmt(lx)}" y1="{_fmt(ly)}" x2="{_fmt(lx + 20)}" y2="{_fmt(ly)}" '
                     f'stroke="{colour}" stroke-width="2"/>')
        parts.append(f'<text x="{_fmt(lx + 26)}" y="{_fmt(ly + 4)}">{escape(name)}</text>')
    parts.append('</svg>')
    return '\n'.join(parts) + '\n'


def render_png(layout: ChartLayout) -> Image.Image:
    """用 Pillow 按同一布局绘制 PNG 图像"""
    image = Image.new('RGB', (layout.WIDTH, layout.HEIGHT), 'white')
    draw = ImageDraw.Draw(image)
    font = ImageFont.load_default()
    x0, y0 = layout.to_pixel(0, 0)
    x1, y1 = layout.to_pixel(layout.x_max, 100)
    draw.text((layout.LEFT, 12), layout.title, fill='black', font=font)
    for tick in layout.y_ticks():
        _, py = layout.to_pixel(0, tick)
        draw.line([(x0, py), (x1, py)], fill='#dddddd')
        draw.text((x0 - 30, py - 6), _tick_label(tick), fill='black', font=font)
    for tick in layout.x_ticks():
        px, _ = layout.to_pixel(tick, 0)
        draw.line([(px, y0), (px, y0 + 5)], fill='black')
        draw.text((px - 6, y0 + 10), _tick_label(round(tick, 6)), fill='black', font=font)
    draw.line([(x0, y0), (x1, y0)], fill='black')
    draw.line([(x0, y0), (x0, y1)], fill='black')
    for index, name in enumerate(sorted(layout.series)):
        colour = PALETTE.get(name, FALLBACK_COLOUR)
        pixels = [layout.to_pixel(x, y) for x, y in layout.series[name]]
        if len(pixels) > 1:
            draw.line(pixels, fill=colour, width=2)
        for px, py in pixels:
            draw.ellipse([(px - 4, py - 4), (px + 4, py + 4)], fill=colour)
        lx, ly = layout.legend_position(index)
        draw.line([(lx, ly), (lx + 20, ly)], fill=colour, width=2)
        draw.text((lx + 26, ly - 6), name, fill='black', font=font)
    return image


# ============== 输出 ==============

def emit_report(report: ExperimentReport, out_dir: Union[str, Path],
                svg: bool = True, png: bool = False) -> List[Path]:
    """
    输出 results.csv、per_class_tpr.csv、report.json 以及两张曲线图

    同一份报告输出两次得到逐字节相同的文件。

    Args:
        report: 实验报告
        out_dir: 输出目录
        svg: 是否输出 SVG 曲线图
        png: 是否额外输出 PNG 曲线图

    Raises:
        ReportError: 报告为空或无法写入
    """
    if not report.rows:
        raise ReportError("报告为空，没有可输出的内容")
    storage = ReportStorage(out_dir)
    written = storage.save_tables(results_frame(report), tpr_frame(report), report.to_dict())
    for stem, (metric, y_label, ascii_label) in CHARTS.items():
        series = chart_series(report, metric)
        if svg:
            layout = ChartLayout(f"{y_label} - 样例数", y_label, series)
            written.append(storage.save_svg(stem, render_svg(layout)))
        if png:
            # 默认位图字体只支持拉丁字符
            layout = ChartLayout(f"{ascii_label} vs exemplars", ascii_label, series)
            written.append(storage.save_png(stem, render_png(layout)))
    logger.info("报告已输出到 %s: %s", out_dir, ", ".join(p.name for p in written))
    return written


def load_report(in_dir: Union[str, Path]) -> ExperimentReport:
    """读取 emit_report 写出的 report.json"""
    return ExperimentReport.from_dict(ReportStorage(in_dir).load_report_data())


def format_table(report: ExperimentReport, rows: Optional[Sequence[ReportRow]] = None) -> str:
    """命令行输出用的简要文本表"""
    frame = results_frame(report)
    if rows is not None:
        keep = {(r.test_name, r.budget) for r in rows}
        frame = frame[[(t, b) in keep for t, b in zip(frame['test_name'], frame['budget'])]]
    columns = ['test_name', 'budget', 'percent_labelled', 'labelling_accuracy',
               'classification_accuracy_plant', 'reduction_factor', 'error']
    return frame[columns].to_string(index=False, float_format=lambda v: f"{v:.1f}")
