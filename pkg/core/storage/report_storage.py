"""
报告存储模块 - 结果目录中表格、report.json 与曲线图文件的读写
"""
import logging
from pathlib import Path
from typing import List

import pandas as pd
from PIL import Image

from ..exceptions import ReportError
from .base import BaseStorage

logger = logging.getLogger(__name__)

RESULTS_FILE = 'results.csv'
TPR_FILE = 'per_class_tpr.csv'
REPORT_FILE = 'report.json'


class ReportStorage(BaseStorage):
    """实验报告目录，表格和图像由调用方生成后写入"""

    def save_tables(self, results: pd.DataFrame, tpr: pd.DataFrame, report: dict) -> List[Path]:
        """
        写出 results.csv、per_class_tpr.csv 与 report.json

        Args:
            results: 每个实验单元一行的结果表
            tpr: 逐类真阳性率表
            report: 可 JSON 序列化的完整报告

        Returns:
            按上述顺序写出的文件路径
        """
        return [
            self._save_csv(RESULTS_FILE, results, float_format='%.4f'),
            self._save_csv(TPR_FILE, tpr, float_format='%.4f'),
            self._save_json(REPORT_FILE, report),
        ]

    def save_svg(self, stem: str, text: str) -> Path:
        self._ensure_storage_dir()
        path = self._path(f"{stem}.svg")
        try:
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                f.write(text)
        except OSError as e:
            raise ReportError(f"保存文件失败 {path}: {e}") from e
        return path

    def save_png(self, stem: str, image: Image.Image) -> Path:
        self._ensure_storage_dir()
        path = self._path(f"{stem}.png")
        try:
            image.save(path, format='PNG')
        except OSError as e:
            raise ReportError(f"保存图片失败 {path}: {e}") from e
        return path

    def load_report_data(self) -> dict:
        """读取 report.json 的原始内容"""
        path = self._path(REPORT_FILE)
        if not path.exists():
            raise ReportError(f"找不到报告文件 {path}")
        return self._load_json(REPORT_FILE)
