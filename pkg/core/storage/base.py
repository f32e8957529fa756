"""
基础存储类 - 提供通用的 JSON/CSV 读写功能
"""
import json
import logging
from pathlib import Path
from typing import Any, Optional, Union

import pandas as pd

from ..exceptions import ReportError

logger = logging.getLogger(__name__)


class BaseStorage:
    """基础存储类，所有文件都写在 storage_dir 之下"""

    def __init__(self, storage_dir: Optional[Union[str, Path]] = None):
        """
        初始化基础存储

        Args:
            storage_dir: 存储目录，默认当前目录
        """
        self.storage_dir = Path(storage_dir) if storage_dir is not None else Path('.')

    def _ensure_storage_dir(self):
        """确保存储目录存在"""
        try:
            self.storage_dir.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise ReportError(f"无法创建目录 {self.storage_dir}: {e}") from e

    def _path(self, name: Union[str, Path]) -> Path:
        path = Path(name)
        return path if path.is_absolute() else self.storage_dir / path

    def _save_json(self, name: Union[str, Path], data: Any) -> Path:
        """
        保存数据到 JSON 文件（键排序，输出字节可复现）

        Args:
            name: 文件名或路径
            data: 要保存的数据

        Returns:
            写出的文件路径
        """
        self._ensure_storage_dir()
        path = self._path(name)
        try:
            with open(path, 'w', encoding='utf-8', newline='\n') as f:
                json.dump(data, f, indent=2, ensure_ascii=False, sort_keys=True)
                f.write('\n')
        except OSError as e:
            raise ReportError(f"保存文件失败 {path}: {e}") from e
        return path

    def _load_json(self, name: Union[str, Path]) -> Any:
        """从 JSON 文件加载数据"""
        path = self._path(name)
        with open(path, 'r', encoding='utf-8') as f:
            return json.load(f)

    def _save_csv(self, name: Union[str, Path], frame: pd.DataFrame,
                  float_format: Optional[str] = None) -> Path:
        """保存表格到 CSV 文件（不写索引）"""
        self._ensure_storage_dir()
        path = self._path(name)
        try:
            frame.to_csv(path, index=False, float_format=float_format, lineterminator='\n')
        except OSError as e:
            raise ReportError(f"保存文件失败 {path}: {e}") from e
        return path

    def _load_csv(self, name: Union[str, Path], **kwargs) -> pd.DataFrame:
        """读取 CSV 文件"""
        return pd.read_csv(self._path(name), **kwargs)
