"""
配置管理模块 - 保存和加载算法参数
"""
import json
import logging
from pathlib import Path
from typing import Optional, Union

logger = logging.getLogger(__name__)


class Config:
    """配置管理类"""

    DEFAULT_CONFIG = {
        'normalize_features': True,  # 加载时对描述子做 L2 归一化
        # 亲和传播 (AP)
        'ap_damping': 0.5,
        'ap_preference': 'median',  # 'median' 或具体数值
        'ap_max_iterations': 1000,
        'ap_convergence_window': 50,  # 样例集合连续不变的迭代次数
        # k-means
        'kmeans_runs': 10,
        'kmeans_max_iterations': 300,
        'kmeans_tolerance': 1e-6,
        # 锁定层次聚类
        'hier_bic_lambda': 1.0,
        'hier_variance_floor': 1e-6,
        'hier_singleton_std': 'median_pairwise',  # 'median_pairwise' 或具体数值
        'hier_locked_group_stats': 'singleton',  # 'singleton' 或 'empirical'
        'hier_singleton_fallback': True,
        # 标签传播
        'lp_alpha': 0.2,
        'lp_sigma': 0.16,
        'lp_max_iterations': 1000,
        'lp_tolerance': 1e-6,
        # 分类器
        'train_learning_rate': 0.1,
        'train_l2_penalty': 1e-4,
        'train_epochs': 500,
        'train_tolerance': 1e-8,
        'score_mode': 'probability',  # 'probability' 或 'logit'
        # 实验矩阵
        'master_seed': 0,
        'repetitions': 10,
        'workers': 0,  # 0 表示使用物理核心数
    }

    def __init__(self, config_file: Optional[Union[str, Path]] = None):
        self.config_dir = Path.home() / '.scoutlabel'
        self.config_file = Path(config_file) if config_file else self.config_dir / 'config.json'
        self.config = self.DEFAULT_CONFIG.copy()
        self.load()

    def _ensure_config_dir(self):
        """确保配置目录存在"""
        parent = self.config_file.parent
        if not parent.exists():
            parent.mkdir(parents=True)

    def load(self):
        """加载配置"""
        if not self.config_file.exists():
            return
        try:
            with open(self.config_file, 'r', encoding='utf-8') as f:
                saved_config = json.load(f)
        except (OSError, json.JSONDecodeError) as e:
            logger.warning("加载配置失败 %s: %s", self.config_file, e)
            return
        # 合并配置，保留默认值
        for key in self.DEFAULT_CONFIG:
            if key in saved_config:
                self.config[key] = saved_config[key]
        unknown = sorted(set(saved_config) - set(self.DEFAULT_CONFIG))
        if unknown:
            logger.warning("忽略未知配置项: %s", ", ".join(unknown))

    def save(self):
        """保存配置"""
        self._ensure_config_dir()
        with open(self.config_file, 'w', encoding='utf-8') as f:
            json.dump(self.config, f, indent=2, ensure_ascii=False, sort_keys=True)

    def get(self, key, default=None):
        """获取配置项"""
        return self.config.get(key, default)

    def set(self, key, value):
        """设置配置项（仅内存，需要持久化时调用 save）"""
        self.config[key] = value

    def update(self, **kwargs):
        """批量更新配置"""
        for key, value in kwargs.items():
            self.config[key] = value

    def reset(self):
        """重置为默认配置"""
        self.config = self.DEFAULT_CONFIG.copy()

    def copy(self) -> 'Config':
        """复制一份独立的配置（不重新读取文件）"""
        clone = Config.__new__(Config)
        clone.config_dir = self.config_dir
        clone.config_file = self.config_file
        clone.config = dict(self.config)
        return clone


# 全局配置实例
app_config = Config()
