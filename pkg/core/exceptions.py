"""
异常模块 - 各组件的错误类型
"""


class ScoutLabelError(Exception):
    """所有错误的基类"""


# ============== 数据集 ==============
class DatasetValidationError(ScoutLabelError, ValueError):
    """数据集校验失败"""


class DimensionMismatchError(DatasetValidationError):
    """特征维度不一致"""


class DuplicateImageIdError(DatasetValidationError):
    """image_id 重复"""


class SplitConflictError(DatasetValidationError):
    """同一株植物同时出现在训练集和测试集"""


class LabelConflictError(DatasetValidationError):
    """同一株植物带有多个类别标签"""


class EmptyTrainSplitError(DatasetValidationError):
    """训练集为空"""


class UnknownFormatError(DatasetValidationError):
    """不支持的文件格式"""


class ZeroNormError(ScoutLabelError, ValueError):
    """零向量无法归一化"""


# ============== 算法 ==============
class AffinityError(ScoutLabelError, ValueError):
    """相似度矩阵构造失败"""


class ClusteringError(ScoutLabelError, ValueError):
    """聚类参数或输入无效"""


class LabellingError(ScoutLabelError, ValueError):
    """标注流程无效"""


class ClassifierError(ScoutLabelError, ValueError):
    """分类器输入无效"""


class SingleClassError(ClassifierError):
    """训练标签只有一个类别"""


# ============== 实验 ==============
class StrategySpecError(ScoutLabelError, ValueError):
    """策略与样例预算不匹配"""


class ReportError(ScoutLabelError):
    """报告无法写出"""
