"""
统一异常体系
所有模块抛出的领域异常均继承自 AbuptError，CLI 据此映射退出码
"""


class AbuptError(Exception):
    """领域异常基类"""

    error_code = "E-UNKNOWN"
    exit_code = 1


class ConfigError(AbuptError):
    """配置非法（未知键、取值越界、维度不整除等）"""

    error_code = "E-CONFIG"
    exit_code = 2


class InvalidArgumentError(AbuptError):
    """调用参数非法"""

    error_code = "E-ARGUMENT"
    exit_code = 2


class ShapeError(AbuptError):
    """数组/张量形状不匹配"""

    error_code = "E-SHAPE"
    exit_code = 2


class DataError(AbuptError):
    """数据文件相关异常"""

    error_code = "E-DATA"
    exit_code = 3


class CorruptFileError(DataError):
    """文件损坏：魔数、版本、校验和或长度不符"""

    error_code = "E-CORRUPT"


class NotFoundError(DataError):
    """算例或文件不存在"""

    error_code = "E-NOTFOUND"


class NumericError(AbuptError):
    """数值异常（前向计算出现 NaN/Inf）"""

    error_code = "E-NUMERIC"
    exit_code = 4


class UndefinedRatioError(NumericError):
    """相对误差或 R² 的分母为零"""

    error_code = "E-RATIO"


class EmptySliceError(InvalidArgumentError):
    """剖面切片内没有任何点"""

    error_code = "E-EMPTYSLICE"


__all__ = [
    "AbuptError",
    "ConfigError",
    "InvalidArgumentError",
    "ShapeError",
    "DataError",
    "CorruptFileError",
    "NotFoundError",
    "NumericError",
    "UndefinedRatioError",
    "EmptySliceError",
]
