"""
AB-UPT 模型模块
双分支锚点 Transformer、位置/攻角嵌入、参数管理与检查点
"""

from .abupt import AbUptModel, AnchorCache, Modulation, Prediction, TokenBatch
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .embedding import PositionEmbedding, condition_features
from .params import BRANCHES, count_parameters, init_parameters, parameter_shapes

__version__ = "1.0.0"

__all__ = [
    "AbUptModel",
    "AnchorCache",
    "Modulation",
    "Prediction",
    "TokenBatch",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "PositionEmbedding",
    "condition_features",
    "BRANCHES",
    "count_parameters",
    "init_parameters",
    "parameter_shapes",
]
