"""
张量引擎模块
最小稠密张量 + 反向模式自动微分，只提供模型需要的操作
"""

from . import ops
from .gradcheck import GradcheckResult, gradcheck, weighted_sum_loss
from .tensor import Tape, Tensor, backward, current_tape, get_default_dtype, no_grad, set_default_dtype

__version__ = "1.0.0"

__all__ = [
    "ops",
    "Tensor",
    "Tape",
    "backward",
    "current_tape",
    "no_grad",
    "set_default_dtype",
    "get_default_dtype",
    "gradcheck",
    "GradcheckResult",
    "weighted_sum_loss",
]
