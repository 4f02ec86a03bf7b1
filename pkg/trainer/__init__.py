"""
训练模块
学习率调度、Lion 优化器、EMA、数据划分、锚点采样与训练循环
"""

from .ema import EmaWeights, ema_update
from .lion import LionOptimizer, OptimizerState, lion_step
from .loop import Trainer, TrainResult, predict_case, training_loss, training_step
from .sampling import TrainingSample, inference_batch, sample_training_tokens, volume_subsample
from .schedule import lr_at
from .split import DatasetSplit, split_dataset

__version__ = "1.0.0"

__all__ = [
    "EmaWeights",
    "ema_update",
    "LionOptimizer",
    "OptimizerState",
    "lion_step",
    "Trainer",
    "TrainResult",
    "predict_case",
    "training_loss",
    "training_step",
    "TrainingSample",
    "inference_batch",
    "sample_training_tokens",
    "volume_subsample",
    "lr_at",
    "DatasetSplit",
    "split_dataset",
]
