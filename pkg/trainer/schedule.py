"""
学习率调度：线性预热 + 余弦退火
"""

import math

from canonical.errors import InvalidArgumentError
from canonical.models import TrainConfig


def lr_at(step: int, cfg: TrainConfig) -> float:
    """
    第 step 步的学习率

    前 ⌈warmup_fraction·total⌉ 步从 0 线性升至 peak_lr，之后余弦退火，total_updates 处为 final_lr

    Raises:
        InvalidArgumentError: step 不在 [0, total_updates]
    """
    if isinstance(step, bool) or not isinstance(step, int) or step < 0 or step > cfg.total_updates:
        raise InvalidArgumentError(f"step={step} 超出 [0, {cfg.total_updates}]")
    warmup = cfg.warmup_steps
    if step <= warmup:
        return cfg.peak_lr * step / warmup
    progress = (step - warmup) / (cfg.total_updates - warmup)
    return cfg.final_lr + (cfg.peak_lr - cfg.final_lr) * 0.5 * (1.0 + math.cos(math.pi * progress))


__all__ = ["lr_at"]
