"""
权重指数滑动平均 (EMA)
评估阶段只使用影子权重；影子权重从不接收梯度
"""

from typing import Dict

import numpy as np

from canonical.errors import InvalidArgumentError, ShapeError


def ema_update(ema_params: Dict[str, np.ndarray], params: Dict[str, np.ndarray], rate: float) -> Dict[str, np.ndarray]:
    """
    ema ← (1 − rate)·ema + rate·params（原地）

    Raises:
        InvalidArgumentError: rate 不在 (0, 1]
        ShapeError: 名称或形状不一致
    """
    if not 0.0 < rate <= 1.0:
        raise InvalidArgumentError(f"EMA 速率 {rate} 不在 (0, 1]")
    if set(ema_params) != set(params):
        raise ShapeError("EMA 与参数名称不一致")
    for name, shadow in ema_params.items():
        p = params[name]
        if shadow.shape != p.shape:
            raise ShapeError(f"参数 {name}: ema{shadow.shape} 与 p{p.shape} 不一致")
        shadow *= 1.0 - rate
        shadow += rate * p
    return ema_params


class EmaWeights:
    """影子权重"""

    def __init__(self, params: Dict[str, np.ndarray], rate: float):
        self.rate = rate
        self.shadow = {name: np.array(p, copy=True) for name, p in params.items()}

    def update(self, params: Dict[str, np.ndarray]) -> None:
        ema_update(self.shadow, params, self.rate)

    def copy(self) -> Dict[str, np.ndarray]:
        return {name: s.copy() for name, s in self.shadow.items()}


__all__ = ["ema_update", "EmaWeights"]
