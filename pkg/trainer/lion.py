"""
Lion 优化器

c = β1·m + (1−β1)·g
p ← p − lr·(sign(c) + weight_decay·p)
m ← β2·m + (1−β2)·g
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from canonical.errors import ShapeError
from tensor.tensor import Tensor


@dataclass
class OptimizerState:
    """动量缓冲与超参数"""

    momentum: Dict[str, np.ndarray] = field(default_factory=dict)
    beta1: float = 0.9
    beta2: float = 0.99
    weight_decay: float = 0.0

    @classmethod
    def zeros_like(cls, params: Dict[str, np.ndarray], **kwargs) -> "OptimizerState":
        return cls(momentum={name: np.zeros_like(p) for name, p in params.items()}, **kwargs)


def lion_step(
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    state: OptimizerState,
    lr: float,
) -> Dict[str, np.ndarray]:
    """
    原地执行一次 Lion 更新

    Raises:
        ShapeError: 参数、梯度、动量的名称或形状不一致
    """
    for name, p in params.items():
        g = grads.get(name)
        m = state.momentum.get(name)
        if g is None or m is None:
            raise ShapeError(f"参数 {name} 缺少梯度或动量")
        if g.shape != p.shape or m.shape != p.shape:
            raise ShapeError(f"参数 {name}: p{p.shape} g{g.shape} m{m.shape} 不一致")
        direction = np.sign(state.beta1 * m + (1.0 - state.beta1) * g)
        if state.weight_decay:
            p -= lr * (direction + state.weight_decay * p)
        else:
            p -= lr * direction
        m *= state.beta2
        m += (1.0 - state.beta2) * g
    return params


class LionOptimizer:
    """绑定到模型参数张量的 Lion 优化器"""

    def __init__(
        self,
        params: Dict[str, Tensor],
        beta1: float = 0.9,
        beta2: float = 0.99,
        weight_decay: float = 0.0,
        momentum: Optional[Dict[str, np.ndarray]] = None,
    ):
        self.params = params
        arrays = {name: t.data for name, t in params.items()}
        if momentum is None:
            self.state = OptimizerState.zeros_like(arrays, beta1=beta1, beta2=beta2, weight_decay=weight_decay)
        else:
            if set(momentum) != set(arrays):
                raise ShapeError("动量缓冲与参数名称不一致")
            self.state = OptimizerState(
                momentum={name: np.array(momentum[name], dtype=arrays[name].dtype) for name in arrays},
                beta1=beta1,
                beta2=beta2,
                weight_decay=weight_decay,
            )

    def step(self, grads: Dict[str, np.ndarray], lr: float) -> None:
        lion_step({name: t.data for name, t in self.params.items()}, grads, self.state, lr)

    def momentum(self) -> Dict[str, np.ndarray]:
        return {name: m.copy() for name, m in self.state.momentum.items()}


__all__ = ["OptimizerState", "lion_step", "LionOptimizer"]
