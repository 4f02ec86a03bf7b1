"""
中心差分梯度检查
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from canonical.errors import InvalidArgumentError
from tensor.tensor import Tensor, Tape

DEFAULT_STEP = 1e-5


@dataclass
class GradcheckResult:
    """梯度检查结果：每个输入的 ∞-范数相对误差"""

    errors: List[float] = field(default_factory=list)
    checked: List[int] = field(default_factory=list)

    @property
    def max_error(self) -> float:
        return max(self.errors) if self.errors else 0.0

    def passed(self, tolerance: float) -> bool:
        return self.max_error <= tolerance


def _relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    diff = np.abs(analytic - numeric).max()
    scale = max(np.abs(analytic).max(), np.abs(numeric).max(), 1e-300)
    return float(diff / scale) if diff > 0 else 0.0


def gradcheck(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    step: float = DEFAULT_STEP,
    max_checks_per_input: Optional[int] = None,
    seed: int = 0,
) -> GradcheckResult:
    """
    对比反向传播梯度与中心差分

    Args:
        fn: 无参函数，基于 inputs 计算标量 loss
        inputs: 需要检查的叶子张量（requires_grad=True）
        step: 差分步长
        max_checks_per_input: 每个输入随机抽查的元素数（None 表示全部）
        seed: 抽查用随机种子
    """
    if any(not t.requires_grad for t in inputs):
        raise InvalidArgumentError("gradcheck 的输入必须 requires_grad=True")

    with Tape() as tape:
        loss = fn()
    grads: Dict[int, np.ndarray] = tape.backward(loss)

    rng = np.random.default_rng(seed)
    result = GradcheckResult()
    for t in inputs:
        t.data = np.ascontiguousarray(t.data)
        analytic = grads.get(t.node_id, np.zeros_like(t.data)).reshape(-1)
        flat = t.data.reshape(-1)
        idx = np.arange(flat.size)
        if max_checks_per_input is not None and flat.size > max_checks_per_input:
            idx = np.sort(rng.choice(flat.size, size=max_checks_per_input, replace=False))

        numeric = np.empty(idx.size)
        for j, i in enumerate(idx):
            original = flat[i]
            flat[i] = original + step
            plus = fn().item()
            flat[i] = original - step
            minus = fn().item()
            flat[i] = original
            numeric[j] = (plus - minus) / (2.0 * step)

        result.errors.append(_relative_error(analytic[idx], numeric))
        result.checked.append(int(idx.size))
    return result


def weighted_sum_loss(output: Tensor, seed: int = 0) -> Tensor:
    """把任意形状输出归约为带随机权重的标量，避免梯度对称抵消"""
    from tensor import ops

    weights = np.random.default_rng(seed).standard_normal(output.shape)
    return ops.sum(ops.mul(output, weights))


__all__ = ["GradcheckResult", "gradcheck", "weighted_sum_loss", "DEFAULT_STEP"]
