"""
张量与计算带 (Tape)

Tensor 持有 numpy 数组（缺省 float64），Tape 按执行顺序记录可微操作，
backward 逆序遍历记录，每个节点恰好访问一次，并把梯度累加到叶子张量上。
Tape 绑定在线程局部变量上：同一线程内单个 Tape 串行使用，不同线程可各自持有独立 Tape。
"""

import itertools
import threading
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from canonical.errors import InvalidArgumentError, NumericError

_DEFAULT_DTYPE = np.float64
_node_ids = itertools.count(1)
_local = threading.local()

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


def set_default_dtype(dtype) -> None:
    """设置新建张量的缺省精度（float64 或 float32）"""
    global _DEFAULT_DTYPE
    dtype = np.dtype(dtype)
    if dtype not in (np.dtype(np.float64), np.dtype(np.float32)):
        raise InvalidArgumentError(f"仅支持 float64/float32，实际为 {dtype}")
    _DEFAULT_DTYPE = dtype.type


def get_default_dtype():
    return _DEFAULT_DTYPE


def check_finite(data: np.ndarray, op: str) -> None:
    """前向结果出现 NaN/Inf 时立即报错"""
    if not np.isfinite(data).all():
        raise NumericError(f"{op} 输出出现非有限值")


class Tensor:
    """
    稠密张量

    Attributes:
        data: 数值缓冲区
        requires_grad: 是否需要梯度
        grad: backward 后写入的梯度
        node_id: 计算图节点编号（进程内唯一）
    """

    __slots__ = ("data", "requires_grad", "grad", "node_id", "name")

    def __init__(self, data, requires_grad: bool = False, name: Optional[str] = None, dtype=None):
        if dtype is None:
            arr = np.asarray(data)
            if not np.issubdtype(arr.dtype, np.floating):
                arr = arr.astype(_DEFAULT_DTYPE)
        else:
            arr = np.asarray(data, dtype=dtype)
        check_finite(arr, name or "Tensor")
        self.data: np.ndarray = arr
        self.requires_grad = bool(requires_grad)
        self.grad: Optional[np.ndarray] = None
        self.node_id = next(_node_ids)
        self.name = name

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return int(self.data.size)

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise InvalidArgumentError(f"item() 需要单元素张量，实际形状 {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False, name=self.name)

    def __repr__(self) -> str:
        label = f" name={self.name}" if self.name else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype}, requires_grad={self.requires_grad}{label})"

    # 运算符委托给 ops，避免循环导入
    def __add__(self, other):
        from tensor import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from tensor import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from tensor import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from tensor import ops
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from tensor import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from tensor import ops
        return ops.matmul(self, other)


@dataclass
class TapeRecord:
    """一条操作记录"""

    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    backward: BackwardFn


def _stack() -> List[Optional["Tape"]]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def current_tape() -> Optional["Tape"]:
    """当前线程正在记录的 Tape（无则为 None）"""
    stack = _stack()
    return stack[-1] if stack else None


class no_grad:
    """上下文内暂停记录（推理路径使用）"""

    def __enter__(self):
        _stack().append(None)
        return self

    def __exit__(self, exc_type, exc, tb):
        _stack().pop()
        return False


class Tape:
    """
    反向模式自动微分记录带

    用法:
        with Tape() as tape:
            loss = ...
        grads = tape.backward(loss)
    """

    def __init__(self):
        self.records: List[TapeRecord] = []
        self._produced: Dict[int, int] = {}

    def __enter__(self) -> "Tape":
        _stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb):
        _stack().pop()
        return False

    def __len__(self) -> int:
        return len(self.records)

    def record(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward: BackwardFn) -> None:
        self._produced[output.node_id] = len(self.records)
        self.records.append(TapeRecord(op=op, inputs=tuple(inputs), output=output, backward=backward))

    def clear(self) -> None:
        self.records.clear()
        self._produced.clear()

    def backward(self, loss: Tensor) -> Dict[int, np.ndarray]:
        """
        从标量 loss 反向传播

        Returns:
            node_id → 梯度 的映射，覆盖 tape 上所有 requires_grad 叶子；
            叶子张量的 .grad 同时被写入。调用后 tape 被清空。

        Raises:
            InvalidArgumentError: loss 不是标量，或 loss 不在本 tape 上
        """
        if loss.data.size != 1:
            raise InvalidArgumentError(f"backward 需要标量 loss，实际形状 {loss.shape}")
        if loss.node_id not in self._produced:
            raise InvalidArgumentError("loss 未连接到当前 tape")

        pending: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.data)}
        leaves: Dict[int, Tensor] = {}
        for rec in self.records:
            for t in rec.inputs:
                if t.requires_grad and t.node_id not in self._produced:
                    leaves[t.node_id] = t
        leaf_grads: Dict[int, np.ndarray] = {nid: np.zeros_like(t.data) for nid, t in leaves.items()}

        for rec in reversed(self.records):
            g = pending.pop(rec.output.node_id, None)
            if g is None:
                continue
            input_grads = rec.backward(g)
            for t, gi in zip(rec.inputs, input_grads):
                if gi is None or not t.requires_grad:
                    continue
                target = leaf_grads if t.node_id in leaf_grads else pending
                if t.node_id in target:
                    target[t.node_id] = target[t.node_id] + gi
                else:
                    target[t.node_id] = gi

        for nid, t in leaves.items():
            t.grad = leaf_grads[nid]
        logger.debug(f"backward 完成: {len(self.records)} 条记录, {len(leaves)} 个叶子")
        self.clear()
        return leaf_grads


def backward(loss: Tensor, tape: Optional[Tape] = None) -> Dict[int, np.ndarray]:
    """对当前（或指定）tape 执行反向传播"""
    tape = tape or current_tape()
    if tape is None:
        raise InvalidArgumentError("没有正在记录的 tape")
    return tape.backward(loss)


__all__ = [
    "Tensor",
    "Tape",
    "TapeRecord",
    "backward",
    "current_tape",
    "no_grad",
    "check_finite",
    "set_default_dtype",
    "get_default_dtype",
]
