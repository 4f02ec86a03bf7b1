"""
可微操作集合

每个操作计算前向结果、检查有限性，并在存在活动 tape 且输入需要梯度时登记反向函数。
广播只支持模型需要的情形：行向量/标量对矩阵。
"""

import math
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from canonical.errors import ConfigError, InvalidArgumentError, ShapeError
from tensor.tensor import BackwardFn, Tensor, check_finite, current_tape, get_default_dtype

Operand = Union[Tensor, float, int, np.ndarray]

_GELU_K = math.sqrt(2.0 / math.pi)
_GELU_C = 0.044715


def as_tensor(x: Operand) -> Tensor:
    """常量包装为不需要梯度的张量"""
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=get_default_dtype()))


def _emit(op: str, data: np.ndarray, inputs: Sequence[Tensor], backward: BackwardFn) -> Tensor:
    check_finite(data, op)
    requires = any(t.requires_grad for t in inputs)
    out = Tensor(data, requires_grad=requires, dtype=data.dtype)
    tape = current_tape()
    if requires and tape is not None:
        tape.record(op, inputs, out, backward)
    return out


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op: str, a: Tensor, b: Tensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeError(f"{op}: 形状 {a.shape} 与 {b.shape} 无法广播") from e


# ---------------------------------------------------------------- 逐元素运算

def add(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _emit("add", a.data + b.data, (a, b), backward)


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _emit("sub", a.data - b.data, (a, b), backward)


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return _emit("mul", a.data * b.data, (a, b), backward)


def neg(x: Tensor) -> Tensor:
    return _emit("neg", -x.data, (x,), lambda g: (-g,))


def scale(x: Tensor, factor: float) -> Tensor:
    """乘以常数标量"""
    factor = float(factor)
    return _emit("scale", x.data * factor, (x,), lambda g: (g * factor,))


def abs(x: Tensor) -> Tensor:  # noqa: A001
    """绝对值；0 处次梯度取 0"""
    sign = np.sign(x.data)
    return _emit("abs", np.abs(x.data), (x,), lambda g: (g * sign,))


# ---------------------------------------------------------------- 线性代数

def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul: 形状 {a.shape} @ {b.shape} 不匹配")

    def backward(g):
        return g @ b.data.T, a.data.T @ g

    return _emit("matmul", a.data @ b.data, (a, b), backward)


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """
    y = xW + b

    Raises:
        ShapeError: x 与 W 或 b 的形状不一致
    """
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ShapeError(f"linear: x{x.shape} 与 W{weight.shape} 不匹配")
    if bias is not None and bias.shape != (weight.shape[1],):
        raise ShapeError(f"linear: b{bias.shape} 应为 ({weight.shape[1]},)")
    y = x.data @ weight.data
    if bias is not None:
        y = y + bias.data
        inputs: Tuple[Tensor, ...] = (x, weight, bias)
    else:
        inputs = (x, weight)

    def backward(g):
        grads = [g @ weight.data.T, x.data.T @ g]
        if bias is not None:
            grads.append(g.sum(axis=0))
        return grads

    return _emit("linear", y, inputs, backward)


# ---------------------------------------------------------------- 归一化与激活

def layernorm(
    x: Tensor,
    gamma: Optional[Tensor] = None,
    beta: Optional[Tensor] = None,
    eps: float = 1e-6,
) -> Tensor:
    """
    按最后一维做均值 0 / 方差 1 归一化，再做仿射 γ·x̂ + β

    gamma/beta 为 None 时不做仿射（自适应调制由调用方施加）
    """
    if x.ndim != 2 or x.shape[1] < 1:
        raise ShapeError(f"layernorm: 输入应为 (n, d)，实际 {x.shape}")
    if eps <= 0:
        raise InvalidArgumentError("layernorm: eps 必须为正")
    d = x.shape[1]
    for t, name in ((gamma, "gamma"), (beta, "beta")):
        if t is not None and t.shape != (d,):
            raise ShapeError(f"layernorm: {name}{t.shape} 应为 ({d},)")

    mu = x.data.mean(axis=1, keepdims=True)
    centered = x.data - mu
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=1, keepdims=True) + eps)
    x_hat = centered * inv_std
    y = x_hat
    if gamma is not None:
        y = y * gamma.data
    if beta is not None:
        y = y + beta.data
    inputs = tuple(t for t in (x, gamma, beta) if t is not None)

    def backward(g):
        g_hat = g * gamma.data if gamma is not None else g
        gx = inv_std * (
            g_hat
            - g_hat.mean(axis=1, keepdims=True)
            - x_hat * (g_hat * x_hat).mean(axis=1, keepdims=True)
        )
        grads = [gx]
        if gamma is not None:
            grads.append((g * x_hat).sum(axis=0))
        if beta is not None:
            grads.append(g.sum(axis=0))
        return grads

    return _emit("layernorm", y, inputs, backward)


def gelu(x: Tensor) -> Tensor:
    """GELU（tanh 近似）"""
    u = _GELU_K * (x.data + _GELU_C * x.data ** 3)
    t = np.tanh(u)
    y = 0.5 * x.data * (1.0 + t)

    def backward(g):
        du = _GELU_K * (1.0 + 3.0 * _GELU_C * x.data ** 2)
        return (g * (0.5 * (1.0 + t) + 0.5 * x.data * (1.0 - t * t) * du),)

    return _emit("gelu", y, (x,), backward)


def _softmax(s: np.ndarray) -> np.ndarray:
    e = np.exp(s - s.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def softmax(x: Tensor) -> Tensor:
    """沿最后一维的 softmax"""
    y = _softmax(x.data)

    def backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _emit("softmax", y, (x,), backward)


# ---------------------------------------------------------------- 注意力

def _split_heads(a: np.ndarray, heads: int) -> np.ndarray:
    n, d = a.shape
    return a.reshape(n, heads, d // heads).transpose(1, 0, 2)


def _merge_heads(a: np.ndarray) -> np.ndarray:
    h, n, dh = a.shape
    return a.transpose(1, 0, 2).reshape(n, h * dh)


def attention(q: Tensor, k: Tensor, v: Tensor, heads: int) -> Tensor:
    """
    多头缩放点积注意力核心（已投影的 q/k/v），缩放系数 1/√(d/heads)

    Raises:
        ConfigError: d 不能被 heads 整除
        ShapeError: q/k/v 维度不一致
        InvalidArgumentError: 键集合为空
    """
    if q.ndim != 2 or k.ndim != 2 or v.ndim != 2:
        raise ShapeError("attention: q/k/v 必须为二维")
    d = q.shape[1]
    if k.shape != v.shape or k.shape[1] != d:
        raise ShapeError(f"attention: q{q.shape} k{k.shape} v{v.shape} 不一致")
    if heads < 1 or d % heads != 0:
        raise ConfigError(f"attention: 维度 {d} 不能被 heads={heads} 整除")
    if k.shape[0] == 0:
        raise InvalidArgumentError("attention: 键集合为空")

    scale_factor = 1.0 / math.sqrt(d // heads)
    Q, K, V = _split_heads(q.data, heads), _split_heads(k.data, heads), _split_heads(v.data, heads)
    P = _softmax(np.matmul(Q, K.transpose(0, 2, 1)) * scale_factor)
    out = _merge_heads(np.matmul(P, V))

    def backward(g):
        G = _split_heads(g, heads)
        dP = np.matmul(G, V.transpose(0, 2, 1))
        dV = np.matmul(P.transpose(0, 2, 1), G)
        dS = P * (dP - (dP * P).sum(axis=-1, keepdims=True)) * scale_factor
        dQ = np.matmul(dS, K)
        dK = np.matmul(dS.transpose(0, 2, 1), Q)
        return _merge_heads(dQ), _merge_heads(dK), _merge_heads(dV)

    return _emit("attention", out, (q, k, v), backward)


class AttentionWeights(NamedTuple):
    """注意力投影参数 (W 为 d×d，b 为 d)"""

    wq: Tensor
    bq: Tensor
    wk: Tensor
    bk: Tensor
    wv: Tensor
    bv: Tensor
    wo: Tensor
    bo: Tensor


def project_kv(kv_src: Tensor, weights: AttentionWeights) -> Tuple[Tensor, Tensor]:
    """键/值投影（锚点只需计算一次，查询解码时复用）"""
    return linear(kv_src, weights.wk, weights.bk), linear(kv_src, weights.wv, weights.bv)


def attend(q_src: Tensor, keys: Tensor, values: Tensor, weights: AttentionWeights, heads: int) -> Tensor:
    """查询投影 + 注意力 + 输出投影"""
    q = linear(q_src, weights.wq, weights.bq)
    return linear(attention(q, keys, values, heads), weights.wo, weights.bo)


def multihead_attention(q_src: Tensor, kv_src: Tensor, weights: AttentionWeights, heads: int) -> Tensor:
    """
    多头注意力；q_src 与 kv_src 相同即自注意力，否则为交叉注意力

    Raises:
        ConfigError: d 不能被 heads 整除
    """
    if q_src.ndim == 2 and q_src.shape[1] % max(heads, 1) != 0:
        raise ConfigError(f"multihead_attention: 维度 {q_src.shape[1]} 不能被 heads={heads} 整除")
    keys, values = project_kv(kv_src, weights)
    return attend(q_src, keys, values, weights, heads)


# ---------------------------------------------------------------- 归约与索引

def sum(x: Tensor) -> Tensor:  # noqa: A001
    return _emit("sum", np.asarray(x.data.sum()), (x,), lambda g: (np.broadcast_to(g, x.shape).copy(),))


def mean(x: Tensor) -> Tensor:
    if x.size == 0:
        raise InvalidArgumentError("mean: 空张量")
    n = x.size
    return _emit("mean", np.asarray(x.data.sum() / n), (x,), lambda g: (np.full(x.shape, g / n, dtype=x.data.dtype),))


def mean_abs_error(pred: Tensor, target: Operand) -> Tensor:
    """MAE = mean(|pred − target|)"""
    return mean(abs(sub(pred, target)))


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    if not tensors:
        raise InvalidArgumentError("concat: 输入为空")
    sizes = [t.shape[axis] for t in tensors]
    try:
        data = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError(f"concat: 形状不一致 {[t.shape for t in tensors]}") from e
    bounds = np.cumsum(sizes)[:-1]

    def backward(g):
        return np.split(g, bounds, axis=axis)

    return _emit("concat", data, tuple(tensors), backward)


def take_rows(x: Tensor, index: np.ndarray) -> Tensor:
    """按行索引取子集（允许重复索引，反向时累加）"""
    index = np.asarray(index, dtype=np.int64)

    def backward(g):
        gx = np.zeros_like(x.data)
        np.add.at(gx, index, g)
        return (gx,)

    return _emit("take_rows", x.data[index], (x,), backward)


def slice_cols(x: Tensor, start: int, stop: int) -> Tensor:
    """取列区间 [start, stop)"""
    if x.ndim != 2 or not 0 <= start < stop <= x.shape[1]:
        raise ShapeError(f"slice_cols: 区间 [{start}, {stop}) 超出 {x.shape}")

    def backward(g):
        gx = np.zeros_like(x.data)
        gx[:, start:stop] = g
        return (gx,)

    return _emit("slice_cols", x.data[:, start:stop], (x,), backward)


def reshape_row(x: Tensor) -> Tensor:
    """一维 (d,) → (1, d)"""
    return _emit("reshape_row", x.data.reshape(1, -1), (x,), lambda g: (g.reshape(x.shape),))


__all__ = [
    "AttentionWeights",
    "as_tensor",
    "add",
    "sub",
    "mul",
    "neg",
    "scale",
    "abs",
    "matmul",
    "linear",
    "layernorm",
    "gelu",
    "softmax",
    "attention",
    "project_kv",
    "attend",
    "multihead_attention",
    "sum",
    "mean",
    "mean_abs_error",
    "concat",
    "take_rows",
    "slice_cols",
    "reshape_row",
]
