"""
模型参数：形状表、初始化与计数

命名约定（点分层级）：
    cond.embed.fc1 / fc2                 攻角条件嵌入 MLP（仅 use_conditioning）
    {branch}.embed                       位置特征 → dim
    {blocks}.{l}.norm1 / norm2 / norm_kv LayerNorm（norm_kv 仅交叉注意力 block）
    {blocks}.{l}.attn.q / k / v / o      注意力投影
    {blocks}.{l}.mlp.fc1 / fc2           MLP
    {blocks}.{l}.ada                     DiT 调制头（零初始化）
    {branch}.final_norm / final_ada / head
{blocks} 在非共享时为 {branch}.blocks，共享时为 shared.blocks
"""

from typing import Dict, Iterable, Optional, Tuple, Union

import numpy as np
from scipy.stats import truncnorm

from canonical.models import ModelConfig

BRANCHES = ("surface", "volume")
_TRUNCATION = 2.0


def position_feature_width(config: ModelConfig) -> int:
    """每轴 sin/cos 各 n_frequencies 个"""
    return 3 * 2 * config.n_frequencies


def is_cross_block(index: int) -> bool:
    """block 0 为自注意力，此后自注意力/分支间交叉注意力交替"""
    return index % 2 == 1


def block_prefix(config: ModelConfig, branch: str, index: int) -> str:
    owner = "shared" if config.share_branch_weights else branch
    return f"{owner}.blocks.{index}"


def _linear(shapes: Dict[str, Tuple[int, ...]], name: str, fan_in: int, fan_out: int) -> None:
    shapes[f"{name}.weight"] = (fan_in, fan_out)
    shapes[f"{name}.bias"] = (fan_out,)


def _norm(shapes: Dict[str, Tuple[int, ...]], name: str, dim: int) -> None:
    shapes[f"{name}.weight"] = (dim,)
    shapes[f"{name}.bias"] = (dim,)


def _block_shapes(shapes: Dict[str, Tuple[int, ...]], config: ModelConfig, prefix: str, cross: bool) -> None:
    d = config.dim
    _norm(shapes, f"{prefix}.norm1", d)
    if cross:
        _norm(shapes, f"{prefix}.norm_kv", d)
    for proj in ("q", "k", "v", "o"):
        _linear(shapes, f"{prefix}.attn.{proj}", d, d)
    _norm(shapes, f"{prefix}.norm2", d)
    _linear(shapes, f"{prefix}.mlp.fc1", d, config.mlp_ratio * d)
    _linear(shapes, f"{prefix}.mlp.fc2", config.mlp_ratio * d, d)
    if config.use_conditioning:
        _linear(shapes, f"{prefix}.ada", config.condition_width, 6 * d)


def parameter_shapes(config: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """全部可学习参数的名称 → 形状（插入顺序固定）"""
    shapes: Dict[str, Tuple[int, ...]] = {}
    cw = config.condition_width
    if config.use_conditioning:
        _linear(shapes, "cond.embed.fc1", 2 * config.n_cond_frequencies, cw)
        _linear(shapes, "cond.embed.fc2", cw, cw)

    channels = {"surface": config.surface_channels, "volume": config.volume_channels}
    for branch in BRANCHES:
        _linear(shapes, f"{branch}.embed", position_feature_width(config), config.dim)

    for index in range(config.depth):
        for branch in BRANCHES:
            prefix = block_prefix(config, branch, index)
            if f"{prefix}.norm1.weight" not in shapes:
                _block_shapes(shapes, config, prefix, is_cross_block(index))

    for branch in BRANCHES:
        _norm(shapes, f"{branch}.final_norm", config.dim)
        if config.use_conditioning:
            _linear(shapes, f"{branch}.final_ada", cw, 2 * config.dim)
        _linear(shapes, f"{branch}.head", config.dim, channels[branch])
    return shapes


def _is_zero_init(name: str) -> bool:
    return ".ada." in name or ".final_ada." in name or name.endswith(".bias")


def init_parameters(config: ModelConfig, seed: Optional[int] = None) -> Dict[str, np.ndarray]:
    """
    初始化参数

    线性层权重 ~ 截断正态(0, init_std²)，截断于 ±2σ；偏置为 0；LayerNorm γ=1；
    调制头全零，使每个 block 初始为恒等残差
    """
    rng = np.random.default_rng(config.seed if seed is None else seed)
    params: Dict[str, np.ndarray] = {}
    for name, shape in parameter_shapes(config).items():
        is_norm = ".norm" in name or ".final_norm." in name
        if is_norm and name.endswith(".weight"):
            params[name] = np.ones(shape)
        elif is_norm or _is_zero_init(name):
            params[name] = np.zeros(shape)
        else:
            params[name] = truncnorm.rvs(
                -_TRUNCATION, _TRUNCATION, loc=0.0, scale=config.init_std, size=shape, random_state=rng
            )
    return params


def count_parameters(
    source: Union[ModelConfig, "object"],
    include: Optional[Iterable[str]] = None,
) -> int:
    """
    可学习标量总数

    Args:
        source: ModelConfig 或带 config 属性的模型
        include: 可选名称片段过滤（如 [".blocks."] 只统计 block 参数）
    """
    config = source if isinstance(source, ModelConfig) else source.config
    patterns = list(include) if include is not None else None
    total = 0
    for name, shape in parameter_shapes(config).items():
        if patterns is not None and not any(p in name for p in patterns):
            continue
        total += int(np.prod(shape, dtype=np.int64))
    return total


__all__ = [
    "BRANCHES",
    "block_prefix",
    "is_cross_block",
    "position_feature_width",
    "parameter_shapes",
    "init_parameters",
    "count_parameters",
]
