"""
模型检查点

布局（小端）："ABCK" | u32 版本 | u64 头长度 | canonical-JSON 头 | float64 blob 区
头包含模型配置、训练配置、步数、标准化统计量、数组名列表与数据区字节数；blob 名称为 params/…、ema/…、momentum/…
读取时数据区长度或数组列表与头部不符即视为损坏（含恰好在 blob 边界截断的文件）
"""

import json
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
from loguru import logger
from pydantic import ValidationError

from canonical.errors import CorruptFileError, NotFoundError
from canonical.models import ModelConfig, StandardizationStats, TrainConfig
from dataio.blobs import atomic_write, canonical_json, encode_blobs, iter_blobs

MAGIC = b"ABCK"
CHECKPOINT_VERSION = 1
_HEADER = struct.Struct("<4sIQ")
_GROUPS = ("params", "ema", "momentum")


@dataclass
class Checkpoint:
    """检查点内容"""

    model_config: ModelConfig
    params: Dict[str, np.ndarray]
    ema: Optional[Dict[str, np.ndarray]] = None
    momentum: Optional[Dict[str, np.ndarray]] = None
    train_config: Optional[TrainConfig] = None
    step: int = 0
    statistics: Optional[StandardizationStats] = None
    extra: Dict[str, Any] = field(default_factory=dict)

    def eval_params(self) -> Dict[str, np.ndarray]:
        """评估使用 EMA 参数（若存在）"""
        return self.ema if self.ema is not None else self.params


def save_checkpoint(path: Union[str, Path], ckpt: Checkpoint) -> Path:
    arrays: Dict[str, np.ndarray] = {}
    for group in _GROUPS:
        values = getattr(ckpt, group)
        if values is None:
            continue
        for name, arr in values.items():
            arrays[f"{group}/{name}"] = arr
    payload = encode_blobs(arrays, dtype="<f8")
    header = {
        "arrays": list(arrays),
        "payload_size": len(payload),
        "model": ckpt.model_config.model_dump(mode="json"),
        "train": None if ckpt.train_config is None else ckpt.train_config.model_dump(mode="json"),
        "step": int(ckpt.step),
        "statistics": None if ckpt.statistics is None else ckpt.statistics.model_dump(mode="json"),
        "extra": ckpt.extra,
    }
    header_bytes = canonical_json(header)
    path = atomic_write(path, [_HEADER.pack(MAGIC, CHECKPOINT_VERSION, len(header_bytes)), header_bytes, payload])
    logger.info(f"检查点已保存: {path}（step={ckpt.step}）")
    return path


def load_checkpoint(path: Union[str, Path]) -> Checkpoint:
    """
    读取检查点

    Raises:
        NotFoundError: 文件不存在
        CorruptFileError: 魔数/版本/校验和错误或内容非法
    """
    path = Path(path)
    if not path.exists():
        raise NotFoundError(f"检查点不存在: {path}")
    data = path.read_bytes()
    if len(data) < _HEADER.size:
        raise CorruptFileError("检查点文件过短")
    magic, version, header_len = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptFileError(f"检查点魔数错误: {magic!r}")
    if version != CHECKPOINT_VERSION:
        raise CorruptFileError(f"不支持的检查点版本: {version}")
    end = _HEADER.size + header_len
    if end > len(data):
        raise CorruptFileError("检查点头被截断")
    try:
        header = json.loads(data[_HEADER.size:end].decode("utf-8"))
        model_config = ModelConfig.model_validate(header["model"])
        train_config = None if header.get("train") is None else TrainConfig.model_validate(header["train"])
        statistics = None if header.get("statistics") is None else StandardizationStats.model_validate(header["statistics"])
        expected_names = list(header["arrays"])
        payload_size = int(header["payload_size"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError, ValidationError) as e:
        raise CorruptFileError(f"检查点头无法解析: {e}") from e
    if len(data) - end != payload_size:
        raise CorruptFileError(f"检查点数据区 {len(data) - end} 字节，头部声明 {payload_size} 字节（文件可能被截断）")

    blobs = list(iter_blobs(data[end:]))
    if [name for name, _ in blobs] != expected_names:
        raise CorruptFileError(f"检查点数组列表与头部不符（读到 {len(blobs)} 个，应为 {len(expected_names)} 个）")
    groups: Dict[str, Dict[str, np.ndarray]] = {}
    for name, arr in blobs:
        group, _, param = name.partition("/")
        if group not in _GROUPS or not param:
            raise CorruptFileError(f"未知检查点数组: {name}")
        groups.setdefault(group, {})[param] = arr
    if "params" not in groups:
        raise CorruptFileError("检查点缺少 params")
    logger.debug(f"检查点已读取: {path} ({os.path.getsize(path)} 字节)")
    return Checkpoint(
        model_config=model_config,
        params=groups["params"],
        ema=groups.get("ema"),
        momentum=groups.get("momentum"),
        train_config=train_config,
        step=int(header.get("step", 0)),
        statistics=statistics,
        extra=header.get("extra") or {},
    )


__all__ = ["MAGIC", "CHECKPOINT_VERSION", "Checkpoint", "save_checkpoint", "load_checkpoint"]
