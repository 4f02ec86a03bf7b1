"""
锚点/查询采样与训练样本组装

solution-mesh 模式：锚点取自解网格表面与（10% 子采样后的）随机体点，损失作用于全部锚点。
cad-input 模式：表面锚点取自各向同性表面，体锚点取自规则网格；查询取自解网格点集，
损失只作用于查询行。
"""

import math
import zlib
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np
from loguru import logger

from canonical.errors import InvalidArgumentError
from canonical.mapper import FieldMapper
from canonical.models import CaseRecord, InputMesh, TrainConfig, TrainMode
from model.abupt import TokenBatch
from model.params import BRANCHES


def choose(rng: np.random.Generator, n: int, k: int, what: str = "点") -> np.ndarray:
    """从 n 个点中抽取 k 个；不足时有放回抽样"""
    if n <= 0:
        raise InvalidArgumentError(f"{what}集合为空，无法采样")
    if n >= k:
        return rng.choice(n, size=k, replace=False)
    logger.warning(f"{what}数 {n} 少于所需 {k}，改为有放回抽样")
    return rng.choice(n, size=k, replace=True)


def volume_subsample(case: CaseRecord, fraction: float, seed: int) -> np.ndarray:
    """按算例固定的体点子集（比例 fraction，至少 1 个）"""
    n = case.solution_volume.count
    if n == 0:
        raise InvalidArgumentError(f"算例 {case.case_id} 没有体点")
    k = min(n, max(1, math.ceil(fraction * n)))
    rng = np.random.default_rng([seed, zlib.crc32(case.case_id.encode("utf-8"))])
    return np.sort(rng.choice(n, size=k, replace=False))


@dataclass
class TrainingSample:
    """
    单步训练样本

    targets 的行顺序与模型输出一致：锚点在前、查询在后（已标准化）；
    loss_rows 为 None 表示全部行参与损失
    """

    batch: TokenBatch
    targets: Dict[str, np.ndarray]
    loss_rows: Dict[str, Optional[np.ndarray]] = field(default_factory=dict)


def sample_training_tokens(
    case: CaseRecord,
    mapper: FieldMapper,
    cfg: TrainConfig,
    rng: np.random.Generator,
) -> TrainingSample:
    """
    按训练模式从算例中抽取锚点（与查询）

    Raises:
        InvalidArgumentError: 算例没有表面点或体点
    """
    sol = mapper.to_channels(case.solution_fields)
    sol = {b: mapper.normalize(b, sol[b]) for b in BRANCHES}
    pool = volume_subsample(case, cfg.volume_subsample_fraction, cfg.seed)

    if TrainMode(cfg.mode) == TrainMode.SOLUTION_MESH:
        s_idx = choose(rng, case.solution_surface.count, cfg.n_surface_anchors, "表面")
        v_idx = pool[choose(rng, len(pool), cfg.n_volume_anchors, "体")]
        batch = TokenBatch(
            surface_anchors=case.solution_surface.positions[s_idx],
            volume_anchors=case.solution_volume.positions[v_idx],
            bounds=case.solution_volume.bbox,
            alpha=case.flow.alpha,
        )
        targets = {"surface": sol["surface"][s_idx], "volume": sol["volume"][v_idx]}
        return TrainingSample(batch=batch, targets=targets, loss_rows={b: None for b in BRANCHES})

    cad = mapper.to_channels(case.cad_fields)
    cad = {b: mapper.normalize(b, cad[b]) for b in BRANCHES}
    sa_idx = choose(rng, case.cad_surface.count, cfg.n_surface_anchors, "各向同性表面")
    va_idx = choose(rng, case.cad_volume.count, cfg.n_volume_anchors, "网格体")
    sq_idx = choose(rng, case.solution_surface.count, cfg.n_surface_queries, "表面查询")
    vq_idx = pool[choose(rng, len(pool), cfg.n_volume_queries, "体查询")]
    batch = TokenBatch(
        surface_anchors=case.cad_surface.positions[sa_idx],
        volume_anchors=case.cad_volume.positions[va_idx],
        bounds=case.solution_volume.bbox,
        alpha=case.flow.alpha,
        surface_queries=case.solution_surface.positions[sq_idx],
        volume_queries=case.solution_volume.positions[vq_idx],
    )
    targets = {
        "surface": np.concatenate([cad["surface"][sa_idx], sol["surface"][sq_idx]], axis=0),
        "volume": np.concatenate([cad["volume"][va_idx], sol["volume"][vq_idx]], axis=0),
    }
    loss_rows = {
        "surface": np.arange(len(sa_idx), len(sa_idx) + len(sq_idx)),
        "volume": np.arange(len(va_idx), len(va_idx) + len(vq_idx)),
    }
    return TrainingSample(batch=batch, targets=targets, loss_rows=loss_rows)


def inference_batch(
    case: CaseRecord,
    input_mesh: InputMesh,
    n_surface_anchors: int,
    n_volume_anchors: int,
    seed: int,
    volume_index: Optional[np.ndarray] = None,
) -> TokenBatch:
    """
    推理批次：锚点取自输入网格（solution 或 cad），查询为解网格上的全部评估点

    Args:
        volume_index: 可选体点子集（缺省为全部解网格体点）
    """
    rng = np.random.default_rng([seed, zlib.crc32(case.case_id.encode("utf-8"))])
    if InputMesh(input_mesh) == InputMesh.CAD:
        surface_src, volume_src = case.cad_surface, case.cad_volume
    else:
        surface_src, volume_src = case.solution_surface, case.solution_volume
    s_idx = np.sort(choose(rng, surface_src.count, min(n_surface_anchors, surface_src.count), "表面"))
    v_idx = np.sort(choose(rng, volume_src.count, min(n_volume_anchors, volume_src.count), "体"))
    volume_queries = case.solution_volume.positions
    if volume_index is not None:
        volume_queries = volume_queries[volume_index]
    return TokenBatch(
        surface_anchors=surface_src.positions[s_idx],
        volume_anchors=volume_src.positions[v_idx],
        bounds=case.solution_volume.bbox,
        alpha=case.flow.alpha,
        surface_queries=case.solution_surface.positions,
        volume_queries=volume_queries,
    )


__all__ = ["choose", "volume_subsample", "TrainingSample", "sample_training_tokens", "inference_batch"]
