"""
结果表格（CSV）与误差报告（JSON）输出
"""

from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from canonical.models import ErrorReport, ForceReport
from dataio.blobs import atomic_write, canonical_json

from .profile import PressureProfile

FORCE_COLUMNS = [
    "case_id",
    "target_drag",
    "pred_drag",
    "target_lift",
    "pred_lift",
    "target_cd",
    "pred_cd",
    "target_cl",
    "pred_cl",
]
PROFILE_COLUMNS = ["surface", "x_c", "p_target", "p_pred"]
BENCH_COLUMNS = ["n_queries", "encode_seconds", "decode_seconds", "total_seconds"]


def _write(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    logger.debug(f"写出 {path}（{len(frame)} 行）")
    return path


def force_frame(rows: Iterable[Tuple[str, ForceReport, ForceReport]]) -> pd.DataFrame:
    """(算例 ID, 目标, 预测) → 气动力对照表"""
    records = [
        {
            "case_id": cid,
            "target_drag": t.drag,
            "pred_drag": p.drag,
            "target_lift": t.lift,
            "pred_lift": p.lift,
            "target_cd": t.cd,
            "pred_cd": p.cd,
            "target_cl": t.cl,
            "pred_cl": p.cl,
        }
        for cid, t, p in rows
    ]
    return pd.DataFrame.from_records(records, columns=FORCE_COLUMNS)


def write_force_table(rows: Iterable[Tuple[str, ForceReport, ForceReport]], path: Path) -> Path:
    return _write(force_frame(rows), path)


def profile_frame(target: PressureProfile, pred: Optional[PressureProfile] = None) -> pd.DataFrame:
    """目标/预测剖面必须取自同一组点；没有预测时 p_pred 为空"""
    parts: List[pd.DataFrame] = []
    pairs = ((target.upper, None if pred is None else pred.upper), (target.lower, None if pred is None else pred.lower))
    for t_curve, p_curve in pairs:
        parts.append(
            pd.DataFrame(
                {
                    "surface": t_curve.surface,
                    "x_c": t_curve.x_c,
                    "p_target": t_curve.pressure,
                    "p_pred": np.full(t_curve.x_c.shape, np.nan) if p_curve is None else p_curve.pressure,
                },
                columns=PROFILE_COLUMNS,
            )
        )
    return pd.concat(parts, ignore_index=True)


def write_profile_table(target: PressureProfile, pred: Optional[PressureProfile], path: Path) -> Path:
    return _write(profile_frame(target, pred), path)


def write_bench_table(rows: Sequence[Mapping[str, float]], path: Path) -> Path:
    frame = pd.DataFrame.from_records(list(rows), columns=BENCH_COLUMNS)
    frame["n_queries"] = frame["n_queries"].astype(int)
    return _write(frame, path)


def write_error_report(report: ErrorReport, path: Path) -> Path:
    path = Path(path)
    atomic_write(path, [canonical_json(report.model_dump(mode="json"))])
    logger.info(f"误差报告已写出: {path}")
    return path


__all__ = [
    "FORCE_COLUMNS",
    "PROFILE_COLUMNS",
    "BENCH_COLUMNS",
    "force_frame",
    "write_force_table",
    "profile_frame",
    "write_profile_table",
    "write_bench_table",
    "write_error_report",
]
