"""
气动力积分

F = Σ_i (−p_s,i · n_i + τ_w,i) · A_i；阻力/升力为 F 在 e_drag/e_lift 上的投影，
系数 C = 2F / (ρ v² A_ref)。p_s 缺省相对于 p_∞，absolute_pressure=True 时先减去 p_∞。
"""

from typing import Dict, List, Sequence

import numpy as np

from canonical.errors import ShapeError
from canonical.models import FlowConditions, FlowDirections, ForceReport, SurfacePointSet

_SPAN_AXIS = np.array([0.0, 1.0, 0.0])


def flow_directions(alpha: float) -> FlowDirections:
    """
    攻角 α 下的来流、阻力、升力方向

    u_∞ = (cos α, 0, sin α)，e_drag = u_∞/‖u_∞‖，e_lift = e_drag × (0, 1, 0)
    """
    free_stream = np.array([np.cos(alpha), 0.0, np.sin(alpha)])
    drag = free_stream / np.linalg.norm(free_stream)
    lift = np.cross(drag, _SPAN_AXIS)
    return FlowDirections(free_stream=free_stream, drag=drag, lift=lift)


def integrate_forces(
    surface: SurfacePointSet,
    surface_pressure: np.ndarray,
    wall_shear: np.ndarray,
    cond: FlowConditions,
    absolute_pressure: bool = False,
) -> ForceReport:
    """
    表面力积分

    Args:
        surface: 表面点集（法向与面积）
        surface_pressure: 每点压力 (n,)
        wall_shear: 每点壁面剪切 (n, 3)
        cond: 来流条件
        absolute_pressure: 压力是否为绝对压力

    Raises:
        ShapeError: 数组与点集长度不一致
    """
    p = np.asarray(surface_pressure, dtype=np.float64)
    tau = np.asarray(wall_shear, dtype=np.float64)
    n = surface.count
    if p.shape != (n,) or tau.shape != (n, 3):
        raise ShapeError(f"压力/剪切形状 {p.shape}/{tau.shape} 与点数 {n} 不一致")
    if absolute_pressure:
        p = p - cond.p_inf

    traction = -p[:, None] * surface.normals + tau
    force = (traction * surface.areas[:, None]).sum(axis=0)
    dirs = flow_directions(cond.alpha)
    drag = float(force @ dirs.drag)
    lift = float(force @ dirs.lift)
    scale = cond.density * cond.speed ** 2 * cond.reference_area
    return ForceReport(
        force=tuple(float(f) for f in force),
        drag=drag,
        lift=lift,
        cd=2.0 * drag / scale,
        cl=2.0 * lift / scale,
    )


def force_error_summary(targets: Sequence[ForceReport], preds: Sequence[ForceReport]) -> Dict[str, Dict[str, float]]:
    """逐算例气动力相对误差的中位数与最大值（阻力、升力）"""
    if len(targets) != len(preds):
        raise ShapeError("目标与预测的算例数不一致")
    summary: Dict[str, Dict[str, float]] = {}
    for key in ("drag", "lift"):
        errors: List[float] = []
        for t, p in zip(targets, preds):
            ref = abs(getattr(t, key))
            if ref > 0:
                errors.append(abs(getattr(p, key) - getattr(t, key)) / ref)
        if errors:
            summary[key] = {"median": float(np.median(errors)), "max": float(np.max(errors))}
    return summary


__all__ = ["flow_directions", "integrate_forces", "force_error_summary"]
