"""
参数化流场族（任意几何的解析真值）

记 d = u_∞(α)，e_l = e_lift(α)，â = α / 4°，q = ρV²，s = n·d，l = n·e_lift。
表面压力：
    p_s = 0.9 q · tanh( ½(1 − κ(1 − s²)) − β s − γ â l )
壁面剪切（切向投影）：
    τ_w = c_f q (1 + ½ s) · P_t( d + δ â e_l )
体场在等效椭球归一化坐标 ξ = (x − x_c) / h 中构造（h 为物体包围盒半宽）：
    u/V = d(1 + 1/(2R)) − 1.5 (d·ξ) ξ / (r² R) − ω d · exp(−‖ξ_⊥‖²) · ½(1 + tanh 2(d·ξ))
    R = r³ + ε，ε 对机翼取 1（等效椭球内部仍可能有体点），对球/椭球取 0
    p_v = 0.9 q · tanh( ½(1 − ‖u‖²/V²) )
κ、β、γ、c_f、δ、ω 由工况标签选择；所有量均满足 |p| < q。
"""

from dataclasses import dataclass
from typing import Dict

import numpy as np

from canonical.errors import InvalidArgumentError
from canonical.models import (
    ALPHA_MAX_RAD,
    FieldSample,
    FlowConditions,
    ShapeKind,
    ShapeParams,
    SurfacePointSet,
    VolumePointSet,
)
from geometry import build_shape
from oracle.potential_flow import tangential
from postprocess.forces import flow_directions

PRESSURE_BOUND = 0.9


@dataclass(frozen=True)
class FamilyConstants:
    """单个工况的流场族常数"""

    kappa: float
    beta: float
    gamma: float
    shear: float
    drift: float
    wake: float


# 工况标签 → 常数
REGIME_CONSTANTS: Dict[str, FamilyConstants] = {
    "0.5": FamilyConstants(kappa=2.25, beta=0.35, gamma=0.45, shear=0.005, drift=0.3, wake=0.15),
    "0.85": FamilyConstants(kappa=2.60, beta=0.55, gamma=0.65, shear=0.004, drift=0.5, wake=0.30),
}

_SOFTENING = {ShapeKind.SPHERE: 0.0, ShapeKind.ELLIPSOID: 0.0, ShapeKind.WING: 1.0}


def regime_constants(regime: str) -> FamilyConstants:
    """按工况标签取常数"""
    constants = REGIME_CONSTANTS.get(str(regime))
    if constants is None:
        raise InvalidArgumentError(f"未知工况标签: {regime}，支持 {sorted(REGIME_CONSTANTS)}")
    return constants


def family_volume_velocity(
    positions: np.ndarray, params: ShapeParams, cond: FlowConditions
) -> np.ndarray:
    """体速度场"""
    constants = regime_constants(cond.regime)
    bounds = build_shape(params).bounds()
    center = 0.5 * (bounds[0] + bounds[1])
    half = 0.5 * (bounds[1] - bounds[0])
    d = flow_directions(cond.alpha).free_stream

    xi = (np.asarray(positions, dtype=np.float64) - center) / half
    r2 = np.maximum(np.einsum("ij,ij->i", xi, xi), 1e-12)
    R = r2 * np.sqrt(r2) + _SOFTENING[params.kind]
    along = xi @ d
    perp = xi - along[:, None] * d[None, :]
    wake = constants.wake * np.exp(-np.einsum("ij,ij->i", perp, perp)) * 0.5 * (1.0 + np.tanh(2.0 * along))

    u = (
        d[None, :] * (1.0 + 0.5 / R - wake)[:, None]
        - (1.5 * along / (r2 * R))[:, None] * xi
    )
    return cond.speed * u


def family_fields(
    params: ShapeParams,
    cond: FlowConditions,
    surface: SurfacePointSet,
    volume: VolumePointSet,
) -> FieldSample:
    """
    流场族真值

    Args:
        params: 几何参数（任意类型）
        cond: 来流条件（攻角与工况标签）
        surface: 表面点集
        volume: 体点集
    """
    constants = regime_constants(cond.regime)
    dirs = flow_directions(cond.alpha)
    q = cond.density * cond.speed ** 2
    a_hat = cond.alpha / ALPHA_MAX_RAD

    s = surface.normals @ dirs.free_stream
    lift_proj = surface.normals @ dirs.lift
    arg = 0.5 * (1.0 - constants.kappa * (1.0 - s * s)) - constants.beta * s - constants.gamma * a_hat * lift_proj
    surface_pressure = PRESSURE_BOUND * q * np.tanh(arg)

    drift = dirs.free_stream + constants.drift * a_hat * dirs.lift
    raw = constants.shear * q * (1.0 + 0.5 * s)[:, None] * drift[None, :]
    wall_shear = tangential(raw, surface.normals)

    velocity = family_volume_velocity(volume.positions, params, cond)
    speed2 = np.einsum("ij,ij->i", velocity, velocity) / cond.speed ** 2
    volume_pressure = PRESSURE_BOUND * q * np.tanh(0.5 * (1.0 - speed2))

    return FieldSample(
        surface_pressure=surface_pressure,
        wall_shear=wall_shear,
        volume_pressure=volume_pressure,
        velocity=velocity,
    )


__all__ = ["FamilyConstants", "REGIME_CONSTANTS", "regime_constants", "family_fields", "family_volume_velocity"]
