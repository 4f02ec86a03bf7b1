"""
球绕流势流解析解

来流方向 d = u_∞(α)，速度 V，球半径 a，球心在原点：
    u(x) = V · [ d·(1 + a³/(2r³)) − 3a³(d·x)/(2r⁵) · x ]
即来流坐标系下 u_r = V cosθ (1 − a³/r³)，u_θ = −V sinθ (1 + a³/(2r³))。
表面压力 p_s = ½ρV² (1 − 9/4 sin²θ)，体压力按伯努利 p_v = ½ρ(V² − ‖u‖²)。
壁面剪切为合成代理：τ_w = k ρ V² · (抬升点处速度的切向分量 / V)，k = 0.005。
"""

from typing import Optional

import numpy as np

from canonical.errors import InvalidArgumentError
from canonical.models import FieldSample, FlowConditions, ShapeKind, ShapeParams, SurfacePointSet, VolumePointSet
from postprocess.forces import flow_directions

SHEAR_COEFFICIENT = 0.005
LIFT_FRACTION = 0.05
_SPHERE_TOLERANCE = 1e-6


def tangential(vectors: np.ndarray, normals: np.ndarray) -> np.ndarray:
    """去除法向分量（投影两次以压低舍入残差）"""
    out = vectors - np.einsum("ij,ij->i", vectors, normals)[:, None] * normals
    return out - np.einsum("ij,ij->i", out, normals)[:, None] * normals


def sphere_velocity(positions: np.ndarray, radius: float, direction: np.ndarray, speed: float) -> np.ndarray:
    """球外势流速度场"""
    x = np.asarray(positions, dtype=np.float64)
    r2 = np.einsum("ij,ij->i", x, x)
    r = np.sqrt(r2)
    a3 = radius ** 3
    along = x @ direction
    return speed * (
        direction[None, :] * (1.0 + a3 / (2.0 * r2 * r))[:, None]
        - (1.5 * a3 * along / (r2 * r2 * r))[:, None] * x
    )


def _infer_radius(surface: SurfacePointSet, params: Optional[ShapeParams]) -> float:
    if params is not None:
        if params.kind != ShapeKind.SPHERE:
            raise InvalidArgumentError(f"势流解仅适用于球体，实际为 {params.kind.value}")
        return float(params.radius)
    radii = np.linalg.norm(surface.positions, axis=1)
    radius = float(radii.mean())
    if radius <= 0 or np.abs(radii - radius).max() > _SPHERE_TOLERANCE * radius:
        raise InvalidArgumentError("表面点集不是以原点为球心的球面")
    return radius


def potential_flow_sphere(
    surface: SurfacePointSet,
    volume: VolumePointSet,
    cond: FlowConditions,
    params: Optional[ShapeParams] = None,
) -> FieldSample:
    """
    球绕流势流真值场

    Args:
        surface: 球面点集
        volume: 球外体点集
        cond: 来流条件（攻角决定来流方向）
        params: 可选几何参数；缺省时由表面点集推断半径

    Raises:
        InvalidArgumentError: 几何不是球体
    """
    radius = _infer_radius(surface, params)
    direction = flow_directions(cond.alpha).free_stream
    rho, speed = cond.density, cond.speed

    cos_theta = surface.normals @ direction
    sin2 = 1.0 - cos_theta ** 2
    surface_pressure = 0.5 * rho * speed ** 2 * (1.0 - 2.25 * sin2)

    lifted = surface.positions + LIFT_FRACTION * radius * surface.normals
    slip = sphere_velocity(lifted, radius, direction, speed)
    wall_shear = SHEAR_COEFFICIENT * rho * speed * tangential(slip, surface.normals)

    velocity = sphere_velocity(volume.positions, radius, direction, speed)
    volume_pressure = 0.5 * rho * (speed ** 2 - np.einsum("ij,ij->i", velocity, velocity))

    return FieldSample(
        surface_pressure=surface_pressure,
        wall_shear=wall_shear,
        volume_pressure=volume_pressure,
        velocity=velocity,
    )


__all__ = ["potential_flow_sphere", "sphere_velocity", "tangential", "SHEAR_COEFFICIENT", "LIFT_FRACTION"]
