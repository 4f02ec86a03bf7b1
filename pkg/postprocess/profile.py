"""
剖面切片：展向站位处的压力分布与速度切片
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from canonical.errors import EmptySliceError, InvalidArgumentError, ShapeError
from canonical.models import ShapeKind, ShapeParams, SurfacePointSet, VolumePointSet
from geometry import build_shape


@dataclass
class ProfileCurve:
    """单侧曲线：按 x/c 升序"""

    surface: str
    x_c: np.ndarray
    pressure: np.ndarray
    index: np.ndarray


@dataclass
class PressureProfile:
    span_fraction: float
    y_station: float
    upper: ProfileCurve
    lower: ProfileCurve

    @property
    def count(self) -> int:
        return int(self.upper.index.size + self.lower.index.size)


def _curve(name: str, mask: np.ndarray, x_c: np.ndarray, p: np.ndarray) -> ProfileCurve:
    idx = np.flatnonzero(mask)
    order = np.lexsort((idx, x_c[idx]))
    idx = idx[order]
    return ProfileCurve(surface=name, x_c=x_c[idx], pressure=p[idx], index=idx)


def pressure_profile(
    surface: SurfacePointSet,
    surface_pressure: np.ndarray,
    span_fraction: float,
    band: float,
    params: Optional[ShapeParams] = None,
) -> PressureProfile:
    """
    展向站位 y = span_fraction·半展长 处 |y − y₀| ≤ band 的点，按法向 z 符号分为上/下表面

    机翼给定 params 时 x 按当地弦长归一化（逆放样变换）；否则按切片内 x 范围归一化。

    Raises:
        InvalidArgumentError: span_fraction ∉ [0, 1] 或 band ≤ 0
        EmptySliceError: 切片内没有点
    """
    if not 0.0 <= span_fraction <= 1.0:
        raise InvalidArgumentError(f"span_fraction={span_fraction} 不在 [0, 1]")
    if band <= 0:
        raise InvalidArgumentError("band 必须为正数")
    p = np.asarray(surface_pressure, dtype=np.float64)
    if p.shape != (surface.count,):
        raise ShapeError(f"压力长度 {p.shape} 与点数 {surface.count} 不一致")

    y = surface.positions[:, 1]
    wing = None
    if params is not None and params.kind == ShapeKind.WING:
        wing = build_shape(params)
        half_span = wing.semi_span
    else:
        half_span = float(np.abs(y).max()) if surface.count else 0.0
    y0 = span_fraction * half_span
    mask = np.abs(y - y0) <= band
    if not mask.any():
        raise EmptySliceError(f"站位 y={y0:.4g} ± {band} 内没有表面点")

    if wing is not None:
        _, x_c, _ = wing.local_coordinates(surface.positions)
    else:
        x = surface.positions[:, 0]
        lo, hi = x[mask].min(), x[mask].max()
        x_c = (x - lo) / (hi - lo) if hi > lo else np.zeros_like(x)

    upper = mask & (surface.normals[:, 2] >= 0.0)
    lower = mask & (surface.normals[:, 2] < 0.0)
    return PressureProfile(
        span_fraction=span_fraction,
        y_station=y0,
        upper=_curve("upper", upper, x_c, p),
        lower=_curve("lower", lower, x_c, p),
    )


@dataclass
class VelocitySlice:
    x: np.ndarray
    z: np.ndarray
    u_x: np.ndarray
    index: np.ndarray


def velocity_slice(volume: VolumePointSet, velocity: np.ndarray, y0: float, band: float) -> VelocitySlice:
    """
    平面 y = y0 附近体点的 x 向速度

    Raises:
        EmptySliceError: 切片内没有体点
    """
    u = np.asarray(velocity, dtype=np.float64)
    if u.shape != (volume.count, 3):
        raise ShapeError(f"速度形状 {u.shape} 与体点数 {volume.count} 不一致")
    if band <= 0:
        raise InvalidArgumentError("band 必须为正数")
    idx = np.flatnonzero(np.abs(volume.positions[:, 1] - y0) <= band)
    if idx.size == 0:
        raise EmptySliceError(f"平面 y={y0:.4g} ± {band} 内没有体点")
    return VelocitySlice(
        x=volume.positions[idx, 0],
        z=volume.positions[idx, 2],
        u_x=u[idx, 0],
        index=idx,
    )


__all__ = ["ProfileCurve", "PressureProfile", "pressure_profile", "VelocitySlice", "velocity_slice"]
