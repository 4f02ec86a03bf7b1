"""
椭球与球体几何

参数化以 x 轴（来流方向）为极轴：t = 2u − 1 = cos θ，φ = 2πv，
单位球点 (t, s·cos φ, s·sin φ)，s = √(1 − t²)，再按半轴 (a, b, c) 缩放
"""

from typing import Tuple

import numpy as np
from scipy.special import ellipeinc, ellipkinc

from canonical.errors import InvalidArgumentError
from canonical.models import ShapeKind
from geometry.base import BaseShape


def _unit_sphere(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    t = 2.0 * np.asarray(u, dtype=np.float64) - 1.0
    phi = 2.0 * np.pi * np.asarray(v, dtype=np.float64)
    s = np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    return np.stack([t, s * np.cos(phi), s * np.sin(phi)], axis=1)


def ellipsoid_area(a: float, b: float, c: float) -> float:
    """三轴椭球表面积（不完全椭圆积分的精确公式）"""
    A, B, C = sorted((a, b, c), reverse=True)
    if A == C:
        return 4.0 * np.pi * A * A
    phi = np.arccos(C / A)
    m = (A * A * (B * B - C * C)) / (B * B * (A * A - C * C))
    sin_phi = np.sin(phi)
    return float(
        2.0 * np.pi * C * C
        + 2.0 * np.pi * A * B / sin_phi * (ellipeinc(phi, m) * sin_phi ** 2 + ellipkinc(phi, m) * np.cos(phi) ** 2)
    )


class EllipsoidShape(BaseShape):
    """轴对齐椭球，半轴 (a, b, c) 分别沿 x, y, z"""

    kind = ShapeKind.ELLIPSOID

    def _semi_axes(self) -> Tuple[float, float, float]:
        return tuple(self.params.semi_axes)

    def _check_lengths(self) -> None:
        if min(self._semi_axes()) <= 0:
            raise InvalidArgumentError("椭球半轴必须为正数")

    def point(self, u, v):
        return _unit_sphere(u, v) * np.asarray(self._semi_axes())

    def area_element(self, u, v):
        a, b, c = self._semi_axes()
        unit = _unit_sphere(u, v)
        grad = unit / np.asarray([a, b, c])
        norm = np.linalg.norm(grad, axis=1)
        dA = 4.0 * np.pi * a * b * c * norm
        return dA, grad / norm[:, None]

    def contains(self, positions):
        return self.residual(positions) <= 0.0

    def residual(self, positions):
        scaled = np.asarray(positions, dtype=np.float64) / np.asarray(self._semi_axes())
        return np.einsum("ij,ij->i", scaled, scaled) - 1.0

    def bounds(self):
        axes = np.asarray(self._semi_axes())
        return np.stack([-axes, axes])

    def reference_area(self) -> float:
        _, b, c = self._semi_axes()
        return float(np.pi * b * c)

    def surface_area(self, resolution: int = 512) -> float:
        return ellipsoid_area(*self._semi_axes())

    def feature_weight(self, u, v):
        t = 2.0 * np.asarray(u, dtype=np.float64) - 1.0
        return (1.0 - t * t) ** 4

    def feature_band(self, u, v, halfwidth):
        # |θ − π/2| < halfwidth  ⇔  |cos θ| < sin(halfwidth)
        t = 2.0 * np.asarray(u, dtype=np.float64) - 1.0
        return np.abs(t) < np.sin(halfwidth)


class SphereShape(EllipsoidShape):
    """球心位于原点的球体"""

    kind = ShapeKind.SPHERE

    def _semi_axes(self):
        r = self.params.radius
        return (r, r, r)

    def _check_lengths(self) -> None:
        if self.params.radius is None or self.params.radius <= 0:
            raise InvalidArgumentError("球半径必须为正数")

    def residual(self, positions):
        return np.linalg.norm(np.asarray(positions, dtype=np.float64), axis=1) - self.params.radius

    @property
    def radius(self) -> float:
        return float(self.params.radius)


__all__ = ["EllipsoidShape", "SphereShape", "ellipsoid_area"]
