"""
参数化机翼几何

对称四位数翼型沿展向放样：线性梢根比、四分之一弦线后掠、根部扭转线性减到翼尖。
展向参数 w = 2v − 1，η = sin(πw/2)，厚度因子 cos(πw/2) 使翼尖自然闭合；
弦向参数 σ = 1 − 2u（σ > 0 上表面，σ < 0 下表面），x/c = sin²(πσ/2)。
根部 |η| 用平滑绝对值代替，避免后掠折角处法向不连续。
"""

from typing import Tuple

import numpy as np

from canonical.errors import InvalidArgumentError
from canonical.models import ShapeKind
from geometry.base import BaseShape

# 根部平滑宽度（相对半展长）
ROOT_SMOOTHING = 0.02

# 特征带：前缘区 |σ| < 0.3；上表面“激波”带 |x/c − 0.55| < 0.15
LEADING_EDGE_BAND = 0.3
SHOCK_CHORD = 0.55
SHOCK_BAND = 0.15

_NACA = (0.2969, -0.1260, -0.3516, 0.2843, -0.1036)


def _smooth_abs(eta: np.ndarray) -> np.ndarray:
    d = ROOT_SMOOTHING
    return (np.sqrt(eta * eta + d * d) - d) / (np.sqrt(1.0 + d * d) - d)


def half_thickness(xi: np.ndarray, thickness_ratio: float) -> np.ndarray:
    """弦长归一化的半厚度（闭合后缘）"""
    xi = np.clip(xi, 0.0, 1.0)
    a0, a1, a2, a3, a4 = _NACA
    return 5.0 * thickness_ratio * (a0 * np.sqrt(xi) + a1 * xi + a2 * xi ** 2 + a3 * xi ** 3 + a4 * xi ** 4)


class WingShape(BaseShape):
    """后掠、扭转、梯形的薄翼放样"""

    kind = ShapeKind.WING

    def _check_lengths(self) -> None:
        p = self.params
        if p.aspect_ratio is None or p.aspect_ratio <= 0 or p.root_chord <= 0 or p.thickness_ratio <= 0:
            raise InvalidArgumentError("机翼长度参数必须为正数")
        if p.taper_ratio <= 0:
            raise InvalidArgumentError("梢根比必须为正数")

    @property
    def semi_span(self) -> float:
        p = self.params
        return p.aspect_ratio * p.root_chord * (1.0 + p.taper_ratio) / 4.0

    def section(self, eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """展向站位 η 处的 (弦长, 四分之一弦点 x, 扭转角 rad)"""
        p = self.params
        s = _smooth_abs(np.asarray(eta, dtype=np.float64))
        chord = p.root_chord * (1.0 - (1.0 - p.taper_ratio) * s)
        x_qc = 0.25 * p.root_chord + self.semi_span * s * np.tan(np.radians(p.sweep_deg))
        twist = np.radians(p.root_twist_deg) * (1.0 - s)
        return chord, x_qc, twist

    def leading_edge(self, eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """η 处前缘 x 与当地弦长（不含扭转投影）"""
        chord, x_qc, _ = self.section(eta)
        return x_qc - 0.25 * chord, chord

    def point(self, u, v):
        p = self.params
        sigma = 1.0 - 2.0 * np.asarray(u, dtype=np.float64)
        w = 2.0 * np.asarray(v, dtype=np.float64) - 1.0
        eta = np.sin(0.5 * np.pi * w)
        thick = np.cos(0.5 * np.pi * w)

        chord, x_qc, twist = self.section(eta)
        root_xi = np.sin(0.5 * np.pi * sigma)
        xi = root_xi * root_xi
        a0, a1, a2, a3, a4 = _NACA
        poly = a1 * xi + a2 * xi ** 2 + a3 * xi ** 3 + a4 * xi ** 4
        h = 5.0 * p.thickness_ratio * (a0 * root_xi + np.sign(sigma) * poly)

        X = chord * (xi - 0.25)
        Z = chord * h * thick
        cos_t, sin_t = np.cos(twist), np.sin(twist)
        x = x_qc + X * cos_t + Z * sin_t
        z = -X * sin_t + Z * cos_t
        y = self.semi_span * eta
        return np.stack([x, y, z], axis=1)

    def _orient(self, cross):
        # u 从上表面后缘绕前缘到下表面后缘，X_u × X_v 指向内部
        return -cross

    def local_coordinates(self, positions: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """逆变换到翼型当地坐标：返回 (η, x/c, 当地 z/c)"""
        pos = np.asarray(positions, dtype=np.float64)
        eta = pos[:, 1] / self.semi_span
        chord, x_qc, twist = self.section(np.clip(eta, -1.0, 1.0))
        dx = pos[:, 0] - x_qc
        cos_t, sin_t = np.cos(twist), np.sin(twist)
        X = dx * cos_t - pos[:, 2] * sin_t
        Z = dx * sin_t + pos[:, 2] * cos_t
        return eta, X / chord + 0.25, Z / chord

    def contains(self, positions):
        eta, xi, zc = self.local_coordinates(positions)
        inside_span = np.abs(eta) < 1.0
        thick = np.sqrt(np.clip(1.0 - eta * eta, 0.0, None))
        inside_chord = (xi >= 0.0) & (xi <= 1.0)
        limit = half_thickness(xi, self.params.thickness_ratio) * thick
        return inside_span & inside_chord & (np.abs(zc) <= limit)

    def bounds(self):
        centers = (np.arange(257) + 0.5) / 257
        uu, vv = np.meshgrid(np.linspace(0.0, 1.0, 257), centers, indexing="ij")
        pts = self.point(uu.ravel(), vv.ravel())
        lo, hi = pts.min(axis=0), pts.max(axis=0)
        pad = 0.02 * (hi - lo).max()
        return np.stack([lo - pad, hi + pad])

    def reference_area(self) -> float:
        p = self.params
        return float(self.semi_span * p.root_chord * (1.0 + p.taper_ratio))

    def feature_weight(self, u, v):
        sigma = 1.0 - 2.0 * np.asarray(u, dtype=np.float64)
        xi = np.sin(0.5 * np.pi * sigma) ** 2
        leading = np.exp(-(sigma / 0.15) ** 2)
        shock = np.exp(-((xi - SHOCK_CHORD) / 0.06) ** 2) * (sigma > 0)
        return leading + shock

    def feature_band(self, u, v, halfwidth):
        sigma = 1.0 - 2.0 * np.asarray(u, dtype=np.float64)
        xi = np.sin(0.5 * np.pi * sigma) ** 2
        return (np.abs(sigma) < LEADING_EDGE_BAND) | ((sigma > 0) & (np.abs(xi - SHOCK_CHORD) < SHOCK_BAND))


__all__ = ["WingShape", "half_thickness", "ROOT_SMOOTHING"]
