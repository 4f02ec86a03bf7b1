"""
表面与体点采样

表面：在参数域上制表目标密度（面元密度 × 特征权重），用分段常数逆 CDF 把
二维低差异序列（分层 u + 黄金比例 v，即 Fibonacci 格点）映射到曲面上；
面元面积 = 解析面元密度 / 采样器的精确点密度。核密度模式用于未知采样密度的点云。
体：规则立方格点（最密且点数不超过 n）或拒绝采样。
"""

import math
from typing import Dict, Optional, Type

import numpy as np
from loguru import logger
from scipy.spatial import cKDTree

from canonical.errors import InvalidArgumentError
from canonical.models import (
    AreaMode,
    ShapeKind,
    ShapeParams,
    SurfacePointSet,
    Tessellation,
    VolumeMode,
    VolumePointSet,
)
from geometry.base import DEFAULT_BAND_HALFWIDTH, BaseShape
from geometry.ellipsoid import EllipsoidShape, SphereShape
from geometry.wing import WingShape

# 支持的几何类型到实现类的映射
SUPPORTED_SHAPES: Dict[ShapeKind, Type[BaseShape]] = {
    ShapeKind.SPHERE: SphereShape,
    ShapeKind.ELLIPSOID: EllipsoidShape,
    ShapeKind.WING: WingShape,
}

MIN_SURFACE_POINTS = 16
TABLE_RESOLUTION = 256
DEFAULT_CONCENTRATION = 0.85
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def build_shape(params: ShapeParams) -> BaseShape:
    """按几何类型实例化几何对象"""
    shape_cls = SUPPORTED_SHAPES.get(params.kind)
    if shape_cls is None:
        raise InvalidArgumentError(f"不支持的几何类型: {params.kind}")
    return shape_cls(params)


def _parameter_grid(resolution: int):
    centers = (np.arange(resolution) + 0.5) / resolution
    uu, vv = np.meshgrid(centers, centers, indexing="ij")
    return uu.ravel(), vv.ravel()


def _sampling_table(shape: BaseShape, tessellation: Tessellation, concentration: float) -> np.ndarray:
    """参数域单元上的目标采样质量 (M, M)"""
    uu, vv = _parameter_grid(TABLE_RESOLUTION)
    dA, _ = shape.area_element(uu, vv)
    weight = dA
    if tessellation == Tessellation.ANISOTROPIC:
        bump = shape.feature_weight(uu, vv)
        mean_bump = float((dA * bump).sum() / dA.sum())
        weight = dA * ((1.0 - concentration) + concentration * bump / mean_bump)
    return weight.reshape(TABLE_RESOLUTION, TABLE_RESOLUTION)


def _low_discrepancy(n: int, seed: int):
    """分层 u 与黄金比例 v（随机平移仅作用于 v）"""
    shift = np.random.default_rng(seed).random()
    index = np.arange(n, dtype=np.float64)
    r1 = (index + 0.5) / n
    r2 = np.mod(index * _GOLDEN + shift, 1.0)
    return r1, r2


def _invert_table(table: np.ndarray, r1: np.ndarray, r2: np.ndarray):
    """
    分段常数密度的逆 CDF

    Returns:
        (u, v, density)：density 为采样分布在 [0,1]² 上的精确密度
    """
    mu, mv = table.shape
    total = table.sum()
    row = table.sum(axis=1)

    cdf_u = np.concatenate([[0.0], np.cumsum(row)]) / total
    iu = np.clip(np.searchsorted(cdf_u, r1, side="right") - 1, 0, mu - 1)
    frac_u = np.clip((r1 - cdf_u[iu]) / (row[iu] / total), 0.0, 1.0)
    u = (iu + frac_u) / mu

    cdf_v = np.concatenate([np.zeros((mu, 1)), np.cumsum(table, axis=1)], axis=1) / row[:, None]
    starts = (cdf_v[:, :-1] + np.arange(mu)[:, None]).ravel()
    flat = np.searchsorted(starts, iu + r2, side="right") - 1
    iv = np.clip(flat - iu * mv, 0, mv - 1)
    cell = table[iu, iv]
    frac_v = np.clip((r2 - cdf_v[iu, iv]) / (cell / row[iu]), 0.0, 1.0)
    v = (iv + frac_v) / mv

    density = cell / total * (mu * mv)
    return u, v, density


def kernel_areas(positions: np.ndarray, total_area: float) -> np.ndarray:
    """
    核密度估计面元面积

    高斯核带宽 = 2 × 平均最近邻距离，截断半径 3 倍带宽；面积 ∝ 1/密度，并缩放到 total_area
    """
    tree = cKDTree(positions)
    nn_dist, _ = tree.query(positions, k=2)
    bandwidth = 2.0 * float(nn_dist[:, 1].mean())
    neighbours = tree.query_ball_point(positions, r=3.0 * bandwidth)
    lengths = np.fromiter((len(x) for x in neighbours), dtype=np.intp, count=len(neighbours))
    cols = np.concatenate([np.asarray(x, dtype=np.intp) for x in neighbours])
    rows = np.repeat(np.arange(len(neighbours)), lengths)
    d2 = np.sum((positions[rows] - positions[cols]) ** 2, axis=1)
    density = np.bincount(rows, weights=np.exp(-d2 / (2.0 * bandwidth ** 2)), minlength=len(neighbours))
    inverse = 1.0 / density
    return inverse * (total_area / inverse.sum())


def make_surface(
    params: ShapeParams,
    n: int,
    tessellation: Tessellation = Tessellation.ISOTROPIC,
    seed: int = 0,
    area_mode: AreaMode = AreaMode.GENERATOR,
    concentration: float = DEFAULT_CONCENTRATION,
) -> SurfacePointSet:
    """
    生成表面点集

    Args:
        params: 几何参数
        n: 点数（≥ 16）
        tessellation: isotropic（Fibonacci 格点，近似等面积）/ anisotropic（特征带加密）
        seed: 随机种子（仅平移黄金比例序列）
        area_mode: generator（解析密度）/ kernel（核密度估计）
        concentration: 各向异性模式下集中到特征权重的概率质量

    Raises:
        InvalidArgumentError: 点数过少或几何参数非法
    """
    if n < MIN_SURFACE_POINTS:
        raise InvalidArgumentError(f"表面点数 n={n} 小于 {MIN_SURFACE_POINTS}")
    if not 0.0 <= concentration < 1.0:
        raise InvalidArgumentError("concentration 必须在 [0, 1) 内")
    shape = build_shape(params)
    tessellation = Tessellation(tessellation)

    table = _sampling_table(shape, tessellation, concentration)
    r1, r2 = _low_discrepancy(n, seed)
    u, v, density = _invert_table(table, r1, r2)

    positions = shape.point(u, v)
    dA, normals = shape.area_element(u, v)
    if AreaMode(area_mode) == AreaMode.KERNEL:
        areas = kernel_areas(positions, shape.surface_area())
    else:
        areas = dA / (n * density)

    logger.debug(f"表面采样完成: {params.kind.value} n={n} 模式={tessellation.value} 面积={areas.sum():.6f}")
    return SurfacePointSet(positions=positions, normals=normals, areas=areas, uv=np.stack([u, v], axis=1))


def feature_band_fraction(
    params: ShapeParams, surface: SurfacePointSet, halfwidth: float = DEFAULT_BAND_HALFWIDTH
) -> float:
    """特征带内点数占比（需要点集保留参数坐标）"""
    if surface.uv is None:
        raise InvalidArgumentError("点集缺少参数坐标，无法判定特征带")
    shape = build_shape(params)
    inside = shape.feature_band(surface.uv[:, 0], surface.uv[:, 1], halfwidth)
    return float(inside.mean())


def _densest_lattice(lengths: np.ndarray, n: int):
    """点数不超过 n 的最密立方格：返回 (间距, 各轴点数)"""
    k = np.arange(1, n + 1, dtype=np.float64)
    candidates = np.unique((lengths[:, None] / k[None, :]).ravel())
    counts = np.floor(lengths[None, :] / candidates[:, None] * (1.0 + 1e-12))
    counts = np.maximum(counts, 1.0)
    feasible = np.prod(counts, axis=1) <= n
    best = int(np.argmax(feasible))  # candidates 升序，第一个可行即最小间距
    return candidates[best], counts[best].astype(int)


def make_volume_points(
    params: ShapeParams,
    bbox: np.ndarray,
    n: int,
    mode: VolumeMode = VolumeMode.RANDOM,
    seed: int = 0,
) -> VolumePointSet:
    """
    生成物体外部的体点

    Args:
        params: 几何参数
        bbox: 包围盒 (2, 3)，须严格包含物体
        n: 点数上限（规则网格）或精确点数（随机）
        mode: regular-grid / random
        seed: 随机种子

    Raises:
        InvalidArgumentError: 包围盒未包含物体或 n 为负
    """
    shape = build_shape(params)
    box = np.asarray(bbox, dtype=np.float64)
    if box.shape != (2, 3) or not np.all(box[1] > box[0]):
        raise InvalidArgumentError("bbox 应为 (2, 3) 且上界大于下界")
    body = shape.bounds()
    if not (np.all(box[0] < body[0]) and np.all(box[1] > body[1])):
        raise InvalidArgumentError("包围盒未严格包含物体")
    if n < 0:
        raise InvalidArgumentError(f"体点数 n={n} 不能为负")
    if n == 0:
        return VolumePointSet(positions=np.zeros((0, 3)), bbox=box)

    lo, hi = box
    if VolumeMode(mode) == VolumeMode.REGULAR_GRID:
        lengths = hi - lo
        spacing, counts = _densest_lattice(lengths, n)
        axes = [
            lo[d] + 0.5 * (lengths[d] - (counts[d] - 1) * spacing) + spacing * np.arange(counts[d])
            for d in range(3)
        ]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 3)
        positions = grid[~shape.contains(grid)]
    else:
        rng = np.random.default_rng(seed)
        chunks = []
        have = 0
        while have < n:
            batch = lo + (hi - lo) * rng.random((max(2 * (n - have), 1024), 3))
            outside = batch[~shape.contains(batch)]
            chunks.append(outside)
            have += outside.shape[0]
        positions = np.concatenate(chunks)[:n]

    return VolumePointSet(positions=positions, bbox=box)


__all__ = [
    "SUPPORTED_SHAPES",
    "MIN_SURFACE_POINTS",
    "build_shape",
    "make_surface",
    "make_volume_points",
    "kernel_areas",
    "feature_band_fraction",
]
