"""
几何层模块
参数曲面（球体、椭球、机翼）与表面/体点采样
"""

from .base import BaseShape
from .sampling import (
    SUPPORTED_SHAPES,
    build_shape,
    feature_band_fraction,
    kernel_areas,
    make_surface,
    make_volume_points,
)

__version__ = "1.0.0"

__all__ = [
    "BaseShape",
    "SUPPORTED_SHAPES",
    "build_shape",
    "feature_band_fraction",
    "kernel_areas",
    "make_surface",
    "make_volume_points",
]
