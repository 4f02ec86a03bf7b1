"""
BaseShape抽象类
定义统一的参数曲面接口，为球体、椭球、机翼三类几何提供标准化的采样与判定方式

参数域统一为 (u, v) ∈ [0, 1]²；面元密度、法向、包含判定等均基于该参数化
"""

from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from canonical.errors import InvalidArgumentError
from canonical.models import ShapeKind, ShapeParams

# 有限差分步长（参数空间）
FD_STEP = 1e-6

# 特征带缺省半宽
DEFAULT_BAND_HALFWIDTH = np.pi / 8


class BaseShape(ABC):
    """
    几何抽象基类

    提供统一的几何接口，支持：
    1. 参数曲面求值与面元/法向
    2. 物体内部判定（体点外部性）
    3. 包围盒、参考面积、真实表面积
    4. 各向异性特征权重与特征带判定
    """

    kind: ShapeKind

    def __init__(self, params: ShapeParams):
        """
        初始化几何

        Args:
            params: 几何参数（类型须与子类一致）
        """
        if params.kind != self.kind:
            raise InvalidArgumentError(f"几何类型不匹配: 期望 {self.kind.value}，实际 {params.kind.value}")
        self.params = params
        self._check_lengths()

    @abstractmethod
    def _check_lengths(self) -> None:
        """校验长度参数为正，否则抛出 InvalidArgumentError"""

    @abstractmethod
    def point(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """参数曲面求值，返回 (n, 3) 位置"""

    @abstractmethod
    def contains(self, positions: np.ndarray) -> np.ndarray:
        """判定点是否在物体内部或物面上，返回布尔掩码"""

    @abstractmethod
    def bounds(self) -> np.ndarray:
        """物体包围盒 (2, 3)"""

    @abstractmethod
    def reference_area(self) -> float:
        """气动系数的参考面积 A_ref"""

    @abstractmethod
    def feature_weight(self, u: np.ndarray, v: np.ndarray) -> np.ndarray:
        """各向异性采样的特征权重（非负，未归一化）"""

    @abstractmethod
    def feature_band(self, u: np.ndarray, v: np.ndarray, halfwidth: float) -> np.ndarray:
        """判定参数点是否落在特征带内"""

    def area_element(self, u: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        面元密度 |X_u × X_v| 与单位外法向（中心差分）

        Returns:
            (dA, normals)：dA 为相对 (u, v) 的面积密度
        """
        h = FD_STEP
        xu = (self.point(u + h, v) - self.point(u - h, v)) / (2 * h)
        xv = (self.point(u, v + h) - self.point(u, v - h)) / (2 * h)
        cross = self._orient(np.cross(xu, xv))
        dA = np.linalg.norm(cross, axis=1)
        return dA, cross / dA[:, None]

    def _orient(self, cross: np.ndarray) -> np.ndarray:
        """将 X_u × X_v 调整为外法向方向（子类按参数化方向覆盖）"""
        return cross

    def surface_area(self, resolution: int = 512) -> float:
        """真实表面积：缺省为参数域中点求积"""
        centers = (np.arange(resolution) + 0.5) / resolution
        uu, vv = np.meshgrid(centers, centers, indexing="ij")
        dA, _ = self.area_element(uu.ravel(), vv.ravel())
        return float(dA.sum() / resolution ** 2)

    def residual(self, positions: np.ndarray) -> np.ndarray:
        """隐式曲面残差（仅解析曲面实现）"""
        raise NotImplementedError(f"{self.kind.value} 未提供解析残差")


__all__ = ["BaseShape", "FD_STEP", "DEFAULT_BAND_HALFWIDTH"]
