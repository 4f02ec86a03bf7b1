"""
误差指标：MAE、相对 L1/L2、R²，以及跨算例累加的数据集级误差
"""

from dataclasses import dataclass, field
from typing import Dict, Sequence, Tuple

import numpy as np

from canonical.errors import InvalidArgumentError, ShapeError, UndefinedRatioError


def _aligned(pred, target) -> Tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if p.shape != t.shape:
        raise ShapeError(f"预测形状 {p.shape} 与目标 {t.shape} 不一致")
    return p.reshape(-1), t.reshape(-1)


def mean_absolute_error(pred, target) -> float:
    p, t = _aligned(pred, target)
    if t.size == 0:
        raise InvalidArgumentError("MAE 需要至少一个点")
    return float(np.abs(p - t).mean())


def relative_errors(pred, target) -> Tuple[float, float]:
    """
    relL1 = Σ|y−ŷ| / Σ|y|，relL2 = ‖y−ŷ‖₂ / ‖y‖₂（向量场按分量展平）

    Raises:
        UndefinedRatioError: 目标范数为 0
    """
    p, t = _aligned(pred, target)
    l1 = float(np.abs(t).sum())
    l2 = float(np.linalg.norm(t))
    if l1 == 0.0 or l2 == 0.0:
        raise UndefinedRatioError("目标范数为 0，相对误差无定义")
    diff = p - t
    return float(np.abs(diff).sum()) / l1, float(np.linalg.norm(diff)) / l2


def r2_score(pred: Sequence[float], target: Sequence[float]) -> float:
    """
    R² = 1 − Σ(y−ŷ)² / Σ(y−ȳ)²

    Raises:
        InvalidArgumentError: 少于 2 个点
        UndefinedRatioError: 目标方差为 0
    """
    p, t = _aligned(pred, target)
    if t.size < 2:
        raise InvalidArgumentError("R² 至少需要 2 个点")
    ss_tot = float(((t - t.mean()) ** 2).sum())
    if ss_tot == 0.0:
        raise UndefinedRatioError("目标方差为 0，R² 无定义")
    ss_res = float(((t - p) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def affine_fit(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """最小二乘直线 y ≈ a·x + b，返回 (a, b, R²)"""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    if xs.shape != ys.shape or xs.size < 2:
        raise InvalidArgumentError("直线拟合至少需要 2 个对齐的点")
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept), r2_score(slope * xs + intercept, ys)


@dataclass
class ErrorAccumulator:
    """
    数据集级误差累加器

    对每个变量累加 Σ|y−ŷ|、Σ|y|、Σ(y−ŷ)²、Σy² 与分量数，跨算例汇总后再求比值
    """

    abs_err: Dict[str, float] = field(default_factory=dict)
    abs_ref: Dict[str, float] = field(default_factory=dict)
    sq_err: Dict[str, float] = field(default_factory=dict)
    sq_ref: Dict[str, float] = field(default_factory=dict)
    counts: Dict[str, int] = field(default_factory=dict)
    points: Dict[str, int] = field(default_factory=dict)

    def add(self, name: str, pred, target) -> None:
        p_arr = np.asarray(pred, dtype=np.float64)
        p, t = _aligned(pred, target)
        diff = p - t
        self.abs_err[name] = self.abs_err.get(name, 0.0) + float(np.abs(diff).sum())
        self.abs_ref[name] = self.abs_ref.get(name, 0.0) + float(np.abs(t).sum())
        self.sq_err[name] = self.sq_err.get(name, 0.0) + float((diff * diff).sum())
        self.sq_ref[name] = self.sq_ref.get(name, 0.0) + float((t * t).sum())
        self.counts[name] = self.counts.get(name, 0) + int(t.size)
        self.points[name] = self.points.get(name, 0) + (int(p_arr.shape[0]) if p_arr.ndim else 1)

    def mae(self) -> Dict[str, float]:
        return {k: self.abs_err[k] / self.counts[k] for k in self.counts if self.counts[k]}

    def relative(self, name: str) -> Tuple[float, float]:
        """数据集级 (relL1, relL2)；目标范数为 0 时抛出 UndefinedRatioError"""
        if self.abs_ref.get(name, 0.0) == 0.0 or self.sq_ref.get(name, 0.0) == 0.0:
            raise UndefinedRatioError(f"{name}: 目标范数为 0，相对误差无定义")
        return self.abs_err[name] / self.abs_ref[name], float(np.sqrt(self.sq_err[name] / self.sq_ref[name]))


__all__ = ["mean_absolute_error", "relative_errors", "r2_score", "affine_fit", "ErrorAccumulator"]
