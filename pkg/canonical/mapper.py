"""
流场通道转换工具 (FieldMapper)
将流场样本打包为分支通道矩阵，并按训练集统计量做逐通道 z-score 标准化
"""

from typing import Dict, Iterable, Tuple

import numpy as np
from loguru import logger

from canonical.errors import InvalidArgumentError, ShapeError
from canonical.models import FieldSample, StandardizationStats

_STD_FLOOR = 1e-12


class FieldMapper:
    """
    流场通道映射器

    表面通道 [p_s, τx, τy, τz]，体通道 [p_v, ux, uy, uz]
    """

    SURFACE_CHANNELS = ("p_s", "tau_x", "tau_y", "tau_z")
    VOLUME_CHANNELS = ("p_v", "u_x", "u_y", "u_z")

    # 变量 → (分支, 起始列, 结束列)
    VARIABLE_COLUMNS: Dict[str, Tuple[str, int, int]] = {
        "surface_pressure": ("surface", 0, 1),
        "wall_shear": ("surface", 1, 4),
        "volume_pressure": ("volume", 0, 1),
        "velocity": ("volume", 1, 4),
    }

    def __init__(self, stats: StandardizationStats):
        self.stats = stats
        self._mean = {
            "surface": np.asarray(stats.surface_mean, dtype=np.float64),
            "volume": np.asarray(stats.volume_mean, dtype=np.float64),
        }
        self._std = {
            "surface": np.asarray(stats.surface_std, dtype=np.float64),
            "volume": np.asarray(stats.volume_std, dtype=np.float64),
        }

    @classmethod
    def fit(cls, samples: Iterable[FieldSample]) -> "FieldMapper":
        """
        由训练集流场样本计算逐通道均值/标准差（按点加权）

        Raises:
            InvalidArgumentError: 没有任何样本点
        """
        sums = {b: np.zeros(4) for b in ("surface", "volume")}
        squares = {b: np.zeros(4) for b in ("surface", "volume")}
        counts = {b: 0 for b in ("surface", "volume")}
        n_samples = 0
        for sample in samples:
            n_samples += 1
            for branch, channels in (("surface", sample.surface_channels()), ("volume", sample.volume_channels())):
                sums[branch] += channels.sum(axis=0)
                squares[branch] += (channels * channels).sum(axis=0)
                counts[branch] += channels.shape[0]
        if counts["surface"] == 0 or counts["volume"] == 0:
            raise InvalidArgumentError("计算标准化统计量需要至少一个非空样本")

        moments = {}
        for branch in ("surface", "volume"):
            mean = sums[branch] / counts[branch]
            var = np.maximum(squares[branch] / counts[branch] - mean * mean, 0.0)
            moments[branch] = (mean, np.maximum(np.sqrt(var), _STD_FLOOR))
        stats = StandardizationStats(
            surface_mean=moments["surface"][0].tolist(),
            surface_std=moments["surface"][1].tolist(),
            volume_mean=moments["volume"][0].tolist(),
            volume_std=moments["volume"][1].tolist(),
        )
        logger.info(f"标准化统计量已计算: {n_samples} 个样本, 表面点 {counts['surface']}, 体点 {counts['volume']}")
        return cls(stats)

    def _check(self, branch: str, channels: np.ndarray) -> np.ndarray:
        if branch not in self._mean:
            raise InvalidArgumentError(f"未知分支: {branch}")
        arr = np.asarray(channels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[1] != 4:
            raise ShapeError(f"{branch} 通道矩阵应为 (n, 4)，实际 {arr.shape}")
        return arr

    def normalize(self, branch: str, channels: np.ndarray) -> np.ndarray:
        arr = self._check(branch, channels)
        return (arr - self._mean[branch]) / self._std[branch]

    def denormalize(self, branch: str, channels: np.ndarray) -> np.ndarray:
        arr = self._check(branch, channels)
        return arr * self._std[branch] + self._mean[branch]

    @staticmethod
    def to_channels(sample: FieldSample) -> Dict[str, np.ndarray]:
        return {"surface": sample.surface_channels(), "volume": sample.volume_channels()}

    @staticmethod
    def from_channels(surface: np.ndarray, volume: np.ndarray) -> FieldSample:
        return FieldSample.from_channels(surface, volume)

    @classmethod
    def variable(cls, name: str, surface: np.ndarray, volume: np.ndarray) -> np.ndarray:
        """从通道矩阵中取出单个物理变量（标量变量返回一维）"""
        if name not in cls.VARIABLE_COLUMNS:
            raise InvalidArgumentError(f"未知变量: {name}")
        branch, lo, hi = cls.VARIABLE_COLUMNS[name]
        source = surface if branch == "surface" else volume
        out = source[:, lo:hi]
        return out[:, 0] if hi - lo == 1 else out


__all__ = ["FieldMapper"]
