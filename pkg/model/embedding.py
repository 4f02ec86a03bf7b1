"""
位置编码与攻角条件特征

位置：包围盒归一化到 [0,1]³，每轴频率 ω_k = π·2^(k/3)，k = 0..F−1，取 sin/cos，共 6F 维。
攻角：t = α/α_max·1000，DiT 时间步正弦特征（cos, sin），频率 exp(−ln(10⁴)·k/F)。
"""

import math
from dataclasses import dataclass

import numpy as np

from canonical.errors import ShapeError
from canonical.models import ALPHA_MAX_RAD
from tensor.tensor import get_default_dtype

_CONDITION_SCALE = 1000.0
_MAX_PERIOD = 10000.0


@dataclass(frozen=True)
class PositionEmbedding:
    """逐轴正弦位置特征；由位置与包围盒确定"""

    n_frequencies: int
    bounds: np.ndarray

    @property
    def frequencies(self) -> np.ndarray:
        return math.pi * 2.0 ** (np.arange(self.n_frequencies) / 3.0)

    @property
    def width(self) -> int:
        return 6 * self.n_frequencies

    def normalize(self, positions: np.ndarray) -> np.ndarray:
        lo, hi = np.asarray(self.bounds, dtype=np.float64)
        return (positions - lo) / (hi - lo)

    def features(self, positions: np.ndarray) -> np.ndarray:
        """(n, 3) → (n, 6F)：[sin(ω p_x..), sin(ω p_y..), sin(ω p_z..), cos(...)]"""
        positions = np.asarray(positions, dtype=np.float64)
        if positions.ndim != 2 or positions.shape[1] != 3:
            raise ShapeError(f"位置应为 (n, 3)，实际 {positions.shape}")
        args = (self.normalize(positions)[:, :, None] * self.frequencies[None, None, :]).reshape(len(positions), -1)
        return np.concatenate([np.sin(args), np.cos(args)], axis=1).astype(get_default_dtype())


def condition_features(alpha: float, n_frequencies: int) -> np.ndarray:
    """攻角正弦特征 (1, 2F)"""
    t = alpha / ALPHA_MAX_RAD * _CONDITION_SCALE
    freqs = np.exp(-math.log(_MAX_PERIOD) * np.arange(n_frequencies) / n_frequencies)
    args = t * freqs
    return np.concatenate([np.cos(args), np.sin(args)])[None, :].astype(get_default_dtype())


__all__ = ["PositionEmbedding", "condition_features"]
