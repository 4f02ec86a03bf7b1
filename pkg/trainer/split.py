"""
数据集划分 80/10/10
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np

from canonical.errors import InvalidArgumentError
from canonical.models import SplitTag

MIN_CASES = 10
DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


@dataclass
class DatasetSplit:
    train: List[str] = field(default_factory=list)
    val: List[str] = field(default_factory=list)
    test: List[str] = field(default_factory=list)

    def tags(self) -> Dict[str, SplitTag]:
        """算例 ID → 划分标签"""
        out = {cid: SplitTag.TRAIN for cid in self.train}
        out.update({cid: SplitTag.VAL for cid in self.val})
        out.update({cid: SplitTag.TEST for cid in self.test})
        return out


def split_dataset(
    case_ids: Sequence[str],
    fractions: Tuple[float, float, float] = DEFAULT_FRACTIONS,
    seed: int = 0,
) -> DatasetSplit:
    """
    按种子随机划分；train = ⌊f_train·n⌋，val = ⌊f_val·n⌋，其余为 test

    Raises:
        InvalidArgumentError: 算例少于 10 个、ID 重复或比例非法
    """
    ids = list(case_ids)
    n = len(ids)
    if n < MIN_CASES:
        raise InvalidArgumentError(f"划分至少需要 {MIN_CASES} 个算例，实际 {n}")
    if len(set(ids)) != n:
        raise InvalidArgumentError("算例 ID 重复")
    if len(fractions) != 3 or min(fractions) <= 0 or abs(sum(fractions) - 1.0) > 1e-9:
        raise InvalidArgumentError(f"划分比例非法: {fractions}")

    order = np.random.default_rng(seed).permutation(n)
    n_train = math.floor(fractions[0] * n + 1e-9)
    n_val = math.floor(fractions[1] * n + 1e-9)
    shuffled = [ids[i] for i in order]
    return DatasetSplit(
        train=sorted(shuffled[:n_train]),
        val=sorted(shuffled[n_train:n_train + n_val]),
        test=sorted(shuffled[n_train + n_val:]),
    )


__all__ = ["DatasetSplit", "split_dataset", "MIN_CASES", "DEFAULT_FRACTIONS"]
