"""
按误差挑选最好/中位/最差算例
"""

from dataclasses import dataclass
from typing import Dict, List, Mapping, Tuple

from canonical.errors import InvalidArgumentError


@dataclass(frozen=True)
class CaseRanking:
    best: str
    median: str
    worst: str
    ordered: Tuple[str, ...]

    def as_dict(self) -> Dict[str, str]:
        return {"best": self.best, "median": self.median, "worst": self.worst}


def rank_cases(errors: Mapping[str, float]) -> CaseRanking:
    """
    按 (误差, 算例 ID) 升序排序；中位数取下标 ⌊(k−1)/2⌋

    Raises:
        InvalidArgumentError: 误差表为空
    """
    if not errors:
        raise InvalidArgumentError("没有可排序的算例")
    ordered: List[str] = [cid for cid, _ in sorted(errors.items(), key=lambda kv: (kv[1], kv[0]))]
    k = len(ordered)
    return CaseRanking(
        best=ordered[0],
        median=ordered[(k - 1) // 2],
        worst=ordered[-1],
        ordered=tuple(ordered),
    )


__all__ = ["CaseRanking", "rank_cases"]
