"""
后处理：气动力积分、误差指标、剖面切片、排序、表格与绘图
"""

from .forces import flow_directions, force_error_summary, integrate_forces
from .metrics import ErrorAccumulator, affine_fit, mean_absolute_error, r2_score, relative_errors
from .profile import PressureProfile, ProfileCurve, VelocitySlice, pressure_profile, velocity_slice
from .ranking import CaseRanking, rank_cases

__all__ = [
    "flow_directions",
    "integrate_forces",
    "force_error_summary",
    "ErrorAccumulator",
    "affine_fit",
    "mean_absolute_error",
    "r2_score",
    "relative_errors",
    "PressureProfile",
    "ProfileCurve",
    "VelocitySlice",
    "pressure_profile",
    "velocity_slice",
    "CaseRanking",
    "rank_cases",
]
