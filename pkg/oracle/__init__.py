"""
真值流场模块
球绕流势流解析解与任意几何的参数化流场族
"""

from canonical.errors import InvalidArgumentError
from canonical.models import FieldModel, FieldSample, FlowConditions, ShapeKind, ShapeParams, SurfacePointSet, VolumePointSet

from .family import REGIME_CONSTANTS, family_fields, regime_constants
from .potential_flow import potential_flow_sphere

__version__ = "1.0.0"


def evaluate_fields(
    field_model: FieldModel,
    params: ShapeParams,
    cond: FlowConditions,
    surface: SurfacePointSet,
    volume: VolumePointSet,
) -> FieldSample:
    """按真值场类型分派：potential 仅支持球体，family 支持任意几何"""
    if FieldModel(field_model) == FieldModel.POTENTIAL:
        if params.kind != ShapeKind.SPHERE:
            raise InvalidArgumentError("potential 真值场仅支持球体数据集")
        return potential_flow_sphere(surface, volume, cond, params=params)
    return family_fields(params, cond, surface, volume)


__all__ = [
    "REGIME_CONSTANTS",
    "regime_constants",
    "family_fields",
    "potential_flow_sphere",
    "evaluate_fields",
]
