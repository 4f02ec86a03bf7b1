"""
合成算例生成器
特征：拉丁超立方几何/攻角设计，双离散（解自适应 + 各向同性），双体采样（随机 + 规则网格）
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np
from loguru import logger
from scipy.stats import qmc

from canonical.errors import InvalidArgumentError
from canonical.models import (
    CaseRecord,
    FieldSample,
    FlowConditions,
    ShapeKind,
    ShapeParams,
    SurfacePointSet,
    Tessellation,
    VolumeMode,
    VolumePointSet,
)
from config.run_config import GenConfig
from geometry import build_shape, make_surface, make_volume_points
from oracle import evaluate_fields

# 设计维度：几何类型、三个几何参数、攻角
_DESIGN_DIM = 5


def dataset_filename(regime: str) -> str:
    return f"dataset_M{regime}.abpt"


def _f32(arr: np.ndarray) -> np.ndarray:
    """按落盘精度取整（f64 → f32 → f64），保证读写逐位一致"""
    return np.asarray(arr, dtype=np.float64).astype(np.float32).astype(np.float64)


def _lerp(bounds, u: float) -> float:
    lo, hi = bounds
    return float(lo + (hi - lo) * u)


@dataclass(frozen=True)
class CaseDesign:
    """单个算例的设计点"""

    index: int
    case_id: str
    params: ShapeParams
    alpha: float


class CaseGenerator:
    """合成数据集生成器"""

    def __init__(self, cfg: GenConfig):
        self.cfg = cfg

    def _shape_params(self, kind: ShapeKind, u: np.ndarray) -> ShapeParams:
        cfg = self.cfg
        if kind == ShapeKind.SPHERE:
            return ShapeParams(kind=kind, radius=_lerp(cfg.radius_range, u[0]))
        if kind == ShapeKind.ELLIPSOID:
            axes = tuple(_lerp(cfg.semi_axis_range, x) for x in u[:3])
            return ShapeParams(kind=kind, semi_axes=axes)
        return ShapeParams(
            kind=kind,
            aspect_ratio=_lerp(cfg.aspect_ratio_range, u[0]),
            sweep_deg=_lerp(cfg.sweep_range_deg, u[1]),
            root_twist_deg=_lerp(cfg.twist_range_deg, u[2]),
        )

    def design(self) -> List[CaseDesign]:
        """
        拉丁超立方设计

        Raises:
            InvalidArgumentError: n_cases 为 0
        """
        n = self.cfg.n_cases
        if n <= 0:
            raise InvalidArgumentError("算例数 N 必须为正")
        sample = qmc.LatinHypercube(d=_DESIGN_DIM, seed=self.cfg.seed).random(n)
        shapes = list(self.cfg.shapes)
        designs = []
        for i, row in enumerate(sample):
            kind = ShapeKind(shapes[min(int(row[0] * len(shapes)), len(shapes) - 1)])
            designs.append(
                CaseDesign(
                    index=i,
                    case_id=f"case_{i:04d}",
                    params=self._shape_params(kind, row[1:4]),
                    alpha=math.radians(_lerp(self.cfg.alpha_range_deg, row[4])),
                )
            )
        logger.info(f"生成设计点 {n} 个: " + ", ".join(f"{k.value}={sum(d.params.kind == k for d in designs)}" for k in shapes))
        return designs

    def bbox(self, params: ShapeParams) -> np.ndarray:
        body = build_shape(params).bounds()
        pad = self.cfg.bbox_margin * float((body[1] - body[0]).max())
        return _f32(np.stack([body[0] - pad, body[1] + pad]))

    def _surface(self, params: ShapeParams, n: int, tessellation: Tessellation, seed: int) -> SurfacePointSet:
        raw = make_surface(
            params,
            n,
            tessellation=tessellation,
            seed=seed,
            area_mode=self.cfg.area_mode,
            concentration=self.cfg.concentration,
        )
        normals = raw.normals / np.linalg.norm(raw.normals, axis=1, keepdims=True)
        return SurfacePointSet(
            positions=_f32(raw.positions),
            normals=normals,
            areas=_f32(raw.areas),
            uv=None if raw.uv is None else _f32(raw.uv),
        )

    def _volume(self, params: ShapeParams, bbox: np.ndarray, n: int, mode: VolumeMode, seed: int) -> VolumePointSet:
        raw = make_volume_points(params, bbox, n, mode=mode, seed=seed)
        return VolumePointSet(positions=_f32(raw.positions), bbox=bbox)

    def _fields(self, params, cond, surface, volume) -> FieldSample:
        fields = evaluate_fields(self.cfg.field_model, params, cond, surface, volume)
        return FieldSample(
            surface_pressure=_f32(fields.surface_pressure),
            wall_shear=_f32(fields.wall_shear),
            volume_pressure=_f32(fields.volume_pressure),
            velocity=_f32(fields.velocity),
        )

    def build_case(self, design: CaseDesign, regime: str) -> CaseRecord:
        """生成单个算例（划分标签由调用方确定）"""
        cfg = self.cfg
        params = design.params
        seed = int(np.random.SeedSequence([cfg.seed, design.index]).generate_state(1)[0])
        cond = FlowConditions(
            density=cfg.density,
            speed=cfg.speed,
            p_inf=cfg.p_inf,
            alpha=design.alpha,
            reference_area=build_shape(params).reference_area(),
            regime=regime,
        )
        bbox = self.bbox(params)
        solution_surface = self._surface(params, cfg.n_solution_surface, Tessellation.ANISOTROPIC, seed)
        cad_surface = self._surface(params, cfg.n_cad_surface, Tessellation.ISOTROPIC, seed)
        solution_volume = self._volume(params, bbox, cfg.n_solution_volume, VolumeMode.RANDOM, seed)
        cad_volume = self._volume(params, bbox, cfg.n_grid_volume, VolumeMode.REGULAR_GRID, seed)

        case = CaseRecord(
            case_id=design.case_id,
            shape=params,
            flow=cond,
            solution_surface=solution_surface,
            solution_volume=solution_volume,
            solution_fields=self._fields(params, cond, solution_surface, solution_volume),
            cad_surface=cad_surface,
            cad_volume=cad_volume,
            cad_fields=self._fields(params, cond, cad_surface, cad_volume),
        )
        logger.debug(
            f"算例 {design.case_id} 生成完成: {params.kind.value}, α={math.degrees(design.alpha):.3f}°, "
            f"表面 {solution_surface.count}/{cad_surface.count}, 体 {solution_volume.count}/{cad_volume.count}"
        )
        return case

    def generator_info(self, regime: str) -> Dict[str, Any]:
        """写入清单的生成器参数（不含时间戳）"""
        info = self.cfg.model_dump(mode="json")
        info.pop("regimes")
        info["regime"] = regime
        info["design"] = "latin-hypercube"
        return info


__all__ = ["CaseDesign", "CaseGenerator", "dataset_filename"]
