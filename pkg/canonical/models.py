"""
Canonical数据模型定义
统一的领域模型：几何点集、流场样本、来流条件、模型与训练配置、数据集清单、误差与力报告
"""

import math
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

# 攻角范围 [0°, 4°]
ALPHA_MAX_RAD = math.radians(4.0)
_ALPHA_TOL = 1e-12
# 法向单位长度容差（法向以 float64 落盘，读回后仍满足）
_NORMAL_TOL = 1e-9

# 机翼宏参数范围
WING_ASPECT_RATIO_RANGE = (4.0, 12.0)
WING_SWEEP_RANGE_DEG = (0.0, 40.0)
WING_TWIST_RANGE_DEG = (-4.0, 6.0)

SURFACE_VARIABLES = ("surface_pressure", "wall_shear")
VOLUME_VARIABLES = ("volume_pressure", "velocity")


class ShapeKind(str, Enum):
    """几何类型枚举"""
    SPHERE = "sphere"
    ELLIPSOID = "ellipsoid"
    WING = "wing"


class Tessellation(str, Enum):
    """表面离散方式"""
    ISOTROPIC = "isotropic"
    ANISOTROPIC = "anisotropic"


class VolumeMode(str, Enum):
    """体点采样方式"""
    REGULAR_GRID = "regular-grid"
    RANDOM = "random"


class AreaMode(str, Enum):
    """面元面积计算方式：生成器解析密度 / 核密度估计"""
    GENERATOR = "generator"
    KERNEL = "kernel"


class TrainMode(str, Enum):
    """训练模式"""
    SOLUTION_MESH = "solution-mesh"
    CAD_INPUT = "cad-input"


class InputMesh(str, Enum):
    """评估时的输入网格"""
    SOLUTION = "solution"
    CAD = "cad"


class FieldModel(str, Enum):
    """真值流场族"""
    FAMILY = "family"
    POTENTIAL = "potential"


class SplitTag(str, Enum):
    """数据划分标签"""
    TRAIN = "train"
    VAL = "val"
    TEST = "test"


def _as_array(value: Any, ndim: int, width: Optional[int], name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if width is not None and arr.size == 0:
        arr = arr.reshape(0, width)
    if arr.ndim != ndim or (width is not None and arr.shape[1] != width):
        expected = f"(n, {width})" if width is not None else "(n,)"
        raise ValueError(f"{name} 形状应为 {expected}，实际为 {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} 含有非有限值")
    return arr


class ShapeParams(BaseModel):
    """
    几何参数统一模型

    球体使用 radius；椭球使用 semi_axes (x, y, z)；
    机翼使用展弦比、后掠角、根部扭转角等宏参数（放样薄翼型）
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: ShapeKind = Field(..., description="几何类型: sphere/ellipsoid/wing")
    radius: Optional[float] = Field(None, description="球半径 [m]")
    semi_axes: Optional[Tuple[float, float, float]] = Field(None, description="椭球半轴 (a, b, c) [m]")
    aspect_ratio: Optional[float] = Field(None, description="机翼展弦比")
    sweep_deg: Optional[float] = Field(None, description="四分之一弦线后掠角 [deg]")
    root_twist_deg: Optional[float] = Field(None, description="根部扭转角 [deg]，向翼尖线性减为 0")
    taper_ratio: float = Field(default=0.4, description="梢根比")
    thickness_ratio: float = Field(default=0.12, description="相对厚度")
    root_chord: float = Field(default=1.0, description="根弦长 [m]")

    @model_validator(mode="after")
    def validate_kind_fields(self):
        """按几何类型校验必填字段与取值范围"""
        for name in ("taper_ratio", "thickness_ratio", "root_chord"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} 必须为正数")
        if self.kind == ShapeKind.SPHERE:
            if self.radius is None or self.radius <= 0:
                raise ValueError("球体 radius 必须为正数")
        elif self.kind == ShapeKind.ELLIPSOID:
            if self.semi_axes is None or min(self.semi_axes) <= 0:
                raise ValueError("椭球 semi_axes 必须全部为正数")
        else:
            if self.aspect_ratio is None or self.sweep_deg is None or self.root_twist_deg is None:
                raise ValueError("机翼需要 aspect_ratio/sweep_deg/root_twist_deg")
            lo, hi = WING_ASPECT_RATIO_RANGE
            if not lo <= self.aspect_ratio <= hi:
                raise ValueError(f"aspect_ratio 超出范围 [{lo}, {hi}]")
            lo, hi = WING_SWEEP_RANGE_DEG
            if not lo <= self.sweep_deg <= hi:
                raise ValueError(f"sweep_deg 超出范围 [{lo}, {hi}]")
            lo, hi = WING_TWIST_RANGE_DEG
            if not lo <= self.root_twist_deg <= hi:
                raise ValueError(f"root_twist_deg 超出范围 [{lo}, {hi}]")
            if self.taper_ratio > 1.0:
                raise ValueError("taper_ratio 不能大于 1")
        return self


class FlowConditions(BaseModel):
    """来流条件：密度、速度、来流压力、攻角、参考面积与工况标签"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    density: float = Field(default=1.225, gt=0, description="密度 ρ [kg/m³]")
    speed: float = Field(default=30.0, gt=0, description="来流速度 v [m/s]")
    p_inf: float = Field(default=101325.0, description="来流压力 p_∞ [Pa]")
    alpha: float = Field(default=0.0, description="攻角 α [rad]")
    reference_area: float = Field(default=1.0, gt=0, description="参考面积 A_ref [m²]")
    regime: str = Field(default="0.5", description="工况标签（马赫数类比 0.5 / 0.85）")

    @field_validator("alpha")
    @classmethod
    def validate_alpha(cls, v):
        """攻角须在 [0°, 4°] 内"""
        if not math.isfinite(v) or v < -_ALPHA_TOL or v > ALPHA_MAX_RAD + _ALPHA_TOL:
            raise ValueError(f"攻角 {v} rad 超出 [0°, 4°]")
        return v

    @property
    def dynamic_pressure(self) -> float:
        """动压 ½ρv²"""
        return 0.5 * self.density * self.speed ** 2


class SurfacePointSet(BaseModel):
    """
    表面点集

    保存积分所需的位置、外法向和面元面积；uv 为可选的参数坐标
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    positions: np.ndarray = Field(..., description="位置 (n, 3) [m]")
    normals: np.ndarray = Field(..., description="单位外法向 (n, 3)")
    areas: np.ndarray = Field(..., description="面元面积 (n,) [m²]")
    uv: Optional[np.ndarray] = Field(None, description="参数坐标 (n, 2)")

    @field_validator("positions", "normals", mode="before")
    @classmethod
    def validate_vectors(cls, v, info):
        return _as_array(v, 2, 3, info.field_name)

    @field_validator("areas", mode="before")
    @classmethod
    def validate_areas(cls, v):
        arr = _as_array(v, 1, None, "areas")
        if arr.size and arr.min() <= 0:
            raise ValueError("面元面积必须严格为正")
        return arr

    @field_validator("uv", mode="before")
    @classmethod
    def validate_uv(cls, v):
        if v is None:
            return None
        return _as_array(v, 2, 2, "uv")

    @model_validator(mode="after")
    def validate_alignment(self):
        n = self.positions.shape[0]
        if self.normals.shape[0] != n or self.areas.shape[0] != n:
            raise ValueError("positions/normals/areas 长度不一致")
        if self.uv is not None and self.uv.shape[0] != n:
            raise ValueError("uv 长度与点数不一致")
        norms = np.linalg.norm(self.normals, axis=1)
        if n and np.abs(norms - 1.0).max() > _NORMAL_TOL:
            raise ValueError("法向量必须为单位向量")
        return self

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())

    def subset(self, index: np.ndarray) -> "SurfacePointSet":
        """按索引取子集（允许重复索引）"""
        return SurfacePointSet(
            positions=self.positions[index],
            normals=self.normals[index],
            areas=self.areas[index],
            uv=None if self.uv is None else self.uv[index],
        )


class VolumePointSet(BaseModel):
    """体点集：位于物面外、包围盒内的采样点"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    positions: np.ndarray = Field(..., description="位置 (n, 3) [m]")
    bbox: np.ndarray = Field(..., description="包围盒 [[xmin,ymin,zmin],[xmax,ymax,zmax]]")

    @field_validator("positions", mode="before")
    @classmethod
    def validate_positions(cls, v):
        return _as_array(v, 2, 3, "positions")

    @field_validator("bbox", mode="before")
    @classmethod
    def validate_bbox(cls, v):
        arr = np.asarray(v, dtype=np.float64)
        if arr.shape != (2, 3) or not np.all(arr[1] > arr[0]):
            raise ValueError("bbox 应为 (2, 3) 且上界大于下界")
        return arr

    @model_validator(mode="after")
    def validate_inside_bbox(self):
        if self.positions.size:
            lo, hi = self.bbox
            if (self.positions < lo).any() or (self.positions > hi).any():
                raise ValueError("体点超出包围盒")
        return self

    @property
    def count(self) -> int:
        return int(self.positions.shape[0])

    def subset(self, index: np.ndarray) -> "VolumePointSet":
        return VolumePointSet(positions=self.positions[index], bbox=self.bbox)


class FieldSample(BaseModel):
    """
    流场样本

    表面：压力 p_s（相对 p_∞）与壁面剪切 τ_w；体：压力 p_v 与速度 u
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    surface_pressure: np.ndarray = Field(..., description="表面压力 (n,) [Pa]")
    wall_shear: np.ndarray = Field(..., description="壁面剪切 (n, 3) [Pa]")
    volume_pressure: np.ndarray = Field(..., description="体压力 (m,) [Pa]")
    velocity: np.ndarray = Field(..., description="速度 (m, 3) [m/s]")

    @field_validator("surface_pressure", "volume_pressure", mode="before")
    @classmethod
    def validate_scalars(cls, v, info):
        return _as_array(v, 1, None, info.field_name)

    @field_validator("wall_shear", "velocity", mode="before")
    @classmethod
    def validate_vectors(cls, v, info):
        return _as_array(v, 2, 3, info.field_name)

    @model_validator(mode="after")
    def validate_alignment(self):
        if self.surface_pressure.shape[0] != self.wall_shear.shape[0]:
            raise ValueError("表面变量长度不一致")
        if self.volume_pressure.shape[0] != self.velocity.shape[0]:
            raise ValueError("体变量长度不一致")
        return self

    def surface_channels(self) -> np.ndarray:
        """表面通道矩阵 (n, 4)：[p_s, τx, τy, τz]"""
        return np.concatenate([self.surface_pressure[:, None], self.wall_shear], axis=1)

    def volume_channels(self) -> np.ndarray:
        """体通道矩阵 (m, 4)：[p_v, ux, uy, uz]"""
        return np.concatenate([self.volume_pressure[:, None], self.velocity], axis=1)

    @classmethod
    def from_channels(cls, surface: np.ndarray, volume: np.ndarray) -> "FieldSample":
        return cls(
            surface_pressure=surface[:, 0],
            wall_shear=surface[:, 1:4],
            volume_pressure=volume[:, 0],
            velocity=volume[:, 1:4],
        )


class FlowDirections(BaseModel):
    """来流、阻力、升力方向单位向量"""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    free_stream: np.ndarray = Field(..., description="来流方向 u_∞")
    drag: np.ndarray = Field(..., description="阻力方向 e_drag")
    lift: np.ndarray = Field(..., description="升力方向 e_lift")


class ForceReport(BaseModel):
    """单个算例的气动力与系数"""

    force: Tuple[float, float, float] = Field(..., description="合力 F [N]")
    drag: float = Field(..., description="阻力 F_drag [N]")
    lift: float = Field(..., description="升力 F_lift [N]")
    cd: float = Field(..., description="阻力系数 C_d")
    cl: float = Field(..., description="升力系数 C_l")


class ErrorReport(BaseModel):
    """评估误差报告"""

    split: str = Field(..., description="评估的数据划分")
    input_mesh: InputMesh = Field(default=InputMesh.SOLUTION, description="输入网格类型")
    n_cases: int = Field(..., ge=0, description="算例数")
    point_counts: Dict[str, int] = Field(default_factory=dict, description="各变量参与评估的点数")
    mae: Dict[str, float] = Field(default_factory=dict, description="各变量 MAE（物理量纲）")
    rel_l1: Dict[str, float] = Field(default_factory=dict, description="各变量相对 L1 误差")
    rel_l2: Dict[str, float] = Field(default_factory=dict, description="各变量相对 L2 误差")
    r2: Dict[str, float] = Field(default_factory=dict, description="各气动力的 R²")
    force_errors: Dict[str, Dict[str, float]] = Field(default_factory=dict, description="气动力相对误差的中位数/最大值")
    ranking: Dict[str, str] = Field(default_factory=dict, description="best/median/worst 算例")

    @field_validator("rel_l1", "rel_l2")
    @classmethod
    def validate_non_negative(cls, v):
        for key, value in v.items():
            if value < 0:
                raise ValueError(f"相对误差 {key} 不能为负")
        return v

    @field_validator("r2")
    @classmethod
    def validate_r2(cls, v):
        for key, value in v.items():
            if value > 1.0:
                raise ValueError(f"R² {key} 不能大于 1")
        return v


class ModelConfig(BaseModel):
    """
    AB-UPT 模型配置

    参考配置：depth=12, dim=192, heads=3, mlp_ratio=4；桌面配置：depth=4, dim=32, heads=2
    """

    model_config = ConfigDict(extra="forbid")

    depth: int = Field(default=4, ge=2, description="每个分支的 block 数")
    dim: int = Field(default=32, ge=1, description="隐藏维度")
    heads: int = Field(default=2, ge=1, description="注意力头数")
    mlp_ratio: int = Field(default=4, ge=1, description="MLP 扩展倍数")
    n_surface_anchors: int = Field(default=256, ge=1, description="表面锚点数")
    n_volume_anchors: int = Field(default=256, ge=1, description="体锚点数")
    cond_dim: Optional[int] = Field(default=None, ge=1, description="条件嵌入宽度（缺省等于 dim）")
    share_branch_weights: bool = Field(default=False, description="两分支是否共享 block 权重")
    use_conditioning: bool = Field(default=True, description="是否启用攻角 DiT 条件化")
    surface_channels: int = Field(default=4, description="表面输出通道 (p_s, τ_w)")
    volume_channels: int = Field(default=4, description="体输出通道 (p_v, u)")
    n_frequencies: int = Field(default=16, ge=1, description="位置编码每轴频率数")
    n_cond_frequencies: int = Field(default=16, ge=1, description="攻角正弦特征频率数")
    layernorm_eps: float = Field(default=1e-6, gt=0, description="LayerNorm ε")
    init_std: float = Field(default=0.02, gt=0, description="线性层初始化标准差")
    seed: int = Field(default=0, description="参数初始化种子")

    @model_validator(mode="after")
    def validate_structure(self):
        if self.dim % self.heads != 0:
            raise ValueError(f"dim={self.dim} 不能被 heads={self.heads} 整除")
        if self.depth % 2 != 0:
            raise ValueError("depth 必须为偶数（自注意力/交叉注意力成对出现）")
        return self

    @property
    def condition_width(self) -> int:
        return self.cond_dim or self.dim

    @classmethod
    def reference(cls) -> "ModelConfig":
        """参考规模配置"""
        return cls(depth=12, dim=192, heads=3, mlp_ratio=4, n_surface_anchors=16384, n_volume_anchors=16384)

    @classmethod
    def desk(cls) -> "ModelConfig":
        """桌面规模配置"""
        return cls(depth=4, dim=32, heads=2, mlp_ratio=4)


class TrainConfig(BaseModel):
    """
    训练配置

    参考值：peak_lr=5e-5, final_lr=1e-6, warmup_fraction=0.05, ema_rate=1e-4, 体数据子采样 10%
    桌面缺省值放大学习率与 EMA 速率以便在数千步内收敛
    """

    model_config = ConfigDict(extra="forbid")

    total_updates: int = Field(default=2000, ge=1, description="总更新步数")
    peak_lr: float = Field(default=1e-3, gt=0, description="峰值学习率")
    final_lr: float = Field(default=1e-6, ge=0, description="余弦退火终值")
    warmup_fraction: float = Field(default=0.05, description="线性预热比例")
    ema_rate: float = Field(default=1e-2, description="EMA 更新速率")
    n_surface_anchors: int = Field(default=256, ge=1, description="每步表面锚点数")
    n_volume_anchors: int = Field(default=256, ge=1, description="每步体锚点数")
    n_surface_queries: int = Field(default=256, ge=1, description="cad-input 模式每步表面查询点数")
    n_volume_queries: int = Field(default=256, ge=1, description="cad-input 模式每步体查询点数")
    volume_subsample_fraction: float = Field(default=0.10, gt=0, le=1, description="体数据子采样比例")
    seed: int = Field(default=0, description="随机种子")
    mode: TrainMode = Field(default=TrainMode.SOLUTION_MESH, description="训练模式")
    lion_beta1: float = Field(default=0.9, ge=0, lt=1, description="Lion β1")
    lion_beta2: float = Field(default=0.99, ge=0, lt=1, description="Lion β2")
    weight_decay: float = Field(default=0.0, ge=0, description="权重衰减")
    eval_every_epochs: int = Field(default=10, ge=1, description="每 E 个 epoch 记录验证集 MAE")
    checkpoint_every: int = Field(default=500, ge=1, description="检查点间隔（步）")
    log_every: int = Field(default=1, ge=1, description="损失日志间隔（步）")
    max_train_cases: Optional[int] = Field(default=None, ge=1, description="训练集子集大小（数据效率实验）")

    @field_validator("warmup_fraction")
    @classmethod
    def validate_warmup(cls, v):
        if not 0.0 < v < 1.0:
            raise ValueError("warmup_fraction 必须在 (0, 1) 内")
        return v

    @field_validator("ema_rate")
    @classmethod
    def validate_ema_rate(cls, v):
        if not 0.0 < v <= 1.0:
            raise ValueError("ema_rate 必须在 (0, 1] 内")
        return v

    @model_validator(mode="after")
    def validate_lr(self):
        if self.final_lr > self.peak_lr:
            raise ValueError("final_lr 不能大于 peak_lr")
        return self

    @property
    def warmup_steps(self) -> int:
        return max(1, math.ceil(self.warmup_fraction * self.total_updates))

    @classmethod
    def reference(cls) -> "TrainConfig":
        """参考训练配方"""
        return cls(
            total_updates=400_000,
            peak_lr=5e-5,
            final_lr=1e-6,
            warmup_fraction=0.05,
            ema_rate=1e-4,
            n_surface_anchors=16384,
            n_volume_anchors=16384,
        )


class StandardizationStats(BaseModel):
    """逐通道标准化统计量（仅由训练集计算）"""

    surface_mean: List[float] = Field(..., description="表面通道均值 [p_s, τx, τy, τz]")
    surface_std: List[float] = Field(..., description="表面通道标准差")
    volume_mean: List[float] = Field(..., description="体通道均值 [p_v, ux, uy, uz]")
    volume_std: List[float] = Field(..., description="体通道标准差")

    @field_validator("surface_std", "volume_std")
    @classmethod
    def validate_std(cls, v):
        if any(s <= 0 for s in v):
            raise ValueError("标准差必须为正")
        return v


class CaseEntry(BaseModel):
    """清单中的单个算例条目"""

    case_id: str = Field(..., description="算例 ID")
    split: SplitTag = Field(..., description="划分标签")
    offset: int = Field(..., ge=0, description="相对数据区起点的字节偏移")
    length: int = Field(..., ge=0, description="字节长度")
    shape: ShapeParams = Field(..., description="几何参数")
    flow: FlowConditions = Field(..., description="来流条件")
    arrays: List[str] = Field(default_factory=list, description="数组名列表")


class DatasetManifest(BaseModel):
    """ABPT 数据集清单"""

    format_version: int = Field(..., ge=1, description="格式版本")
    regime: str = Field(..., description="工况标签")
    cases: List[CaseEntry] = Field(default_factory=list, description="算例列表")
    statistics: Optional[StandardizationStats] = Field(None, description="训练集标准化统计量")
    generator: Dict[str, Any] = Field(default_factory=dict, description="生成器种子与参数")
    data_size: int = Field(default=0, ge=0, description="数据区总字节数")

    @field_validator("cases")
    @classmethod
    def validate_offsets(cls, v):
        offsets = [c.offset for c in v]
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValueError("算例偏移必须严格递增")
        ids = [c.case_id for c in v]
        if len(set(ids)) != len(ids):
            raise ValueError("算例 ID 重复")
        return v

    def entry(self, case_id: str) -> Optional[CaseEntry]:
        for c in self.cases:
            if c.case_id == case_id:
                return c
        return None

    def ids_for(self, split: SplitTag) -> List[str]:
        return [c.case_id for c in self.cases if c.split == split]


class CaseRecord(BaseModel):
    """
    单个算例记录

    solution_*：解自适应（各向异性）表面 + 随机体点；cad_*：各向同性表面 + 规则网格体点
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    case_id: str = Field(..., description="算例 ID")
    shape: ShapeParams = Field(..., description="几何参数")
    flow: FlowConditions = Field(..., description="来流条件")
    solution_surface: SurfacePointSet = Field(..., description="解自适应表面点集")
    solution_volume: VolumePointSet = Field(..., description="随机体点集")
    solution_fields: FieldSample = Field(..., description="与 solution 点集对齐的流场")
    cad_surface: SurfacePointSet = Field(..., description="各向同性表面点集")
    cad_volume: VolumePointSet = Field(..., description="规则网格体点集")
    cad_fields: FieldSample = Field(..., description="与 cad 点集对齐的流场")
    split: SplitTag = Field(default=SplitTag.TRAIN, description="划分标签")

    @model_validator(mode="after")
    def validate_alignment(self):
        pairs = (
            (self.solution_surface, self.solution_volume, self.solution_fields, "solution"),
            (self.cad_surface, self.cad_volume, self.cad_fields, "cad"),
        )
        for surface, volume, fields, name in pairs:
            if fields.surface_pressure.shape[0] != surface.count:
                raise ValueError(f"{name} 表面流场与点集未对齐")
            if fields.volume_pressure.shape[0] != volume.count:
                raise ValueError(f"{name} 体流场与点集未对齐")
        return self


class ErrorSpec(BaseModel):
    error_code: str = Field(..., description="统一错误编码")
    error_class: str = Field(..., description="错误分类")
    severity: str = Field(..., description="错误等级")
    retryable: bool = Field(default=False, description="是否可重试")
    message: str = Field(default="", description="错误信息")
    case_id: Optional[str] = Field(default=None, description="算例 ID")


# 导出所有模型类
__all__ = [
    "ALPHA_MAX_RAD",
    "WING_ASPECT_RATIO_RANGE",
    "WING_SWEEP_RANGE_DEG",
    "WING_TWIST_RANGE_DEG",
    "SURFACE_VARIABLES",
    "VOLUME_VARIABLES",
    "ShapeKind",
    "Tessellation",
    "VolumeMode",
    "AreaMode",
    "TrainMode",
    "InputMesh",
    "FieldModel",
    "SplitTag",
    "ShapeParams",
    "FlowConditions",
    "SurfacePointSet",
    "VolumePointSet",
    "FieldSample",
    "FlowDirections",
    "ForceReport",
    "ErrorReport",
    "ModelConfig",
    "TrainConfig",
    "StandardizationStats",
    "CaseEntry",
    "DatasetManifest",
    "CaseRecord",
    "ErrorSpec",
]
