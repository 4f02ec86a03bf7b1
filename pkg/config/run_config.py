"""
运行配置

gen / model / train / eval / bench 五个分区，均为 extra="forbid" 的 pydantic 模型。
配置文件为 canonical JSON；命令行以 section.key=value 形式覆盖（值按 JSON 解析，失败则作为字符串）。
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from canonical.errors import ConfigError
from canonical.models import (
    WING_ASPECT_RATIO_RANGE,
    WING_SWEEP_RANGE_DEG,
    WING_TWIST_RANGE_DEG,
    AreaMode,
    FieldModel,
    InputMesh,
    ModelConfig,
    ShapeKind,
    TrainConfig,
)
from dataio.blobs import atomic_write, canonical_json

CONFIG_SNAPSHOT = "config.json"


class GenConfig(BaseModel):
    """数据集生成配置"""

    model_config = ConfigDict(extra="forbid")

    n_cases: int = Field(default=64, description="算例数")
    seed: int = Field(default=0, description="拉丁超立方与采样种子")
    shapes: List[ShapeKind] = Field(default=[ShapeKind.SPHERE, ShapeKind.ELLIPSOID], description="几何族")
    regimes: List[str] = Field(default=["0.5"], description="工况标签，每个标签单独成文件")
    field_model: FieldModel = Field(default=FieldModel.FAMILY, description="真值流场族")
    n_solution_surface: int = Field(default=2048, ge=16, description="解自适应表面点数")
    n_cad_surface: int = Field(default=1024, ge=16, description="各向同性表面点数")
    n_solution_volume: int = Field(default=4096, ge=1, description="随机体点数")
    n_grid_volume: int = Field(default=1024, ge=1, description="规则网格体点数上限")
    area_mode: AreaMode = Field(default=AreaMode.GENERATOR, description="面元面积计算方式")
    concentration: float = Field(default=0.85, ge=0.0, lt=1.0, description="各向异性采样集中度")
    radius_range: Tuple[float, float] = Field(default=(0.4, 0.6), description="球半径范围 [m]")
    semi_axis_range: Tuple[float, float] = Field(default=(0.25, 0.75), description="椭球半轴范围 [m]")
    aspect_ratio_range: Tuple[float, float] = Field(default=WING_ASPECT_RATIO_RANGE, description="机翼展弦比范围")
    sweep_range_deg: Tuple[float, float] = Field(default=WING_SWEEP_RANGE_DEG, description="后掠角范围 [deg]")
    twist_range_deg: Tuple[float, float] = Field(default=WING_TWIST_RANGE_DEG, description="根部扭转范围 [deg]")
    alpha_range_deg: Tuple[float, float] = Field(default=(0.0, 4.0), description="攻角范围 [deg]")
    bbox_margin: float = Field(default=0.5, gt=0, description="包围盒外扩（物体最大尺寸的倍数）")
    speed: float = Field(default=30.0, gt=0, description="来流速度 [m/s]")
    density: float = Field(default=1.225, gt=0, description="密度 [kg/m³]")
    p_inf: float = Field(default=101325.0, description="来流压力 [Pa]")
    split_fractions: Tuple[float, float, float] = Field(default=(0.8, 0.1, 0.1), description="train/val/test 比例")

    @field_validator("n_cases")
    @classmethod
    def validate_cases(cls, v):
        if v < 0:
            raise ValueError("n_cases 不能为负")
        return v

    @field_validator("shapes", "regimes")
    @classmethod
    def validate_non_empty(cls, v):
        if not v:
            raise ValueError("列表不能为空")
        if len(set(v)) != len(v):
            raise ValueError("列表元素重复")
        return v

    @field_validator(
        "radius_range", "semi_axis_range", "aspect_ratio_range", "sweep_range_deg", "twist_range_deg", "alpha_range_deg"
    )
    @classmethod
    def validate_range(cls, v):
        lo, hi = v
        if lo > hi:
            raise ValueError(f"范围下界 {lo} 大于上界 {hi}")
        return v

    @model_validator(mode="after")
    def validate_bounds(self):
        if self.alpha_range_deg[0] < 0.0 or self.alpha_range_deg[1] > 4.0:
            raise ValueError("攻角范围必须在 [0°, 4°] 内")
        if min(self.radius_range) <= 0 or min(self.semi_axis_range) <= 0:
            raise ValueError("几何尺寸必须为正")
        return self


class EvalConfig(BaseModel):
    """评估、切片与气动力报告配置"""

    model_config = ConfigDict(extra="forbid")

    split: str = Field(default="test", description="评估的数据划分")
    input_mesh: InputMesh = Field(default=InputMesh.SOLUTION, description="锚点来源网格")
    volume_fraction: float = Field(default=0.10, gt=0, le=1, description="评估使用的体点比例")
    seed: int = Field(default=0, description="锚点抽样种子")
    chunk: Optional[int] = Field(default=None, ge=1, description="查询解码分块（缺省取环境配置）")
    rank_variable: str = Field(default="surface_pressure", description="算例排序使用的变量 MAE")
    span_fractions: List[float] = Field(default=[0.15, 0.50, 0.95], description="剖面展向站位")
    slice_band: float = Field(default=0.05, gt=0, description="剖面切片半宽 [m]")
    velocity_span_fraction: float = Field(default=0.5, ge=0, le=1, description="速度切片展向站位")

    @field_validator("split")
    @classmethod
    def validate_split(cls, v):
        if v not in ("train", "val", "test"):
            raise ValueError(f"未知划分: {v}")
        return v

    @field_validator("rank_variable")
    @classmethod
    def validate_rank_variable(cls, v):
        if v not in ("surface_pressure", "wall_shear", "volume_pressure", "velocity"):
            raise ValueError(f"未知变量: {v}")
        return v

    @field_validator("span_fractions")
    @classmethod
    def validate_spans(cls, v):
        if not v or any(not 0.0 <= s <= 1.0 for s in v):
            raise ValueError("span_fractions 必须非空且在 [0, 1] 内")
        return v


class BenchConfig(BaseModel):
    """解码耗时基准配置"""

    model_config = ConfigDict(extra="forbid")

    queries: List[int] = Field(default=[256, 512, 1024, 2048, 4096, 8192, 16384, 32768, 65536], description="查询点数列表")
    repeats: int = Field(default=3, ge=1, description="每个点数重复次数（取最小耗时）")
    seed: int = Field(default=0, description="查询点抽样种子")
    case_id: Optional[str] = Field(default=None, description="基准算例（缺省取第一个算例）")

    @field_validator("queries")
    @classmethod
    def validate_queries(cls, v):
        if not v or any(q < 0 for q in v):
            raise ValueError("queries 必须非空且不能为负")
        return v


class RunConfig(BaseModel):
    """完整运行配置"""

    model_config = ConfigDict(extra="forbid")

    gen: GenConfig = Field(default_factory=GenConfig)
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    bench: BenchConfig = Field(default_factory=BenchConfig)

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        """--seed 同时作用于各分区的种子"""
        if seed is None:
            return self
        return apply_overrides(
            self,
            [f"gen.seed={seed}", f"model.seed={seed}", f"train.seed={seed}", f"eval.seed={seed}", f"bench.seed={seed}"],
        )

    def to_canonical_json(self) -> bytes:
        return canonical_json(self.model_dump(mode="json"))


def _parse_value(raw: str) -> Any:
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def _set_dotted(tree: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    if len(keys) < 2 or not all(keys):
        raise ConfigError(f"覆盖项键名应为 section.key: {dotted}")
    node = tree
    for key in keys[:-1]:
        child = node.get(key)
        if not isinstance(child, dict):
            raise ConfigError(f"未知配置项: {dotted}")
        node = child
    if keys[-1] not in node:
        raise ConfigError(f"未知配置项: {dotted}")
    node[keys[-1]] = value


def _validate(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"配置校验失败: {e}") from e


def apply_overrides(config: RunConfig, overrides: Sequence[str]) -> RunConfig:
    """
    应用 section.key=value 覆盖项

    Raises:
        ConfigError: 格式错误、未知键或校验失败
    """
    if not overrides:
        return config
    data = config.model_dump(mode="json")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"覆盖项缺少 '=': {item}")
        key, raw = item.split("=", 1)
        _set_dotted(data, key.strip(), _parse_value(raw.strip()))
    return _validate(data)


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Sequence[str] = ()) -> RunConfig:
    """
    读取配置文件（缺省为全部默认值）并应用覆盖项

    Raises:
        ConfigError: 文件不存在、JSON 非法、未知键或校验失败
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"配置文件不存在: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"配置文件不是合法 JSON: {path}: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError("配置文件顶层必须是对象")
    return apply_overrides(_validate(data), overrides)


def snapshot_config(config: RunConfig, out_dir: Union[str, Path]) -> Path:
    """将生效配置写入 out_dir/config.json"""
    path = Path(out_dir) / CONFIG_SNAPSHOT
    atomic_write(path, [config.to_canonical_json()])
    logger.info(f"配置快照已写出: {path}")
    return path


__all__ = [
    "CONFIG_SNAPSHOT",
    "GenConfig",
    "EvalConfig",
    "BenchConfig",
    "RunConfig",
    "apply_overrides",
    "load_run_config",
    "snapshot_config",
]
