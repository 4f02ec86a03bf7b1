"""
编排层模块
子命令的高层入口：数据生成、训练、评估、气动力报告、剖面切片与解码耗时基准
"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from time import perf_counter
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from canonical.errors import AbuptError, DataError, EmptySliceError, InvalidArgumentError, UndefinedRatioError
from canonical.mapper import FieldMapper
from canonical.models import (
    CaseRecord,
    ErrorReport,
    FieldSample,
    ForceReport,
    InputMesh,
    ShapeKind,
    SplitTag,
    TrainMode,
)
from config.run_config import RunConfig
from config.settings import get_settings
from data.case_generator import CaseGenerator, dataset_filename
from dataio.abpt import DatasetReader, write_dataset
from dataio.blobs import atomic_write, canonical_json
from geometry import build_shape
from model.abupt import AbUptModel
from model.checkpoint import Checkpoint, load_checkpoint
from model.params import BRANCHES
from postprocess import (
    ErrorAccumulator,
    affine_fit,
    force_error_summary,
    integrate_forces,
    mean_absolute_error,
    pressure_profile,
    r2_score,
    rank_cases,
    velocity_slice,
)
from postprocess.plots import bench_plot, profile_plot, scatter_plot, velocity_slice_plot
from postprocess.tables import write_bench_table, write_error_report, write_force_table, write_profile_table
from tensor.tensor import no_grad
from trainer import Trainer, TrainResult, predict_case, split_dataset, volume_subsample
from trainer.loop import VARIABLES
from trainer.sampling import inference_batch

from .executor import Executor, GenerationResult
from .router import Router

__version__ = "1.0.0"

# (算例, 体点子集) → 物理量纲的预测流场
Predictor = Callable[[CaseRecord, Optional[np.ndarray]], FieldSample]

_VOLUME_VARIABLES = ("volume_pressure", "velocity")
_NAN_FORCE = ForceReport(force=(math.nan, math.nan, math.nan), drag=math.nan, lift=math.nan, cd=math.nan, cl=math.nan)


def _out(out_dir: Optional[Union[str, Path]]) -> Path:
    path = Path(out_dir) if out_dir is not None else get_settings().get_output_root()
    path.mkdir(parents=True, exist_ok=True)
    return path


def _chunk(config: RunConfig) -> int:
    return config.eval.chunk or get_settings().query_chunk


# ------------------------------------------------------------------ gen


def generate_dataset(
    config: RunConfig,
    out_dir: Optional[Union[str, Path]] = None,
    num_workers: Optional[int] = None,
) -> List[Path]:
    """
    按工况标签各生成一个 ABPT 数据集文件 dataset_M<tag>.abpt

    所有工况共享同一组几何/攻角设计点与划分。

    Raises:
        InvalidArgumentError: N=0 或算例数不足以划分
        DataError: 任一算例生成失败
    """
    out = _out(out_dir)
    gen = CaseGenerator(config.gen)
    designs = gen.design()
    tags = split_dataset([d.case_id for d in designs], config.gen.split_fractions, config.gen.seed).tags()
    executor = Executor(num_workers or get_settings().num_workers)

    paths: List[Path] = []
    for regime in config.gen.regimes:
        result: GenerationResult = executor.execute(designs, lambda d, r=regime: gen.build_case(d, r))
        if result.errors:
            first = result.exceptions[0]
            logger.error(f"数据生成失败: 工况 {regime}，失败算例 {[e.case_id for e in result.errors]}")
            if isinstance(first, AbuptError):
                raise first
            raise DataError(f"算例 {result.errors[0].case_id} 生成失败: {first}") from first
        cases = [c.model_copy(update={"split": tags[c.case_id]}) for c in result.cases]
        path = out / dataset_filename(regime)
        manifest = write_dataset(cases, path, regime=regime, generator=gen.generator_info(regime))
        logger.info(f"数据集已写出: {path}（{len(manifest.cases)} 个算例，工况 {regime}）")
        paths.append(path)
    return paths


# ------------------------------------------------------------------ train


def train_model(
    config: RunConfig,
    dataset: Union[str, Path],
    out_dir: Optional[Union[str, Path]] = None,
    resume: Optional[Union[str, Path]] = None,
    max_steps: Optional[int] = None,
) -> TrainResult:
    """训练（可从检查点恢复）；恢复时模型结构取自检查点"""
    out = _out(out_dir)
    ckpt: Optional[Checkpoint] = None
    model_config = config.model
    if resume is not None:
        ckpt = load_checkpoint(resume)
        if ckpt.model_config != config.model:
            logger.warning("检查点的模型配置与当前配置不同，使用检查点中的配置")
        if ckpt.train_config is not None and ckpt.train_config != config.train:
            logger.warning("检查点的训练配置与当前配置不同，恢复后的日志可能与不中断运行不一致")
        model_config = ckpt.model_config
    trainer = Trainer(dataset, model_config, config.train, out, resume=ckpt)
    return trainer.run(max_steps=max_steps)


# ------------------------------------------------------------------ 预测器


def model_predictor(ckpt: Checkpoint, mapper: FieldMapper, config: RunConfig) -> Predictor:
    """检查点（EMA 权重）预测器；锚点来自 eval.input_mesh"""
    model = AbUptModel(ckpt.model_config, params=ckpt.eval_params(), requires_grad=False)
    trained_cad = ckpt.train_config is not None and TrainMode(ckpt.train_config.mode) == TrainMode.CAD_INPUT
    if InputMesh(config.eval.input_mesh) == InputMesh.CAD and not trained_cad:
        logger.warning("solution-mesh 训练的模型以各向同性输入评估（零样本迁移）")
    chunk = _chunk(config)

    def predict(case: CaseRecord, volume_index: Optional[np.ndarray]) -> FieldSample:
        return predict_case(model, mapper, case, config.eval.input_mesh, config.eval.seed, chunk, volume_index)

    return predict


def oracle_predictor(case: CaseRecord, volume_index: Optional[np.ndarray]) -> FieldSample:
    """真值"预测器"：返回算例自身的解网格流场"""
    fields = case.solution_fields
    if volume_index is None:
        return fields
    return FieldSample(
        surface_pressure=fields.surface_pressure,
        wall_shear=fields.wall_shear,
        volume_pressure=fields.volume_pressure[volume_index],
        velocity=fields.velocity[volume_index],
    )


def _load_predictor(checkpoint: Union[str, Path], reader: DatasetReader, config: RunConfig) -> Predictor:
    ckpt = load_checkpoint(checkpoint)
    stats = ckpt.statistics or reader.statistics
    if stats is None:
        raise DataError("检查点与数据集均缺少标准化统计量")
    return model_predictor(ckpt, FieldMapper(stats), config)


# ------------------------------------------------------------------ eval


@dataclass
class EvaluationResult:
    report: ErrorReport
    forces: List[Tuple[str, ForceReport, ForceReport]] = field(default_factory=list)
    case_errors: Dict[str, float] = field(default_factory=dict)
    files: Dict[str, Path] = field(default_factory=dict)


def _case_forces(case: CaseRecord, fields: FieldSample) -> ForceReport:
    return integrate_forces(case.solution_surface, fields.surface_pressure, fields.wall_shear, case.flow)


def evaluate_cases(
    reader: DatasetReader,
    predictor: Predictor,
    config: RunConfig,
) -> EvaluationResult:
    """
    在指定划分上评估预测器

    体变量在按算例固定的 eval.volume_fraction 子集上计算；point_counts 记录实际使用的点数。

    Raises:
        InvalidArgumentError: 划分为空
    """
    cfg = config.eval
    case_ids = reader.ids(SplitTag(cfg.split))
    if not case_ids:
        raise InvalidArgumentError(f"划分 {cfg.split} 没有算例")

    acc = ErrorAccumulator()
    case_errors: Dict[str, float] = {}
    forces: List[Tuple[str, ForceReport, ForceReport]] = []
    for case_id in case_ids:
        case = reader.read(case_id)
        index = None if cfg.volume_fraction >= 1.0 else volume_subsample(case, cfg.volume_fraction, cfg.seed)
        pred = predictor(case, index)
        target = case.solution_fields
        for name in VARIABLES:
            truth = getattr(target, name)
            if name in _VOLUME_VARIABLES and index is not None:
                truth = truth[index]
            acc.add(name, getattr(pred, name), truth)
            if name == cfg.rank_variable:
                case_errors[case_id] = mean_absolute_error(getattr(pred, name), truth)
        forces.append((case_id, _case_forces(case, target), _case_forces(case, pred)))
        logger.debug(f"评估算例 {case_id}: {cfg.rank_variable} MAE={case_errors[case_id]:.6g}")

    rel_l1: Dict[str, float] = {}
    rel_l2: Dict[str, float] = {}
    for name in VARIABLES:
        try:
            rel_l1[name], rel_l2[name] = acc.relative(name)
        except UndefinedRatioError as e:
            logger.warning(f"跳过相对误差: {e}")

    r2: Dict[str, float] = {}
    for key in ("drag", "lift"):
        try:
            r2[key] = r2_score([getattr(p, key) for _, _, p in forces], [getattr(t, key) for _, t, _ in forces])
        except (InvalidArgumentError, UndefinedRatioError) as e:
            logger.warning(f"跳过 {key} 的 R²: {e}")

    report = ErrorReport(
        split=cfg.split,
        input_mesh=cfg.input_mesh,
        n_cases=len(case_ids),
        point_counts=dict(acc.points),
        mae=acc.mae(),
        rel_l1=rel_l1,
        rel_l2=rel_l2,
        r2=r2,
        force_errors=force_error_summary([t for _, t, _ in forces], [p for _, _, p in forces]),
        ranking=rank_cases(case_errors).as_dict(),
    )
    logger.info(
        f"评估完成: split={cfg.split}, input_mesh={InputMesh(cfg.input_mesh).value}, 算例 {len(case_ids)}, "
        + ", ".join(f"{k} relL1={v:.4g}" for k, v in rel_l1.items())
    )
    return EvaluationResult(report=report, forces=forces, case_errors=case_errors)


def evaluate_model(
    config: RunConfig,
    dataset: Union[str, Path],
    checkpoint: Optional[Union[str, Path]] = None,
    out_dir: Optional[Union[str, Path]] = None,
    predictor: Optional[Predictor] = None,
) -> EvaluationResult:
    """
    评估并写出 error_report.json、forces.csv、scatter_drag.svg、scatter_lift.svg

    predictor 缺省由 checkpoint 构建；两者都未给出时报错。
    """
    out = _out(out_dir)
    reader = DatasetReader(dataset)
    if predictor is None:
        if checkpoint is None:
            raise InvalidArgumentError("评估需要检查点")
        predictor = _load_predictor(checkpoint, reader, config)
    result = evaluate_cases(reader, predictor, config)

    result.files["report"] = write_error_report(result.report, out / "error_report.json")
    result.files["forces"] = write_force_table(result.forces, out / "forces.csv")
    for key in ("drag", "lift"):
        result.files[f"scatter_{key}"] = scatter_plot(
            [getattr(t, key) for _, t, _ in result.forces],
            [getattr(p, key) for _, _, p in result.forces],
            out / f"scatter_{key}.svg",
            title=f"{key} ({result.report.split})",
            label=f"F_{key} [N]",
            r2=result.report.r2.get(key),
        )
    return result


# ------------------------------------------------------------------ forces


def report_forces(
    config: RunConfig,
    dataset: Union[str, Path],
    checkpoint: Optional[Union[str, Path]] = None,
    out_dir: Optional[Union[str, Path]] = None,
) -> List[Tuple[str, ForceReport, ForceReport]]:
    """
    全部算例的目标气动力（与可选的模型预测）写入 forces.csv；无检查点时预测列为空
    """
    out = _out(out_dir)
    reader = DatasetReader(dataset)
    predictor = None if checkpoint is None else _load_predictor(checkpoint, reader, config)
    rows: List[Tuple[str, ForceReport, ForceReport]] = []
    for case in reader.iter_cases():
        target = _case_forces(case, case.solution_fields)
        pred = _NAN_FORCE if predictor is None else _case_forces(case, predictor(case, None))
        rows.append((case.case_id, target, pred))
        logger.info(f"算例 {case.case_id}: F_drag={target.drag:.6g} N, F_lift={target.lift:.6g} N, C_d={target.cd:.6g}")
    write_force_table(rows, out / "forces.csv")
    if predictor is not None and rows:
        scatter_plot(
            [t.drag for _, t, _ in rows], [p.drag for _, _, p in rows], out / "scatter_drag.svg", title="drag", label="F_drag [N]"
        )
    return rows


# ------------------------------------------------------------------ slice


def _half_span(case: CaseRecord) -> float:
    if case.shape.kind == ShapeKind.WING:
        return build_shape(case.shape).semi_span
    return float(np.abs(case.solution_surface.positions[:, 1]).max())


def slice_profiles(
    config: RunConfig,
    dataset: Union[str, Path],
    case_id: str,
    spans: Optional[Sequence[float]] = None,
    checkpoint: Optional[Union[str, Path]] = None,
    out_dir: Optional[Union[str, Path]] = None,
) -> Dict[str, Path]:
    """
    展向站位处的压力剖面（CSV + SVG），有检查点时附带预测与速度切片

    Raises:
        NotFoundError: 算例不存在
        EmptySliceError: 某个站位切片为空
    """
    out = _out(out_dir)
    reader = DatasetReader(dataset)
    case = reader.read(case_id)
    spans = list(spans) if spans else list(config.eval.span_fractions)
    band = config.eval.slice_band
    pred_fields = None
    if checkpoint is not None:
        pred_fields = _load_predictor(checkpoint, reader, config)(case, None)

    files: Dict[str, Path] = {}
    surface = case.solution_surface
    for span in spans:
        target = pressure_profile(surface, case.solution_fields.surface_pressure, span, band, case.shape)
        pred = None
        if pred_fields is not None:
            pred = pressure_profile(surface, pred_fields.surface_pressure, span, band, case.shape)
        stem = f"profile_{case_id}_span{span:.2f}"
        files[f"{stem}.csv"] = write_profile_table(target, pred, out / f"{stem}.csv")
        files[f"{stem}.svg"] = profile_plot(target, pred, out / f"{stem}.svg", title=f"{case_id} @ {span:.0%} span")
        logger.info(f"剖面 {case_id} span={span:.2f}: 上表面 {target.upper.index.size} 点，下表面 {target.lower.index.size} 点")

    if pred_fields is not None:
        y0 = config.eval.velocity_span_fraction * _half_span(case)
        try:
            t_slice = velocity_slice(case.solution_volume, case.solution_fields.velocity, y0, band)
            p_slice = velocity_slice(case.solution_volume, pred_fields.velocity, y0, band)
            files["velocity_slice.svg"] = velocity_slice_plot(
                t_slice, p_slice, out / f"velocity_{case_id}.svg", title=f"{case_id} y={y0:.3f}"
            )
        except EmptySliceError as e:
            logger.warning(f"跳过速度切片: {e}")
    return files


# ------------------------------------------------------------------ bench


@dataclass
class BenchResult:
    rows: List[Dict[str, float]]
    slope: float
    intercept: float
    r2: float
    files: Dict[str, Path] = field(default_factory=dict)


def bench_decode(
    config: RunConfig,
    checkpoint: Union[str, Path],
    dataset: Union[str, Path],
    out_dir: Optional[Union[str, Path]] = None,
) -> BenchResult:
    """
    固定锚点下的解码耗时随查询点数的变化

    锚点取自 eval.input_mesh 指定的网格；每个查询点数一半取自表面、一半取自体点（有放回），重复 repeats 次取最小耗时；
    对 n > 0 的解码耗时做直线拟合，写出 bench.csv、bench_summary.json、bench.svg
    """
    out = _out(out_dir)
    cfg = config.bench
    reader = DatasetReader(dataset)
    ckpt = load_checkpoint(checkpoint)
    model = AbUptModel(ckpt.model_config, params=ckpt.eval_params(), requires_grad=False)
    case_id = cfg.case_id or reader.ids()[0]
    case = reader.read(case_id)
    input_mesh = InputMesh(config.eval.input_mesh)
    batch = inference_batch(
        case, input_mesh, model.config.n_surface_anchors, model.config.n_volume_anchors, cfg.seed
    )
    logger.info(f"解码基准: 算例 {case_id}, 锚点取自 {input_mesh.value} 网格")
    chunk = _chunk(config)
    rng = np.random.default_rng(cfg.seed)
    sources = {"surface": case.solution_surface.positions, "volume": case.solution_volume.positions}

    rows: List[Dict[str, float]] = []
    with no_grad():
        for n in cfg.queries:
            counts = {"surface": n // 2, "volume": n - n // 2}
            queries = {b: sources[b][rng.integers(0, len(sources[b]), size=counts[b])] for b in BRANCHES}
            encode_best = decode_best = math.inf
            for _ in range(cfg.repeats):
                t0 = perf_counter()
                cache = model.encode_anchors(batch)
                t1 = perf_counter()
                for b in BRANCHES:
                    model.decode_queries(cache, b, queries[b], chunk)
                t2 = perf_counter()
                encode_best = min(encode_best, t1 - t0)
                decode_best = min(decode_best, t2 - t1)
            rows.append(
                {
                    "n_queries": n,
                    "encode_seconds": encode_best,
                    "decode_seconds": decode_best,
                    "total_seconds": encode_best + decode_best,
                }
            )
            logger.info(f"bench n={n}: encode={encode_best:.4f}s decode={decode_best:.4f}s")

    fitted = [r for r in rows if r["n_queries"] > 0]
    slope, intercept, r2 = affine_fit([r["n_queries"] for r in fitted], [r["decode_seconds"] for r in fitted])
    files = {
        "bench.csv": write_bench_table(rows, out / "bench.csv"),
        "bench.svg": bench_plot(
            [r["n_queries"] for r in fitted], [r["decode_seconds"] for r in fitted], out / "bench.svg", slope, intercept
        ),
    }
    summary: Dict[str, Any] = {
        "case_id": case_id,
        "chunk": chunk,
        "input_mesh": input_mesh.value,
        "intercept": intercept,
        "n_surface_anchors": model.config.n_surface_anchors,
        "n_volume_anchors": model.config.n_volume_anchors,
        "queries": list(cfg.queries),
        "r2": r2,
        "repeats": cfg.repeats,
        "slope": slope,
    }
    files["bench_summary.json"] = atomic_write(out / "bench_summary.json", [canonical_json(summary)])
    logger.info(f"解码耗时拟合: slope={slope:.3e} s/点, intercept={intercept:.3e} s, R²={r2:.4f}")
    return BenchResult(rows=rows, slope=slope, intercept=intercept, r2=r2, files=files)


__all__ = [
    "Router",
    "Executor",
    "Predictor",
    "generate_dataset",
    "train_model",
    "model_predictor",
    "oracle_predictor",
    "EvaluationResult",
    "evaluate_cases",
    "evaluate_model",
    "report_forces",
    "slice_profiles",
    "BenchResult",
    "bench_decode",
]
