"""
训练循环

批大小为 1：每步取一个算例，重新抽取锚点，计算四个变量 MAE 之和，执行一次 Lion 更新与 EMA 更新。
第 k 步（0 起）的随机数来自 default_rng([seed, k])，epoch 顺序来自 default_rng([seed, epoch])，
因此从检查点恢复后的损失日志与不中断的运行逐字节一致。
"""

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from canonical.errors import InvalidArgumentError
from canonical.mapper import FieldMapper
from canonical.models import CaseRecord, FieldSample, InputMesh, ModelConfig, SplitTag, TrainConfig, TrainMode
from config.settings import LOG_FORMAT
from dataio.abpt import DatasetReader
from model.abupt import AbUptModel, Prediction
from model.checkpoint import Checkpoint, save_checkpoint
from model.params import BRANCHES
from tensor import ops
from tensor.tensor import Tape, Tensor, no_grad
from trainer.ema import EmaWeights
from trainer.lion import LionOptimizer
from trainer.sampling import TrainingSample, inference_batch, sample_training_tokens, volume_subsample
from trainer.schedule import lr_at

LOSS_COLUMNS = ["step", "lr", "loss", "mae_surface_pressure", "mae_wall_shear", "mae_volume_pressure", "mae_velocity"]
VAL_COLUMNS = ["step", "epoch", "mae_surface_pressure", "mae_wall_shear", "mae_volume_pressure", "mae_velocity"]

VARIABLES = tuple(FieldMapper.VARIABLE_COLUMNS)


def training_loss(
    prediction: Prediction,
    targets: Dict[str, Tensor],
    loss_rows: Optional[Dict[str, Optional[np.ndarray]]] = None,
) -> Tuple[Tensor, Dict[str, float]]:
    """
    各变量 MAE 之和（标准化空间）

    Args:
        prediction: 模型输出
        targets: 分支 → 目标张量（锚点在前、查询在后）
        loss_rows: 分支 → 参与损失的行（None 表示全部）
    """
    loss_rows = loss_rows or {}
    total: Optional[Tensor] = None
    parts: Dict[str, float] = {}
    for branch in BRANCHES:
        pred = prediction.anchors(branch)
        queries = prediction.queries(branch)
        if queries is not None:
            pred = ops.concat([pred, queries], axis=0)
        target = targets[branch]
        if pred.shape != target.shape:
            raise InvalidArgumentError(f"{branch} 预测形状 {pred.shape} 与目标 {target.shape} 不一致")
        rows = loss_rows.get(branch)
        if rows is not None:
            pred, target = ops.take_rows(pred, rows), ops.take_rows(target, rows)
        for name, (var_branch, lo, hi) in FieldMapper.VARIABLE_COLUMNS.items():
            if var_branch != branch:
                continue
            mae = ops.mean_abs_error(ops.slice_cols(pred, lo, hi), ops.slice_cols(target, lo, hi))
            parts[name] = mae.item()
            total = mae if total is None else ops.add(total, mae)
    return total, parts


@dataclass
class StepResult:
    loss: float
    lr: float
    maes: Dict[str, float]


def training_step(
    model: AbUptModel,
    sample: TrainingSample,
    optimizer: LionOptimizer,
    ema: EmaWeights,
    lr: float,
) -> StepResult:
    """一次前向、反向、Lion 更新与 EMA 更新"""
    targets = {b: Tensor(sample.targets[b]) for b in BRANCHES}
    with Tape() as tape:
        prediction = model.forward(sample.batch)
        loss, parts = training_loss(prediction, targets, sample.loss_rows)
    grads = tape.backward(loss)
    named = {name: grads.get(t.node_id, np.zeros_like(t.data)) for name, t in model.params.items()}
    optimizer.step(named, lr)
    ema.update({name: t.data for name, t in model.params.items()})
    return StepResult(loss=loss.item(), lr=lr, maes=parts)


def predict_case(
    model: AbUptModel,
    mapper: FieldMapper,
    case: CaseRecord,
    input_mesh: InputMesh = InputMesh.SOLUTION,
    seed: int = 0,
    chunk: Optional[int] = None,
    volume_index: Optional[np.ndarray] = None,
) -> FieldSample:
    """
    在解网格点上预测物理量纲的流场

    锚点取自 input_mesh 指定的点集，全部评估点作为查询分块解码
    """
    batch = inference_batch(
        case, input_mesh, model.config.n_surface_anchors, model.config.n_volume_anchors, seed, volume_index
    )
    with no_grad():
        cache = model.encode_anchors(batch)
        out = {
            b: mapper.denormalize(b, model.decode_queries(cache, b, batch.queries(b), chunk).data.astype(np.float64))
            for b in BRANCHES
        }
    return FieldSample.from_channels(out["surface"], out["volume"])


def _append_csv(path: Path, rows: List[Dict[str, float]], columns: List[str]) -> None:
    if not rows:
        return
    pd.DataFrame(rows, columns=columns).to_csv(path, mode="a", header=not path.exists(), index=False)


def _truncate_csv(path: Path, max_step: int) -> None:
    if not path.exists():
        return
    frame = pd.read_csv(path, float_precision="round_trip")
    frame[frame["step"] <= max_step].to_csv(path, index=False)


@dataclass
class TrainResult:
    run_dir: Path
    step: int
    steps_run: int
    last_loss: Optional[float]
    checkpoint: Optional[Path]


class Trainer:
    """
    桌面规模训练器

    运行目录结构：
        loss_log.csv / val_log.csv / train.log
        checkpoints/step_XXXXXX.abck 与 checkpoints/last.abck
    """

    def __init__(
        self,
        dataset: Union[str, Path],
        model_config: ModelConfig,
        train_config: TrainConfig,
        run_dir: Union[str, Path],
        resume: Optional[Checkpoint] = None,
    ):
        self.reader = DatasetReader(dataset)
        self.model_config = model_config
        self.cfg = train_config
        self.run_dir = Path(run_dir)
        self.run_dir.mkdir(parents=True, exist_ok=True)

        stats = resume.statistics if resume is not None and resume.statistics is not None else self.reader.statistics
        if stats is None:
            raise InvalidArgumentError("数据集缺少标准化统计量")
        self.mapper = FieldMapper(stats)

        self.train_ids = self.reader.ids(SplitTag.TRAIN)
        if self.cfg.max_train_cases is not None:
            self.train_ids = self.train_ids[: self.cfg.max_train_cases]
        if not self.train_ids:
            raise InvalidArgumentError("训练集为空")
        self.val_ids = self.reader.ids(SplitTag.VAL)

        self.model = AbUptModel(model_config, params=None if resume is None else resume.params)
        ema_init = self.model.arrays() if resume is None or resume.ema is None else resume.ema
        self.ema = EmaWeights(ema_init, self.cfg.ema_rate)
        self.optimizer = LionOptimizer(
            self.model.params,
            beta1=self.cfg.lion_beta1,
            beta2=self.cfg.lion_beta2,
            weight_decay=self.cfg.weight_decay,
            momentum=None if resume is None else resume.momentum,
        )
        self.step = 0 if resume is None else resume.step
        if not 0 <= self.step <= self.cfg.total_updates:
            raise InvalidArgumentError(f"检查点步数 {self.step} 超出训练总步数")

        self.loss_log = self.run_dir / "loss_log.csv"
        self.val_log = self.run_dir / "val_log.csv"
        self.checkpoint_dir = self.run_dir / "checkpoints"
        self._load_case = lru_cache(maxsize=None)(self.reader.read)
        self._pending_loss: List[Dict[str, float]] = []
        self._pending_val: List[Dict[str, float]] = []
        if resume is not None:
            _truncate_csv(self.loss_log, self.step)
            _truncate_csv(self.val_log, self.step)
            logger.info(f"从检查点恢复训练: step={self.step}")

    # ------------------------------------------------------------ 数据顺序

    def epoch_order(self, epoch: int) -> List[str]:
        order = np.random.default_rng([self.cfg.seed, epoch]).permutation(len(self.train_ids))
        return [self.train_ids[i] for i in order]

    def case_for_step(self, step: int) -> str:
        n = len(self.train_ids)
        return self.epoch_order(step // n)[step % n]

    # ------------------------------------------------------------ 验证与检查点

    def validate(self) -> Dict[str, float]:
        """EMA 权重在验证集上的物理量纲 MAE（体点使用 10% 子集）"""
        ema_model = self.model.with_parameters(self.ema.copy())
        input_mesh = InputMesh.CAD if TrainMode(self.cfg.mode) == TrainMode.CAD_INPUT else InputMesh.SOLUTION
        sums = {name: 0.0 for name in VARIABLES}
        counts = {name: 0 for name in VARIABLES}
        for case_id in self.val_ids:
            case = self._load_case(case_id)
            index = volume_subsample(case, self.cfg.volume_subsample_fraction, self.cfg.seed)
            pred = predict_case(ema_model, self.mapper, case, input_mesh, self.cfg.seed, volume_index=index)
            target = case.solution_fields
            for name in VARIABLES:
                truth = getattr(target, name)
                if name in ("volume_pressure", "velocity"):
                    truth = truth[index]
                diff = np.abs(getattr(pred, name) - truth)
                sums[name] += float(diff.sum())
                counts[name] += int(diff.size)
        return {name: sums[name] / counts[name] if counts[name] else float("nan") for name in VARIABLES}

    def checkpoint(self) -> Checkpoint:
        return Checkpoint(
            model_config=self.model_config,
            params=self.model.arrays(),
            ema=self.ema.copy(),
            momentum=self.optimizer.momentum(),
            train_config=self.cfg,
            step=self.step,
            statistics=self.mapper.stats,
        )

    def _flush_logs(self) -> None:
        _append_csv(self.loss_log, self._pending_loss, LOSS_COLUMNS)
        _append_csv(self.val_log, self._pending_val, VAL_COLUMNS)
        self._pending_loss.clear()
        self._pending_val.clear()

    def _save(self) -> Path:
        self._flush_logs()
        ckpt = self.checkpoint()
        save_checkpoint(self.checkpoint_dir / f"step_{self.step:06d}.abck", ckpt)
        return save_checkpoint(self.checkpoint_dir / "last.abck", ckpt)

    # ------------------------------------------------------------ 主循环

    def run(self, max_steps: Optional[int] = None) -> TrainResult:
        """
        训练到 total_updates，或执行 max_steps 步后停止（用于模拟中断）
        """
        sink = logger.add(str(self.run_dir / "train.log"), format=LOG_FORMAT, level="INFO")
        n_train = len(self.train_ids)
        steps_run = 0
        last: Optional[StepResult] = None
        last_ckpt: Optional[Path] = None
        logger.info(
            f"开始训练: mode={TrainMode(self.cfg.mode).value}, 训练算例 {n_train}, 验证算例 {len(self.val_ids)}, "
            f"参数量 {self.model.count_parameters()}, 起始 step={self.step}"
        )
        try:
            while self.step < self.cfg.total_updates and (max_steps is None or steps_run < max_steps):
                k = self.step
                case = self._load_case(self.case_for_step(k))
                sample = sample_training_tokens(case, self.mapper, self.cfg, np.random.default_rng([self.cfg.seed, k]))
                last = training_step(self.model, sample, self.optimizer, self.ema, lr_at(k + 1, self.cfg))
                self.step = k + 1
                steps_run += 1

                if self.step % self.cfg.log_every == 0:
                    self._pending_loss.append(
                        {"step": self.step, "lr": last.lr, "loss": last.loss, **{f"mae_{n}": last.maes[n] for n in VARIABLES}}
                    )
                    logger.debug(f"step {self.step}: loss={last.loss:.6f} lr={last.lr:.3e}")

                if self.step % n_train == 0:
                    epoch = self.step // n_train
                    if epoch % self.cfg.eval_every_epochs == 0 and self.val_ids:
                        val = self.validate()
                        self._pending_val.append({"step": self.step, "epoch": epoch, **{f"mae_{n}": val[n] for n in VARIABLES}})
                        logger.info(f"epoch {epoch} 验证 MAE: " + ", ".join(f"{n}={v:.4g}" for n, v in val.items()))

                if self.step % self.cfg.checkpoint_every == 0 or self.step == self.cfg.total_updates:
                    last_ckpt = self._save()
        finally:
            self._flush_logs()
            logger.remove(sink)

        logger.info(f"训练结束: step={self.step}, 本次执行 {steps_run} 步")
        return TrainResult(
            run_dir=self.run_dir,
            step=self.step,
            steps_run=steps_run,
            last_loss=None if last is None else last.loss,
            checkpoint=last_ckpt,
        )


__all__ = [
    "LOSS_COLUMNS",
    "VAL_COLUMNS",
    "VARIABLES",
    "training_loss",
    "training_step",
    "predict_case",
    "StepResult",
    "TrainResult",
    "Trainer",
]
