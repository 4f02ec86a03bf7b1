"""
端到端集成测试：生成 → 训练 → 评估 / 气动力 / 剖面 / 基准

说明：
- 共享会话级的小数据集（10 个算例，8/1/1 划分）与一次 16 步的训练。
- 覆盖恢复训练的日志一致性、真值预测器的零误差、输出文件的逐字节可复现。
"""

import json

import numpy as np
import pandas as pd
import pytest

from canonical.errors import EmptySliceError, NotFoundError
from config.run_config import EvalConfig
from dataio import DatasetReader
from model import load_checkpoint
from orchestrator import (
    bench_decode,
    evaluate_model,
    oracle_predictor,
    report_forces,
    slice_profiles,
    train_model,
)
from trainer.loop import LOSS_COLUMNS, VAL_COLUMNS
from tests.conftest import tiny_run_config, tiny_train_config


@pytest.fixture(scope="module")
def trained(tiny_dataset, tmp_path_factory):
    """完整跑完 16 步的训练目录"""
    run_dir = tmp_path_factory.mktemp("run")
    result = train_model(tiny_run_config(), tiny_dataset, run_dir)
    return result


def test_training_run_layout(trained):
    """训练目录包含损失/验证日志、文本日志与检查点"""
    run_dir = trained.run_dir
    assert trained.step == 16 and trained.steps_run == 16
    assert np.isfinite(trained.last_loss)

    loss = pd.read_csv(run_dir / "loss_log.csv")
    assert list(loss.columns) == LOSS_COLUMNS
    assert loss["step"].tolist() == list(range(1, 17))
    assert (loss["lr"] > 0).all()

    val = pd.read_csv(run_dir / "val_log.csv")
    assert list(val.columns) == VAL_COLUMNS
    assert val["epoch"].tolist() == [1, 2]

    assert (run_dir / "train.log").exists()
    names = sorted(p.name for p in (run_dir / "checkpoints").iterdir())
    assert names == ["last.abck", "step_000004.abck", "step_000008.abck", "step_000012.abck", "step_000016.abck"]
    ckpt = load_checkpoint(run_dir / "checkpoints" / "last.abck")
    assert ckpt.step == 16 and ckpt.momentum is not None and ckpt.statistics is not None


def test_resume_reproduces_uninterrupted_log(trained, tiny_dataset, tmp_path):
    """中断于第 6 步、从第 4 步检查点恢复后，损失日志与不中断运行逐字节一致"""
    config = tiny_run_config()
    first = train_model(config, tiny_dataset, tmp_path, max_steps=6)
    assert first.step == 6 and first.checkpoint.name == "last.abck"

    resumed = train_model(config, tiny_dataset, tmp_path, resume=tmp_path / "checkpoints" / "last.abck")
    assert resumed.step == 16 and resumed.steps_run == 12

    assert (tmp_path / "loss_log.csv").read_bytes() == (trained.run_dir / "loss_log.csv").read_bytes()
    assert (tmp_path / "val_log.csv").read_bytes() == (trained.run_dir / "val_log.csv").read_bytes()
    a = load_checkpoint(tmp_path / "checkpoints" / "last.abck")
    b = load_checkpoint(trained.run_dir / "checkpoints" / "last.abck")
    for name, value in b.params.items():
        np.testing.assert_array_equal(a.params[name], value)
        np.testing.assert_array_equal(a.ema[name], b.ema[name])


def test_oracle_predictor_has_zero_error(tiny_dataset, tmp_path):
    """真值预测器在 train 划分上误差为 0、气动力 R² 为 1"""
    config = tiny_run_config(eval=EvalConfig(split="train", chunk=32))
    result = evaluate_model(config, tiny_dataset, out_dir=tmp_path, predictor=oracle_predictor)
    report = result.report
    assert report.n_cases == 8
    assert set(report.rel_l1) == {"surface_pressure", "wall_shear", "volume_pressure", "velocity"}
    assert all(v == 0.0 for v in report.rel_l1.values())
    assert all(v == 0.0 for v in report.rel_l2.values())
    assert all(v == 0.0 for v in report.mae.values())
    assert report.r2 == {"drag": 1.0, "lift": 1.0}
    assert report.force_errors["drag"]["max"] == 0.0

    reader = DatasetReader(tiny_dataset)
    expected = sum(reader.read(cid).solution_surface.count for cid in reader.ids("train"))
    assert report.point_counts["surface_pressure"] == expected
    saved = json.loads((tmp_path / "error_report.json").read_text(encoding="utf-8"))
    assert saved["n_cases"] == 8


def test_eval_is_reproducible(trained, tiny_dataset, tmp_path):
    """同一检查点评估两次，报告、表格与图逐字节一致"""
    ckpt = trained.run_dir / "checkpoints" / "last.abck"
    outputs = []
    for name in ("a", "b"):
        result = evaluate_model(tiny_run_config(), tiny_dataset, checkpoint=ckpt, out_dir=tmp_path / name)
        assert result.report.split == "test" and result.report.n_cases == 1
        assert all(np.isfinite(v) for v in result.report.mae.values())
        outputs.append({key: path.read_bytes() for key, path in result.files.items()})
    assert outputs[0] == outputs[1]
    assert set(outputs[0]) == {"report", "forces", "scatter_drag", "scatter_lift"}


def test_zero_shot_cad_input_eval(trained, tiny_dataset, tmp_path):
    """solution-mesh 训练的模型可以用各向同性输入评估"""
    config = tiny_run_config(eval=EvalConfig(split="val", input_mesh="cad", chunk=32))
    result = evaluate_model(config, tiny_dataset, checkpoint=trained.run_dir / "checkpoints" / "last.abck", out_dir=tmp_path)
    assert result.report.input_mesh.value == "cad"
    assert result.report.n_cases == 1


def test_forces_report(trained, tiny_dataset, tmp_path):
    """无检查点时预测列为空；有检查点时写出预测"""
    rows = report_forces(tiny_run_config(), tiny_dataset, out_dir=tmp_path / "target")
    assert len(rows) == 10
    table = pd.read_csv(tmp_path / "target" / "forces.csv")
    assert table["pred_drag"].isna().all()
    assert table["target_drag"].notna().all()

    ckpt = trained.run_dir / "checkpoints" / "last.abck"
    report_forces(tiny_run_config(), tiny_dataset, checkpoint=ckpt, out_dir=tmp_path / "pred")
    assert pd.read_csv(tmp_path / "pred" / "forces.csv")["pred_drag"].notna().all()
    assert (tmp_path / "pred" / "scatter_drag.svg").exists()


def test_slice_profiles(trained, tiny_dataset, tmp_path):
    """剖面 CSV 与 SVG 按站位写出，未知算例与空切片报错"""
    config = tiny_run_config(eval=EvalConfig(chunk=32, slice_band=0.3))
    ckpt = trained.run_dir / "checkpoints" / "last.abck"
    files = slice_profiles(config, tiny_dataset, "case_0000", spans=[0.5], checkpoint=ckpt, out_dir=tmp_path)
    assert "profile_case_0000_span0.50.csv" in files
    table = pd.read_csv(files["profile_case_0000_span0.50.csv"])
    assert list(table.columns) == ["surface", "x_c", "p_target", "p_pred"]
    assert len(table) > 0 and table["p_pred"].notna().all()

    with pytest.raises(NotFoundError):
        slice_profiles(config, tiny_dataset, "case_9999", spans=[0.5], out_dir=tmp_path)
    narrow = tiny_run_config(eval=EvalConfig(chunk=32, slice_band=1e-12))
    with pytest.raises(EmptySliceError):
        slice_profiles(narrow, tiny_dataset, "case_0000", spans=[0.5], out_dir=tmp_path)


def test_bench_decode(trained, tiny_dataset, tmp_path):
    """基准表格包含每个查询点数，摘要记录拟合结果"""
    result = bench_decode(tiny_run_config(), trained.run_dir / "checkpoints" / "last.abck", tiny_dataset, tmp_path)
    assert [r["n_queries"] for r in result.rows] == [16, 64, 256]
    assert all(r["decode_seconds"] > 0 for r in result.rows)
    assert np.isfinite(result.slope)
    summary = json.loads((tmp_path / "bench_summary.json").read_text(encoding="utf-8"))
    assert summary["queries"] == [16, 64, 256]
    assert pd.read_csv(tmp_path / "bench.csv")["n_queries"].tolist() == [16, 64, 256]
    assert summary["input_mesh"] == "solution"


def test_bench_honours_input_mesh(trained, tiny_dataset, tmp_path):
    """eval.input_mesh=cad 时基准的锚点取自各向同性网格，并记录在摘要中"""
    config = tiny_run_config(eval=EvalConfig(chunk=32, input_mesh="cad"))
    result = bench_decode(config, trained.run_dir / "checkpoints" / "last.abck", tiny_dataset, tmp_path)
    assert len(result.rows) == 3
    summary = json.loads((tmp_path / "bench_summary.json").read_text(encoding="utf-8"))
    assert summary["input_mesh"] == "cad"


def test_cad_input_training_runs(tiny_dataset, tmp_path):
    """cad-input 模式训练可以完成并保存检查点"""
    config = tiny_run_config(train=tiny_train_config(mode="cad-input", total_updates=4))
    result = train_model(config, tiny_dataset, tmp_path)
    assert result.step == 4 and result.checkpoint is not None
    assert load_checkpoint(result.checkpoint).train_config.mode.value == "cad-input"


@pytest.mark.slow
def test_loss_decreases_with_training(tiny_dataset, tmp_path):
    """数百步训练后损失下降"""
    config = tiny_run_config(train=tiny_train_config(total_updates=400, checkpoint_every=400, warmup_fraction=0.05))
    train_model(config, tiny_dataset, tmp_path)
    loss = pd.read_csv(tmp_path / "loss_log.csv")["loss"].to_numpy()
    assert loss[-50:].mean() < 0.8 * loss[:50].mean()
