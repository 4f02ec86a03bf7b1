"""
测试公共夹具：极小规模的模型/生成/运行配置与共享的合成数据集
"""

from pathlib import Path

import numpy as np
import pytest

from canonical.models import ModelConfig, ShapeKind, ShapeParams, TrainConfig
from config.run_config import BenchConfig, EvalConfig, GenConfig, RunConfig


def tiny_model_config(**overrides) -> ModelConfig:
    values = dict(
        depth=2,
        dim=8,
        heads=2,
        mlp_ratio=2,
        n_surface_anchors=16,
        n_volume_anchors=16,
        n_frequencies=4,
        n_cond_frequencies=4,
    )
    values.update(overrides)
    return ModelConfig(**values)


def tiny_gen_config(**overrides) -> GenConfig:
    values = dict(
        n_cases=10,
        seed=0,
        n_solution_surface=128,
        n_cad_surface=64,
        n_solution_volume=256,
        n_grid_volume=64,
    )
    values.update(overrides)
    return GenConfig(**values)


def tiny_train_config(**overrides) -> TrainConfig:
    values = dict(
        total_updates=16,
        peak_lr=1e-3,
        final_lr=1e-5,
        warmup_fraction=0.1,
        ema_rate=0.1,
        n_surface_anchors=16,
        n_volume_anchors=16,
        n_surface_queries=8,
        n_volume_queries=8,
        eval_every_epochs=1,
        checkpoint_every=4,
    )
    values.update(overrides)
    return TrainConfig(**values)


def tiny_run_config(**sections) -> RunConfig:
    return RunConfig(
        gen=sections.get("gen", tiny_gen_config()),
        model=sections.get("model", tiny_model_config()),
        train=sections.get("train", tiny_train_config()),
        eval=sections.get("eval", EvalConfig(chunk=32)),
        bench=sections.get("bench", BenchConfig(queries=[16, 64, 256], repeats=1)),
    )


def unit_sphere() -> ShapeParams:
    return ShapeParams(kind=ShapeKind.SPHERE, radius=1.0)


@pytest.fixture
def model_config() -> ModelConfig:
    return tiny_model_config()


@pytest.fixture
def run_config() -> RunConfig:
    return tiny_run_config()


@pytest.fixture(scope="session")
def tiny_dataset(tmp_path_factory) -> Path:
    """10 个算例（8/1/1 划分）的小数据集，整个测试会话共享，只读使用"""
    from orchestrator import generate_dataset

    out = tmp_path_factory.mktemp("dataset")
    (path,) = generate_dataset(tiny_run_config(), out, num_workers=2)
    return path


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
