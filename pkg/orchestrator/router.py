"""
编排层路由器（Router）

职责：
- 校验子命令名称，并按子命令检查运行配置的组合是否可执行。
- 对可自动修正的取值做规范化（去重、排序），并返回告警；不可执行的组合直接抛出 ConfigError。
- 该模块不执行任何计算，执行由 orchestrator 高层入口与 executor 承担。
"""

from typing import List, Tuple

from loguru import logger

from canonical.errors import ConfigError, InvalidArgumentError
from canonical.models import FieldModel, ShapeKind, TrainMode
from config.run_config import RunConfig
from oracle import REGIME_CONSTANTS

SUBCOMMANDS: Tuple[str, ...] = ("gen", "train", "eval", "forces", "slice", "bench")

# 解码耗时拟合需要覆盖的最小查询点数跨度
MIN_BENCH_SPAN = 16


class Router:
    """负责子命令与运行配置的校验。

    用法示例：
        router = Router()
        config, warnings = router.route("train", config)
    """

    def validate_subcommand(self, name: str) -> str:
        key = (name or "").strip().lower()
        if key not in SUBCOMMANDS:
            raise ConfigError(f"未知子命令 '{name}'，支持 {list(SUBCOMMANDS)}")
        return key

    def _warn(self, warnings: List[str], msg: str) -> None:
        logger.warning(msg)
        warnings.append(msg)

    def check_gen(self, config: RunConfig, warnings: List[str]) -> RunConfig:
        gen = config.gen
        if gen.n_cases == 0:
            raise InvalidArgumentError("算例数 N=0，无法生成数据集")
        unknown = [r for r in gen.regimes if r not in REGIME_CONSTANTS]
        if unknown:
            raise ConfigError(f"未知工况标签 {unknown}，支持 {sorted(REGIME_CONSTANTS)}")
        if gen.field_model == FieldModel.POTENTIAL and any(s != ShapeKind.SPHERE for s in gen.shapes):
            raise ConfigError("potential 真值场仅支持纯球体数据集（gen.shapes=[\"sphere\"]）")
        if gen.n_grid_volume < config.model.n_volume_anchors:
            self._warn(warnings, f"Router: 规则网格体点数 {gen.n_grid_volume} 少于体锚点数，cad 输入将有放回抽样")
        return config

    def check_train(self, config: RunConfig, warnings: List[str]) -> RunConfig:
        train = config.train
        if train.checkpoint_every > train.total_updates:
            self._warn(warnings, "Router: checkpoint_every 大于 total_updates，仅在训练结束时保存检查点")
        if train.n_surface_anchors != config.model.n_surface_anchors or train.n_volume_anchors != config.model.n_volume_anchors:
            self._warn(warnings, "Router: 训练锚点数与推理锚点数（model.n_*_anchors）不同")
        if TrainMode(train.mode) == TrainMode.CAD_INPUT and config.gen.n_cad_surface < train.n_surface_anchors:
            self._warn(warnings, "Router: 各向同性表面点数少于表面锚点数，将有放回抽样")
        return config

    def check_bench(self, config: RunConfig, warnings: List[str]) -> RunConfig:
        queries = sorted(set(config.bench.queries))
        if queries != list(config.bench.queries):
            self._warn(warnings, f"Router: bench.queries 已去重并排序为 {queries}")
        positive = [q for q in queries if q > 0]
        if len(positive) < 2:
            raise ConfigError("bench.queries 至少需要两个正的查询点数才能拟合")
        if positive[-1] < MIN_BENCH_SPAN * positive[0]:
            self._warn(warnings, f"Router: 查询点数跨度小于 {MIN_BENCH_SPAN}×，线性拟合可能不稳定")
        return config.model_copy(update={"bench": config.bench.model_copy(update={"queries": queries})})

    def route(self, subcommand: str, config: RunConfig) -> Tuple[RunConfig, List[str]]:
        """路由入口：返回 (规范化后的配置, 告警列表)"""
        key = self.validate_subcommand(subcommand)
        warnings: List[str] = []
        if key == "gen":
            config = self.check_gen(config, warnings)
        elif key == "train":
            config = self.check_train(config, warnings)
        elif key == "bench":
            config = self.check_bench(config, warnings)
        logger.debug(f"Router: 子命令 {key} 校验完成，告警 {len(warnings)} 条")
        return config, warnings


__all__ = ["Router", "SUBCOMMANDS", "MIN_BENCH_SPAN"]
