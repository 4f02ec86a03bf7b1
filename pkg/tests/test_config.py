"""
配置与路由测试
测试运行配置的覆盖项、种子传播、快照，以及子命令路由校验
"""

import json
import unittest

from canonical.errors import ConfigError, InvalidArgumentError
from canonical.models import InputMesh
from config.run_config import BenchConfig, RunConfig, apply_overrides, load_run_config, snapshot_config
from config.settings import Settings
from orchestrator.router import Router
from tests.conftest import tiny_gen_config, tiny_run_config


class TestRunConfig(unittest.TestCase):
    """测试运行配置"""

    def test_overrides_parse_json_values(self):
        """测试 section.key=value 覆盖项按 JSON 解析"""
        print("\n=== 测试配置覆盖项 ===")
        config = apply_overrides(
            RunConfig(),
            ["gen.n_cases=12", "model.share_branch_weights=true", "eval.input_mesh=cad", "bench.queries=[16,32]"],
        )
        self.assertEqual(config.gen.n_cases, 12)
        self.assertTrue(config.model.share_branch_weights)
        self.assertEqual(config.eval.input_mesh, InputMesh.CAD)
        self.assertEqual(config.bench.queries, [16, 32])
        print("✓ 覆盖项生效")

    def test_unknown_or_invalid_overrides(self):
        """测试未知键、缺少等号与非法取值都报 ConfigError"""
        for bad in (["gen.n_case=3"], ["nosection=1"], ["gen.n_cases"], ["model.dim=30", "model.heads=4"], ["eval.split=dev"]):
            with self.assertRaises(ConfigError, msg=str(bad)):
                apply_overrides(RunConfig(), bad)

    def test_with_seed_propagates(self):
        """测试 --seed 作用于全部分区"""
        config = RunConfig().with_seed(7)
        seeds = {config.gen.seed, config.model.seed, config.train.seed, config.eval.seed, config.bench.seed}
        self.assertEqual(seeds, {7})
        self.assertEqual(RunConfig().with_seed(None).gen.seed, 0)

    def test_load_and_snapshot(self):
        """测试配置文件读取、快照为 canonical JSON 且可重新读取"""
        import tempfile
        from pathlib import Path

        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "run.json"
            path.write_text(json.dumps({"gen": {"n_cases": 20}, "train": {"total_updates": 50}}), encoding="utf-8")
            config = load_run_config(path, ["train.peak_lr=0.002"])
            self.assertEqual((config.gen.n_cases, config.train.total_updates, config.train.peak_lr), (20, 50, 0.002))

            snap = snapshot_config(config, tmp)
            self.assertEqual(snap.read_bytes(), config.to_canonical_json())
            self.assertEqual(load_run_config(snap), config)

            with self.assertRaises(ConfigError):
                load_run_config(Path(tmp) / "missing.json")
            bad = Path(tmp) / "bad.json"
            bad.write_text("{not json", encoding="utf-8")
            with self.assertRaises(ConfigError):
                load_run_config(bad)

    def test_settings_defaults(self):
        """测试环境配置的默认值"""
        settings = Settings()
        self.assertGreaterEqual(settings.num_workers, 1)
        self.assertGreaterEqual(settings.query_chunk, 1)


class TestRouter(unittest.TestCase):
    """测试子命令路由"""

    def setUp(self):
        self.router = Router()

    def test_unknown_subcommand(self):
        with self.assertRaises(ConfigError):
            self.router.route("deploy", RunConfig())

    def test_gen_checks(self):
        """测试 gen：N=0、未知工况与 potential 非球体组合被拒绝"""
        print("\n=== 测试 gen 路由校验 ===")
        with self.assertRaises(InvalidArgumentError):
            self.router.route("gen", tiny_run_config(gen=tiny_gen_config(n_cases=0)))
        with self.assertRaises(ConfigError):
            self.router.route("gen", tiny_run_config(gen=tiny_gen_config(regimes=["1.2"])))
        with self.assertRaises(ConfigError):
            self.router.route("gen", tiny_run_config(gen=tiny_gen_config(field_model="potential")))
        config, warnings = self.router.route("gen", tiny_run_config(gen=tiny_gen_config(field_model="potential", shapes=["sphere"])))
        self.assertEqual(warnings, [])
        print("✓ gen 校验通过")

    def test_bench_queries_normalized(self):
        """测试 bench.queries 去重排序并给出告警"""
        config, warnings = self.router.route("bench", tiny_run_config(bench=BenchConfig(queries=[256, 16, 16, 1024])))
        self.assertEqual(config.bench.queries, [16, 256, 1024])
        self.assertEqual(len(warnings), 1)
        with self.assertRaises(ConfigError):
            self.router.route("bench", tiny_run_config(bench=BenchConfig(queries=[0, 64])))

    def test_train_warnings(self):
        """测试 train：检查点间隔大于总步数时告警"""
        run = tiny_run_config()
        run = run.model_copy(update={"train": run.train.model_copy(update={"checkpoint_every": 100})})
        _, warnings = self.router.route("TRAIN", run)
        self.assertEqual(len(warnings), 1)


if __name__ == "__main__":
    unittest.main(verbosity=2)
