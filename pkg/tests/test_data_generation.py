"""
数据生成测试
测试拉丁超立方设计、单算例生成、并发执行器与多工况数据集输出
"""

import math
import unittest

import numpy as np
import pytest

from canonical.errors import InvalidArgumentError, NumericError
from canonical.models import ShapeKind, SplitTag
from data.case_generator import CaseGenerator, dataset_filename
from dataio import DatasetReader
from orchestrator import generate_dataset
from orchestrator.executor import Executor, build_error_spec
from tests.conftest import tiny_gen_config, tiny_run_config


class TestCaseDesign(unittest.TestCase):
    """测试拉丁超立方设计"""

    def test_design_is_deterministic(self):
        """测试相同种子得到相同设计，不同种子不同"""
        print("\n=== 测试设计点确定性 ===")
        a = CaseGenerator(tiny_gen_config(n_cases=20)).design()
        b = CaseGenerator(tiny_gen_config(n_cases=20)).design()
        c = CaseGenerator(tiny_gen_config(n_cases=20, seed=1)).design()
        self.assertEqual(a, b)
        self.assertNotEqual([d.alpha for d in a], [d.alpha for d in c])
        self.assertEqual([d.case_id for d in a], [f"case_{i:04d}" for i in range(20)])
        print(f"✓ 设计点 {len(a)} 个")

    def test_alpha_is_stratified(self):
        """测试攻角覆盖 [0°, 4°] 的每个分层恰好一次"""
        n = 16
        designs = CaseGenerator(tiny_gen_config(n_cases=n)).design()
        alphas = np.array([math.degrees(d.alpha) for d in designs])
        self.assertTrue(np.all((alphas >= 0.0) & (alphas <= 4.0)))
        bins = np.floor(alphas / 4.0 * n).astype(int)
        self.assertEqual(sorted(np.minimum(bins, n - 1).tolist()), list(range(n)))

    def test_shapes_and_ranges(self):
        """测试几何族取自配置且参数落在范围内"""
        cfg = tiny_gen_config(n_cases=30, shapes=["sphere", "ellipsoid", "wing"])
        designs = CaseGenerator(cfg).design()
        kinds = {d.params.kind for d in designs}
        self.assertEqual(kinds, {ShapeKind.SPHERE, ShapeKind.ELLIPSOID, ShapeKind.WING})
        for d in designs:
            if d.params.kind == ShapeKind.SPHERE:
                self.assertTrue(cfg.radius_range[0] <= d.params.radius <= cfg.radius_range[1])
            elif d.params.kind == ShapeKind.ELLIPSOID:
                self.assertTrue(all(cfg.semi_axis_range[0] <= x <= cfg.semi_axis_range[1] for x in d.params.semi_axes))

    def test_zero_cases(self):
        """测试 N=0 时报错"""
        with self.assertRaises(InvalidArgumentError):
            CaseGenerator(tiny_gen_config(n_cases=0)).design()


class TestBuildCase(unittest.TestCase):
    """测试单算例生成"""

    def setUp(self):
        self.gen = CaseGenerator(tiny_gen_config())
        self.design = self.gen.design()[2]

    def test_point_sets_and_fields_aligned(self):
        """测试两套离散的点数、对齐与 f32 取整"""
        print("\n=== 测试单算例生成 ===")
        case = self.gen.build_case(self.design, "0.5")
        self.assertEqual(case.solution_surface.count, 128)
        self.assertEqual(case.cad_surface.count, 64)
        self.assertEqual(case.solution_volume.count, 256)
        self.assertLessEqual(case.cad_volume.count, 64)
        self.assertEqual(case.flow.alpha, self.design.alpha)
        positions = case.solution_surface.positions
        np.testing.assert_array_equal(positions, positions.astype(np.float32).astype(np.float64))
        bbox = case.solution_volume.bbox
        self.assertTrue(np.all(case.solution_volume.positions >= bbox[0]))
        self.assertTrue(np.all(case.solution_volume.positions <= bbox[1]))
        print(f"✓ 算例 {case.case_id}: {case.shape.kind.value}")

    def test_build_is_deterministic(self):
        """测试同一设计点重复生成逐位一致"""
        a = self.gen.build_case(self.design, "0.85")
        b = self.gen.build_case(self.design, "0.85")
        np.testing.assert_array_equal(a.solution_surface.positions, b.solution_surface.positions)
        np.testing.assert_array_equal(a.solution_fields.velocity, b.solution_fields.velocity)

    def test_regime_changes_fields_not_geometry(self):
        """测试不同工况共享几何、流场不同"""
        a = self.gen.build_case(self.design, "0.5")
        b = self.gen.build_case(self.design, "0.85")
        np.testing.assert_array_equal(a.solution_surface.positions, b.solution_surface.positions)
        self.assertGreater(np.abs(a.solution_fields.surface_pressure - b.solution_fields.surface_pressure).max(), 0.0)


class TestExecutor(unittest.TestCase):
    """测试并发执行器"""

    def test_order_and_partial_failure(self):
        """测试结果按设计点顺序返回，单个失败被收集为 ErrorSpec"""
        print("\n=== 测试执行器部分失败 ===")
        gen = CaseGenerator(tiny_gen_config())
        designs = gen.design()[:4]

        def build(design):
            if design.index == 1:
                raise NumericError("流场出现 NaN")
            return gen.build_case(design, "0.5")

        result = Executor(num_workers=3).execute(designs, build)
        self.assertEqual([c.case_id for c in result.cases], ["case_0000", "case_0002", "case_0003"])
        self.assertEqual(result.status, "degraded")
        (spec,) = result.errors
        self.assertEqual((spec.error_code, spec.error_class, spec.case_id), ("E-NUMERIC", "numeric", "case_0001"))
        self.assertEqual(result.metrics["fail_count"], 1)
        self.assertEqual(result.metrics["error_class_counts"], {"numeric": 1})
        print(f"✓ 成功 {result.metrics['success_count']}，失败 {result.metrics['fail_count']}")

    def test_error_spec_for_unknown_exception(self):
        spec = build_error_spec(RuntimeError("boom"))
        self.assertEqual((spec.error_code, spec.severity), ("E-UNKNOWN", "critical"))


def test_generate_two_regimes_share_split(tmp_path):
    """两个工况各写一个文件，共享算例 ID、几何与划分"""
    gen = tiny_gen_config(regimes=["0.5", "0.85"])
    paths = generate_dataset(tiny_run_config(gen=gen), tmp_path, num_workers=2)
    assert [p.name for p in paths] == [dataset_filename("0.5"), dataset_filename("0.85")]

    low, high = DatasetReader(paths[0]), DatasetReader(paths[1])
    assert low.ids() == high.ids()
    for tag in (SplitTag.TRAIN, SplitTag.VAL, SplitTag.TEST):
        assert low.ids(tag) == high.ids(tag)
    assert low.manifest.generator["regime"] == "0.5"
    a, b = low.read("case_0000"), high.read("case_0000")
    np.testing.assert_array_equal(a.solution_surface.positions, b.solution_surface.positions)


def test_generation_is_reproducible(tmp_path, tiny_dataset):
    """相同配置两次生成的文件逐字节一致（与线程数无关）"""
    (path,) = generate_dataset(tiny_run_config(), tmp_path, num_workers=1)
    assert path.read_bytes() == tiny_dataset.read_bytes()


def test_too_few_cases_for_split(tmp_path):
    with pytest.raises(InvalidArgumentError):
        generate_dataset(tiny_run_config(gen=tiny_gen_config(n_cases=5)), tmp_path, num_workers=1)


if __name__ == "__main__":
    unittest.main(verbosity=2)
