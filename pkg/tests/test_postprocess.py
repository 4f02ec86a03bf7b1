"""
后处理单元测试
测试气动力积分、误差指标、剖面切片、算例排序、表格与绘图输出
"""

import math
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pytest

from canonical.errors import EmptySliceError, InvalidArgumentError, ShapeError, UndefinedRatioError
from canonical.models import FlowConditions, ShapeKind, ShapeParams, SurfacePointSet, VolumePointSet
from geometry import build_shape, make_surface, make_volume_points
from oracle import potential_flow_sphere
from postprocess import (
    ErrorAccumulator,
    affine_fit,
    flow_directions,
    integrate_forces,
    pressure_profile,
    r2_score,
    rank_cases,
    relative_errors,
    velocity_slice,
)
from postprocess.plots import scatter_plot
from postprocess.tables import write_force_table

_DESK_WING = ShapeParams(kind=ShapeKind.WING, aspect_ratio=8.0, sweep_deg=25.0, root_twist_deg=2.0)


def _potential_flow_forces(params: ShapeParams, n: int, cond: FlowConditions):
    """n 点球面上势流表面压力（不含剪切）的积分气动力"""
    surface = make_surface(params, n, seed=0)
    volume = VolumePointSet(positions=np.array([[2.0, 0.0, 0.0]]), bbox=np.array([[-3.0] * 3, [3.0] * 3]))
    fields = potential_flow_sphere(surface, volume, cond, params=params)
    return integrate_forces(surface, fields.surface_pressure, np.zeros((surface.count, 3)), cond)


class TestForces(unittest.TestCase):
    """测试气动力积分"""

    def setUp(self):
        self.params = ShapeParams(kind=ShapeKind.SPHERE, radius=1.0)
        self.surface = make_surface(self.params, 4096, seed=0)

    def test_flow_directions_orthonormal(self):
        """测试来流/阻力/升力方向正交归一，α=0 时升力沿 +z"""
        print("\n=== 测试气动力方向 ===")
        for alpha in (0.0, math.radians(2.0), math.radians(4.0)):
            dirs = flow_directions(alpha)
            self.assertAlmostEqual(float(np.linalg.norm(dirs.drag)), 1.0, places=14)
            self.assertAlmostEqual(float(np.linalg.norm(dirs.lift)), 1.0, places=14)
            self.assertAlmostEqual(float(dirs.drag @ dirs.lift), 0.0, places=14)
        np.testing.assert_allclose(flow_directions(0.0).lift, [0.0, 0.0, 1.0], atol=1e-15)
        print("✓ 方向正交归一")

    def test_linearity_and_gauge(self):
        """测试力对 (p, τ) 线性，绝对压力减去 p_∞ 后与表压一致"""
        rng = np.random.default_rng(1)
        n = self.surface.count
        p1, p2 = rng.standard_normal(n), rng.standard_normal(n)
        t1, t2 = rng.standard_normal((n, 3)), rng.standard_normal((n, 3))
        cond = FlowConditions()

        f1 = integrate_forces(self.surface, p1, t1, cond)
        f2 = integrate_forces(self.surface, p2, t2, cond)
        f12 = integrate_forces(self.surface, 2.0 * p1 + p2, 2.0 * t1 + t2, cond)
        np.testing.assert_allclose(f12.force, 2.0 * np.array(f1.force) + np.array(f2.force), atol=1e-9)

        absolute = integrate_forces(self.surface, p1 + cond.p_inf, t1, cond, absolute_pressure=True)
        np.testing.assert_allclose(absolute.force, f1.force, atol=1e-6)

    def test_potential_flow_has_no_pressure_drag(self):
        """测试 n=16384 时球绕流势流解的压力阻力 ≤ 1e-2·½ρv²πa²"""
        print("\n=== 测试势流零阻力 ===")
        cond = FlowConditions(density=1.2, speed=20.0, reference_area=math.pi)
        report = _potential_flow_forces(self.params, 16384, cond)
        bound = 1e-2 * cond.dynamic_pressure * math.pi
        self.assertLessEqual(abs(report.drag), bound)
        self.assertLess(abs(report.cl), 0.02)
        print(f"✓ C_d={report.cd:.2e}, C_l={report.cl:.2e}")

    def test_shape_mismatch(self):
        """测试数组长度与点数不一致时报错"""
        with self.assertRaises(ShapeError):
            integrate_forces(self.surface, np.zeros(3), np.zeros((3, 3)), FlowConditions())


class TestMetrics(unittest.TestCase):
    """测试误差指标"""

    def test_relative_errors(self):
        """测试相对误差：完美预测为 0，预测翻倍为 1"""
        print("\n=== 测试相对误差 ===")
        y = np.array([1.0, -2.0, 3.0, 0.5])
        self.assertEqual(relative_errors(y, y), (0.0, 0.0))
        l1, l2 = relative_errors(2.0 * y, y)
        self.assertAlmostEqual(l1, 1.0, places=14)
        self.assertAlmostEqual(l2, 1.0, places=14)
        with self.assertRaises(UndefinedRatioError):
            relative_errors(y, np.zeros(4))
        print("✓ 相对误差正确")

    def test_r2_score(self):
        """测试 R²：完美预测为 1，常数均值预测为 0"""
        y = np.array([1.0, 2.0, 4.0, 7.0])
        self.assertEqual(r2_score(y, y), 1.0)
        self.assertAlmostEqual(r2_score(np.full(4, y.mean()), y), 0.0, places=14)
        with self.assertRaises(UndefinedRatioError):
            r2_score([1.0, 2.0], [3.0, 3.0])
        with self.assertRaises(InvalidArgumentError):
            r2_score([1.0], [1.0])

    def test_accumulator_matches_pooled(self):
        """测试跨算例累加结果等于拼接后一次计算"""
        rng = np.random.default_rng(2)
        targets = [rng.standard_normal((5, 3)), rng.standard_normal((8, 3))]
        preds = [t + 0.1 * rng.standard_normal(t.shape) for t in targets]
        acc = ErrorAccumulator()
        for p, t in zip(preds, targets):
            acc.add("velocity", p, t)
        pooled = relative_errors(np.concatenate(preds), np.concatenate(targets))
        np.testing.assert_allclose(acc.relative("velocity"), pooled, rtol=1e-12)
        mae = np.abs(np.concatenate(preds) - np.concatenate(targets)).mean()
        self.assertAlmostEqual(acc.mae()["velocity"], mae, places=14)
        self.assertEqual(acc.points["velocity"], 13)

    def test_affine_fit(self):
        """测试直线拟合精确恢复斜率与截距"""
        x = np.array([16.0, 64.0, 256.0, 1024.0])
        slope, intercept, r2 = affine_fit(x, 2.0 * x + 1.0)
        self.assertAlmostEqual(slope, 2.0, places=10)
        self.assertAlmostEqual(intercept, 1.0, places=8)
        self.assertAlmostEqual(r2, 1.0, places=12)


class TestRanking(unittest.TestCase):
    """测试算例排序"""

    def test_best_median_worst(self):
        """测试误差相同时按 ID 排序，中位数取 ⌊(k−1)/2⌋"""
        ranking = rank_cases({"a": 0.3, "b": 0.1, "c": 0.2, "d": 0.2})
        self.assertEqual(ranking.ordered, ("b", "c", "d", "a"))
        self.assertEqual(ranking.as_dict(), {"best": "b", "median": "c", "worst": "a"})
        with self.assertRaises(InvalidArgumentError):
            rank_cases({})


class TestProfiles(unittest.TestCase):
    """测试剖面与切片"""

    def test_wing_pressure_profile(self):
        """测试机翼展向站位剖面：上下表面非空，x/c 升序且位于 [0, 1]"""
        print("\n=== 测试机翼压力剖面 ===")
        params = ShapeParams(kind=ShapeKind.WING, aspect_ratio=8.0, sweep_deg=25.0, root_twist_deg=2.0)
        surface = make_surface(params, 4096, seed=3)
        p = surface.positions[:, 0].copy()
        profile = pressure_profile(surface, p, span_fraction=0.5, band=0.05, params=params)

        for curve in (profile.upper, profile.lower):
            self.assertGreater(curve.index.size, 0)
            self.assertTrue(np.all(np.diff(curve.x_c) >= 0))
            self.assertTrue(np.all((curve.x_c > -1e-6) & (curve.x_c < 1.0 + 1e-6)))
            np.testing.assert_array_equal(curve.pressure, p[curve.index])
            self.assertTrue(np.all(np.abs(surface.positions[curve.index, 1] - profile.y_station) <= 0.05))
        print(f"✓ 剖面点数 {profile.count}")

    def test_band_covering_wing_returns_all_points(self):
        """测试切片带覆盖整个机翼时返回全部点，且上下表面互不重叠"""
        surface = make_surface(_DESK_WING, 8192, seed=3)
        semi_span = build_shape(_DESK_WING).semi_span
        profile = pressure_profile(surface, np.zeros(surface.count), span_fraction=0.0, band=2.0 * semi_span, params=_DESK_WING)
        self.assertEqual(profile.count, surface.count)
        both = np.concatenate([profile.upper.index, profile.lower.index])
        np.testing.assert_array_equal(np.sort(both), np.arange(surface.count))
        self.assertTrue(np.all(surface.normals[profile.upper.index, 2] >= 0.0))
        self.assertTrue(np.all(surface.normals[profile.lower.index, 2] < 0.0))

    def test_symmetric_pressure_gives_symmetric_curves(self):
        """测试关于半弦长对称的压力分布：上下表面曲线相同且关于 x/c=0.5 镜像对称"""
        print("\n=== 测试对称压力剖面 ===")
        surface = make_surface(_DESK_WING, 8192, seed=3)
        _, x_c, _ = build_shape(_DESK_WING).local_coordinates(surface.positions)
        p = (x_c - 0.5) ** 2
        profile = pressure_profile(surface, p, span_fraction=0.5, band=0.05, params=_DESK_WING)
        upper, lower = profile.upper, profile.lower

        mirrored = 1.0 - upper.x_c
        inside = (mirrored >= lower.x_c[0]) & (mirrored <= lower.x_c[-1])
        self.assertGreater(int(inside.sum()), 0)
        np.testing.assert_allclose(np.interp(mirrored[inside], lower.x_c, lower.pressure), upper.pressure[inside], atol=5e-3)
        inside = (upper.x_c >= lower.x_c[0]) & (upper.x_c <= lower.x_c[-1])
        np.testing.assert_allclose(np.interp(upper.x_c[inside], lower.x_c, lower.pressure), upper.pressure[inside], atol=5e-3)
        print("✓ 上下表面曲线对称")

    def test_desk_wing_stations_are_populated(self):
        """测试 8192 点机翼在 15%/50%/95% 半展长站位的剖面均非空"""
        surface = make_surface(_DESK_WING, 8192, seed=3)
        p = surface.positions[:, 0].copy()
        for span in (0.15, 0.50, 0.95):
            profile = pressure_profile(surface, p, span_fraction=span, band=0.05, params=_DESK_WING)
            self.assertGreater(profile.upper.index.size, 0, f"span={span}")
            self.assertGreater(profile.lower.index.size, 0, f"span={span}")

    def test_empty_surface_slice(self):
        """测试站位附近没有点时报错"""
        positions = np.array([[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [0.0, -1.0, 0.0]])
        surface = SurfacePointSet(positions=positions, normals=positions.copy(), areas=np.ones(3))
        with self.assertRaises(EmptySliceError):
            pressure_profile(surface, np.zeros(3), span_fraction=0.5, band=0.1)
        with self.assertRaises(InvalidArgumentError):
            pressure_profile(surface, np.zeros(3), span_fraction=1.5, band=0.1)

    def test_velocity_slice(self):
        """测试速度切片只包含平面附近的体点"""
        params = ShapeParams(kind=ShapeKind.SPHERE, radius=0.5)
        bbox = np.array([[-2.0] * 3, [2.0] * 3])
        volume = make_volume_points(params, bbox, 2000, seed=4)
        velocity = np.tile([1.0, 0.0, 0.0], (volume.count, 1)) * volume.positions[:, :1]
        cut = velocity_slice(volume, velocity, y0=0.0, band=0.1)
        self.assertGreater(cut.index.size, 0)
        self.assertTrue(np.all(np.abs(volume.positions[cut.index, 1]) <= 0.1))
        np.testing.assert_array_equal(cut.u_x, cut.x)
        with self.assertRaises(EmptySliceError):
            velocity_slice(volume, velocity, y0=10.0, band=0.1)


class TestOutputs(unittest.TestCase):
    """测试表格与图的确定性"""

    def test_tables_and_plots_are_reproducible(self):
        """测试相同输入两次写出的 CSV 与 SVG 逐字节一致"""
        print("\n=== 测试输出确定性 ===")
        surface = make_surface(ShapeParams(kind=ShapeKind.SPHERE, radius=1.0), 256, seed=5)
        rng = np.random.default_rng(5)
        cond = FlowConditions()
        t = integrate_forces(surface, rng.standard_normal(256), np.zeros((256, 3)), cond)
        p = integrate_forces(surface, rng.standard_normal(256), np.zeros((256, 3)), cond)
        with tempfile.TemporaryDirectory() as tmp:
            outputs = []
            for run in ("a", "b"):
                out = Path(tmp) / run
                table = write_force_table([("case_0000", t, p)], out / "forces.csv")
                figure = scatter_plot([t.drag, 1.0], [p.drag, 2.0], out / "scatter.svg", title="drag", r2=0.5)
                outputs.append((table.read_bytes(), figure.read_bytes()))
            self.assertEqual(outputs[0], outputs[1])
            self.assertTrue(outputs[0][0].startswith(b"case_id,target_drag"))
        print("✓ 输出逐字节一致")


_RESOLUTIONS = [1024, 2048, 4096, 8192, 16384]
_SPHERE = ShapeParams(kind=ShapeKind.SPHERE, radius=1.0)
_COND = FlowConditions(density=1.2, speed=20.0, reference_area=math.pi)


@pytest.mark.parametrize("n", _RESOLUTIONS)
def test_potential_flow_drag_bounded(n):
    """各分辨率下势流压力阻力 |F_drag| ≤ 1e-2·½ρv²πa²"""
    report = _potential_flow_forces(_SPHERE, n, _COND)
    assert abs(report.drag) <= 1e-2 * _COND.dynamic_pressure * math.pi


def test_potential_flow_drag_shrinks_with_resolution():
    """点数每翻一倍，阻力误差不超过上一档的 2 倍（远低于容差的残差忽略）"""
    errors = [abs(_potential_flow_forces(_SPHERE, n, _COND).drag) for n in _RESOLUTIONS]
    floor = 1e-3 * _COND.dynamic_pressure * math.pi
    for coarse, fine in zip(errors, errors[1:]):
        assert fine <= 2.0 * coarse + floor, errors


if __name__ == "__main__":
    unittest.main(verbosity=2)
