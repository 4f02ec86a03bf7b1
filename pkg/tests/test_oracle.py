"""
真值流场单元测试
球绕流势流解析解的驻点/侧缘压力、远场与无穿透条件，以及参数化流场族的有界性
"""

import math
import unittest

import numpy as np

from canonical.errors import InvalidArgumentError
from canonical.models import FieldModel, FlowConditions, ShapeKind, ShapeParams, SurfacePointSet, VolumePointSet
from geometry import build_shape, make_surface, make_volume_points
from oracle import evaluate_fields, family_fields, potential_flow_sphere
from oracle.potential_flow import sphere_velocity

_BBOX = np.array([[-3.0, -3.0, -3.0], [3.0, 3.0, 3.0]])


def _points(positions) -> SurfacePointSet:
    positions = np.asarray(positions, dtype=np.float64)
    normals = positions / np.linalg.norm(positions, axis=1, keepdims=True)
    return SurfacePointSet(positions=positions, normals=normals, areas=np.ones(len(positions)))


class TestPotentialFlowSphere(unittest.TestCase):
    """测试球绕流势流解"""

    def setUp(self):
        self.params = ShapeParams(kind=ShapeKind.SPHERE, radius=1.0)
        self.cond = FlowConditions(density=1.2, speed=20.0, alpha=0.0)
        self.q = 0.5 * self.cond.density * self.cond.speed ** 2

    def test_stagnation_and_shoulder_pressure(self):
        """测试驻点 C_p = 1，θ = π/2 处 C_p = −1.25"""
        print("\n=== 测试驻点与侧缘压力 ===")
        surface = _points([[-1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]])
        volume = VolumePointSet(positions=np.array([[2.0, 0.0, 0.0]]), bbox=_BBOX)
        fields = potential_flow_sphere(surface, volume, self.cond, params=self.params)
        cp = fields.surface_pressure / self.q

        self.assertAlmostEqual(cp[0], 1.0, places=12)
        self.assertAlmostEqual(cp[1], -1.25, places=12)
        self.assertAlmostEqual(cp[2], 1.0, places=12)
        print(f"✓ C_p = {cp.tolist()}")

    def test_far_field_recovers_free_stream(self):
        """测试 r = 100a 处速度回到来流（误差 ≤ 1e-4·V）"""
        print("\n=== 测试远场 ===")
        rng = np.random.default_rng(0)
        directions = rng.standard_normal((64, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        u = sphere_velocity(100.0 * directions, 1.0, np.array([1.0, 0.0, 0.0]), self.cond.speed)
        error = np.abs(u - np.array([self.cond.speed, 0.0, 0.0])).max()
        self.assertLessEqual(error, 1e-4 * self.cond.speed)
        print(f"✓ 远场最大偏差 {error:.2e}")

    def test_no_penetration_on_surface(self):
        """测试物面无穿透：u·n = 0"""
        surface = make_surface(self.params, 512, seed=0)
        direction = np.array([math.cos(0.05), 0.0, math.sin(0.05)])
        u = sphere_velocity(surface.positions, 1.0, direction, self.cond.speed)
        normal = np.einsum("ij,ij->i", u, surface.normals)
        self.assertLess(np.abs(normal).max(), 1e-10 * self.cond.speed)

    def test_bernoulli_and_tangential_shear(self):
        """测试体压力满足伯努利关系，壁面剪切与法向正交"""
        print("\n=== 测试伯努利关系与剪切切向性 ===")
        surface = make_surface(self.params, 256, seed=1)
        volume = make_volume_points(self.params, _BBOX, 200, seed=1)
        fields = potential_flow_sphere(surface, volume, self.cond)

        total = fields.volume_pressure + 0.5 * self.cond.density * np.einsum("ij,ij->i", fields.velocity, fields.velocity)
        np.testing.assert_allclose(total, self.q, rtol=1e-12)
        tau_n = np.einsum("ij,ij->i", fields.wall_shear, surface.normals)
        self.assertLess(np.abs(tau_n).max(), 1e-12)
        print("✓ 伯努利常数一致，剪切无法向分量")

    def test_alpha_field_is_rotated_zero_alpha_field(self):
        """测试 α=4° 的解等于把点旋转到来流坐标系后的 α=0 解（矢量再转回）"""
        print("\n=== 测试攻角坐标系一致性 ===")
        alpha = math.radians(4.0)
        c, s = math.cos(alpha), math.sin(alpha)
        rot = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
        wide = np.array([[-5.0] * 3, [5.0] * 3])

        surface = make_surface(self.params, 512, seed=4)
        volume = make_volume_points(self.params, np.array([[-2.0] * 3, [2.0] * 3]), 256, seed=4)
        surface0 = SurfacePointSet(positions=surface.positions @ rot, normals=surface.normals @ rot, areas=surface.areas)
        volume0 = VolumePointSet(positions=volume.positions @ rot, bbox=wide)

        cond = FlowConditions(density=self.cond.density, speed=self.cond.speed, alpha=alpha)
        cond0 = FlowConditions(density=self.cond.density, speed=self.cond.speed, alpha=0.0)
        fields = potential_flow_sphere(surface, volume, cond, params=self.params)
        fields0 = potential_flow_sphere(surface0, volume0, cond0, params=self.params)

        np.testing.assert_allclose(fields.surface_pressure, fields0.surface_pressure, rtol=0, atol=1e-9)
        np.testing.assert_allclose(fields.volume_pressure, fields0.volume_pressure, rtol=0, atol=1e-9)
        np.testing.assert_allclose(fields.velocity, fields0.velocity @ rot.T, rtol=0, atol=1e-9)
        np.testing.assert_allclose(fields.wall_shear, fields0.wall_shear @ rot.T, rtol=0, atol=1e-9)
        print("✓ 旋转前后流场一致")

    def test_rejects_non_sphere(self):
        """测试非球体几何被拒绝"""
        params = ShapeParams(kind=ShapeKind.ELLIPSOID, semi_axes=(1.0, 0.5, 0.5))
        surface = make_surface(params, 64)
        volume = make_volume_points(params, _BBOX, 16)
        with self.assertRaises(InvalidArgumentError):
            evaluate_fields(FieldModel.POTENTIAL, params, self.cond, surface, volume)


class TestFamilyFields(unittest.TestCase):
    """测试参数化流场族"""

    def _case(self, params: ShapeParams, regime: str, alpha_deg: float):
        shape = build_shape(params)
        bounds = shape.bounds()
        pad = 0.5 * float((bounds[1] - bounds[0]).max())
        bbox = np.stack([bounds[0] - pad, bounds[1] + pad])
        surface = make_surface(params, 512, seed=2)
        volume = make_volume_points(params, bbox, 256, seed=2)
        cond = FlowConditions(alpha=math.radians(alpha_deg), regime=regime)
        return surface, volume, cond

    def test_fields_bounded_and_tangential(self):
        """测试 |p| ≤ ρv² 且壁面剪切位于切平面内"""
        print("\n=== 测试流场族有界性 ===")
        shapes = [
            ShapeParams(kind=ShapeKind.SPHERE, radius=0.5),
            ShapeParams(kind=ShapeKind.ELLIPSOID, semi_axes=(0.7, 0.3, 0.25)),
            ShapeParams(kind=ShapeKind.WING, aspect_ratio=6.0, sweep_deg=20.0, root_twist_deg=1.0),
        ]
        for params in shapes:
            for regime in ("0.5", "0.85"):
                surface, volume, cond = self._case(params, regime, 3.0)
                fields = family_fields(params, cond, surface, volume)
                bound = cond.density * cond.speed ** 2
                self.assertLessEqual(np.abs(fields.surface_pressure).max(), bound)
                self.assertLessEqual(np.abs(fields.volume_pressure).max(), bound)
                tau_n = np.einsum("ij,ij->i", fields.wall_shear, surface.normals)
                self.assertLess(np.abs(tau_n).max(), 1e-10)
            print(f"✓ {params.kind.value} 两个工况均有界")

    def test_alpha_changes_fields(self):
        """测试攻角改变流场"""
        params = ShapeParams(kind=ShapeKind.ELLIPSOID, semi_axes=(0.7, 0.3, 0.25))
        surface, volume, cond0 = self._case(params, "0.5", 0.0)
        cond4 = FlowConditions(alpha=math.radians(4.0), regime="0.5")
        f0 = family_fields(params, cond0, surface, volume)
        f4 = family_fields(params, cond4, surface, volume)
        self.assertGreater(np.abs(f0.surface_pressure - f4.surface_pressure).max(), 0.0)

    def test_unknown_regime(self):
        """测试未知工况标签报错"""
        params = ShapeParams(kind=ShapeKind.SPHERE, radius=0.5)
        surface, volume, _ = self._case(params, "0.5", 0.0)
        with self.assertRaises(InvalidArgumentError):
            family_fields(params, FlowConditions(regime="2.0"), surface, volume)


if __name__ == "__main__":
    unittest.main(verbosity=2)
