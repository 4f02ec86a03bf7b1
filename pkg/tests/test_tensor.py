"""
张量引擎单元测试
测试前向数值、反向传播与中心差分梯度检查
"""

import unittest

import numpy as np

from canonical.errors import ConfigError, InvalidArgumentError, NumericError, ShapeError
from tensor import Tape, Tensor, gradcheck, no_grad, ops, weighted_sum_loss

_TOL = 1e-6


def _leaf(rng: np.random.Generator, *shape) -> Tensor:
    return Tensor(rng.standard_normal(shape), requires_grad=True)


class TestForward(unittest.TestCase):
    """测试前向数值"""

    def test_gelu_values(self):
        """测试 gelu(0) = 0，gelu(10) ≈ 10"""
        print("\n=== 测试 GELU ===")
        y = ops.gelu(Tensor(np.array([0.0, 10.0, -10.0])))
        self.assertEqual(y.data[0], 0.0)
        self.assertAlmostEqual(y.data[1], 10.0, places=9)
        self.assertAlmostEqual(y.data[2], 0.0, places=9)
        print(f"✓ gelu = {y.data.tolist()}")

    def test_layernorm_constant_row(self):
        """测试常数行归一化后为 0，随机行均值 0 方差约 1"""
        x = Tensor(np.array([[3.0, 3.0, 3.0, 3.0], [1.0, 2.0, 3.0, 4.0]]))
        y = ops.layernorm(x)
        np.testing.assert_array_equal(y.data[0], np.zeros(4))
        self.assertAlmostEqual(y.data[1].mean(), 0.0, places=12)
        self.assertAlmostEqual(y.data[1].var(), 1.0, places=5)

    def test_attention_single_key(self):
        """测试只有一个键时输出等于该值向量"""
        print("\n=== 测试单键注意力 ===")
        rng = np.random.default_rng(0)
        q = Tensor(rng.standard_normal((5, 4)))
        k = Tensor(rng.standard_normal((1, 4)))
        v = Tensor(rng.standard_normal((1, 4)))
        out = ops.attention(q, k, v, heads=2)
        np.testing.assert_allclose(out.data, np.repeat(v.data, 5, axis=0), rtol=0, atol=1e-15)
        print("✓ 单键注意力输出正确")

    def test_attention_key_permutation_invariance(self):
        """测试同时置换键与值不改变输出"""
        rng = np.random.default_rng(1)
        q = Tensor(rng.standard_normal((3, 6)))
        k = rng.standard_normal((7, 6))
        v = rng.standard_normal((7, 6))
        perm = rng.permutation(7)
        a = ops.attention(q, Tensor(k), Tensor(v), heads=3)
        b = ops.attention(q, Tensor(k[perm]), Tensor(v[perm]), heads=3)
        np.testing.assert_allclose(a.data, b.data, rtol=0, atol=1e-12)

    def test_attention_errors(self):
        """测试注意力的维度与空键集合校验"""
        x = Tensor(np.ones((2, 6)))
        with self.assertRaises(ConfigError):
            ops.attention(x, x, x, heads=4)
        with self.assertRaises(InvalidArgumentError):
            empty = Tensor(np.zeros((0, 6)))
            ops.attention(x, empty, empty, heads=2)
        with self.assertRaises(ShapeError):
            ops.linear(x, Tensor(np.ones((5, 3))))

    def test_non_finite_rejected(self):
        """测试非有限值立即报错"""
        with self.assertRaises(NumericError):
            Tensor(np.array([1.0, np.nan]))


class TestBackward(unittest.TestCase):
    """测试反向传播"""

    def test_sum_gradient_is_ones(self):
        """测试 sum 的梯度为全 1"""
        print("\n=== 测试 sum 反向 ===")
        x = Tensor(np.arange(6.0).reshape(2, 3), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum(x)
        grads = tape.backward(loss)
        np.testing.assert_array_equal(grads[x.node_id], np.ones((2, 3)))
        np.testing.assert_array_equal(x.grad, np.ones((2, 3)))
        print("✓ 梯度为全 1")

    def test_non_scalar_loss(self):
        """测试非标量 loss 报错"""
        x = Tensor(np.ones(3), requires_grad=True)
        with Tape() as tape:
            y = ops.mul(x, 2.0)
        with self.assertRaises(InvalidArgumentError):
            tape.backward(y)

    def test_shared_input_accumulates(self):
        """测试同一叶子被多次使用时梯度累加"""
        x = Tensor(np.array([1.0, 2.0]), requires_grad=True)
        with Tape() as tape:
            loss = ops.sum(ops.add(ops.mul(x, x), x))
        grads = tape.backward(loss)
        np.testing.assert_allclose(grads[x.node_id], 2.0 * x.data + 1.0)

    def test_no_grad_records_nothing(self):
        """测试 no_grad 内不记录计算图"""
        x = Tensor(np.ones((2, 2)), requires_grad=True)
        with Tape() as tape:
            with no_grad():
                ops.gelu(x)
            self.assertEqual(len(tape), 0)


class TestGradcheck(unittest.TestCase):
    """测试各操作的梯度与中心差分一致"""

    def setUp(self):
        self.rng = np.random.default_rng(42)

    def _check(self, build, inputs):
        result = gradcheck(lambda: weighted_sum_loss(build()), inputs)
        self.assertTrue(result.passed(_TOL), f"梯度误差 {result.errors}")
        return result

    def test_linear(self):
        """测试 linear 梯度"""
        x, w, b = _leaf(self.rng, 4, 3), _leaf(self.rng, 3, 5), _leaf(self.rng, 5)
        self._check(lambda: ops.linear(x, w, b), [x, w, b])

    def test_layernorm(self):
        """测试 layernorm 梯度"""
        x, g, b = _leaf(self.rng, 3, 6), _leaf(self.rng, 6), _leaf(self.rng, 6)
        self._check(lambda: ops.layernorm(x, g, b), [x, g, b])

    def test_gelu_and_softmax(self):
        """测试 gelu 与 softmax 梯度"""
        x = _leaf(self.rng, 4, 5)
        self._check(lambda: ops.softmax(ops.gelu(x)), [x])

    def test_attention(self):
        """测试多头注意力梯度"""
        print("\n=== 测试注意力梯度 ===")
        q, k, v = _leaf(self.rng, 3, 4), _leaf(self.rng, 5, 4), _leaf(self.rng, 5, 4)
        result = self._check(lambda: ops.attention(q, k, v, heads=2), [q, k, v])
        print(f"✓ 最大相对误差 {result.max_error:.2e}")

    def test_indexing_and_concat(self):
        """测试 take_rows / slice_cols / concat 梯度"""
        a, b = _leaf(self.rng, 3, 4), _leaf(self.rng, 2, 4)
        rows = np.array([0, 2, 2, 4])
        self._check(lambda: ops.slice_cols(ops.take_rows(ops.concat([a, b]), rows), 1, 3), [a, b])


if __name__ == "__main__":
    unittest.main(verbosity=2)
