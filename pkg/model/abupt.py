"""
AB-UPT 双分支锚点 Transformer

表面/体两个分支各 depth 个 pre-norm block：block 0 为分支内自注意力，之后与分支间交叉注意力交替
（交叉 block 中每个分支的锚点以另一分支在该 block 输入处的锚点状态为键值）。
查询点经过同一组 block，但每一步注意力只读取锚点的键值，不读其他查询，也不作为锚点的键值。
因此锚点输出与查询集合无关，查询之间互相独立。
每个 block 由攻角条件嵌入产生 (shift, scale, gate) 调制，gate 零初始化。
"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Tuple

import numpy as np
from loguru import logger

from canonical.errors import InvalidArgumentError, ShapeError
from canonical.models import ModelConfig
from model.embedding import PositionEmbedding, condition_features
from model.params import BRANCHES, block_prefix, count_parameters, init_parameters, is_cross_block, parameter_shapes
from tensor import ops
from tensor.ops import AttentionWeights
from tensor.tensor import Tensor, get_default_dtype, no_grad

ANCHOR = "anchor"
QUERY = "query"


def _other(branch: str) -> str:
    return "volume" if branch == "surface" else "surface"


def _points(value: Optional[np.ndarray], name: str) -> np.ndarray:
    if value is None:
        return np.zeros((0, 3))
    arr = np.asarray(value, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ShapeError(f"{name} 应为 (n, 3)，实际 {arr.shape}")
    return arr


@dataclass
class TokenBatch:
    """
    一次前向的 token 集合

    锚点在两个域都必须非空；查询可以为空（训练时通常不使用查询）
    """

    surface_anchors: np.ndarray
    volume_anchors: np.ndarray
    bounds: np.ndarray
    alpha: float = 0.0
    surface_queries: Optional[np.ndarray] = None
    volume_queries: Optional[np.ndarray] = None

    def __post_init__(self):
        self.surface_anchors = _points(self.surface_anchors, "surface_anchors")
        self.volume_anchors = _points(self.volume_anchors, "volume_anchors")
        self.surface_queries = _points(self.surface_queries, "surface_queries")
        self.volume_queries = _points(self.volume_queries, "volume_queries")
        self.bounds = np.asarray(self.bounds, dtype=np.float64)
        if self.bounds.shape != (2, 3) or not np.all(self.bounds[1] > self.bounds[0]):
            raise ShapeError("bounds 应为 (2, 3) 且上界大于下界")
        if len(self.surface_anchors) == 0 or len(self.volume_anchors) == 0:
            raise InvalidArgumentError("表面与体锚点都不能为空")
        if not math.isfinite(self.alpha):
            raise InvalidArgumentError("攻角必须为有限值")

    def anchors(self, branch: str) -> np.ndarray:
        return self.surface_anchors if branch == "surface" else self.volume_anchors

    def queries(self, branch: str) -> np.ndarray:
        return self.surface_queries if branch == "surface" else self.volume_queries

    def roles(self, branch: str) -> np.ndarray:
        """逐 token 角色标签（锚点在前，查询在后）"""
        return np.array([ANCHOR] * len(self.anchors(branch)) + [QUERY] * len(self.queries(branch)))


class Modulation(NamedTuple):
    """单个 block 的 DiT 调制量，每项形状 (1, dim)"""

    shift_attn: Tensor
    scale_attn: Tensor
    gate_attn: Tensor
    shift_mlp: Tensor
    scale_mlp: Tensor
    gate_mlp: Tensor


@dataclass
class BlockCache:
    """锚点在单个 block 中的键值与调制量"""

    prefix: str
    keys: Tensor
    values: Tensor
    modulation: Optional[Modulation]


@dataclass
class AnchorCache:
    """锚点编码结果：供查询分块解码复用"""

    embedding: PositionEmbedding
    alpha: float
    blocks: Dict[str, List[BlockCache]] = field(default_factory=dict)
    final: Dict[str, Optional[Tuple[Tensor, Tensor]]] = field(default_factory=dict)
    outputs: Dict[str, Tensor] = field(default_factory=dict)


@dataclass
class Prediction:
    """前向输出：锚点与查询的通道预测"""

    surface_anchors: Tensor
    volume_anchors: Tensor
    surface_queries: Optional[Tensor] = None
    volume_queries: Optional[Tensor] = None

    def anchors(self, branch: str) -> Tensor:
        return self.surface_anchors if branch == "surface" else self.volume_anchors

    def queries(self, branch: str) -> Optional[Tensor]:
        return self.surface_queries if branch == "surface" else self.volume_queries

    def full(self, branch: str) -> np.ndarray:
        """锚点在前、查询在后的完整预测"""
        parts = [self.anchors(branch).data]
        q = self.queries(branch)
        if q is not None:
            parts.append(q.data)
        return np.concatenate(parts, axis=0)


class AbUptModel:
    """
    AB-UPT 模型

    Attributes:
        config: 模型配置
        params: 参数名 → 张量
    """

    def __init__(self, config: ModelConfig, params: Optional[Dict[str, np.ndarray]] = None, requires_grad: bool = True):
        self.config = config
        arrays = init_parameters(config) if params is None else params
        expected = parameter_shapes(config)
        missing = sorted(set(expected) - set(arrays))
        extra = sorted(set(arrays) - set(expected))
        if missing or extra:
            raise ShapeError(f"参数名不匹配: 缺少 {missing[:5]}，多余 {extra[:5]}")
        dtype = get_default_dtype()
        self.params: Dict[str, Tensor] = {}
        for name, shape in expected.items():
            value = np.array(arrays[name], dtype=dtype)
            if value.shape != shape:
                raise ShapeError(f"参数 {name} 形状 {value.shape} 应为 {shape}")
            self.params[name] = Tensor(value, requires_grad=requires_grad, name=name)
        logger.debug(f"AB-UPT 模型已构建: {len(self.params)} 个参数张量, {self.count_parameters()} 个标量")

    # ------------------------------------------------------------ 参数访问

    def parameters(self) -> Dict[str, Tensor]:
        return self.params

    def arrays(self) -> Dict[str, np.ndarray]:
        """参数副本"""
        return {name: t.data.copy() for name, t in self.params.items()}

    def with_parameters(self, arrays: Dict[str, np.ndarray], requires_grad: bool = False) -> "AbUptModel":
        """以给定参数构造推理副本（EMA 评估）"""
        return AbUptModel(self.config, params=arrays, requires_grad=requires_grad)

    def count_parameters(self) -> int:
        return count_parameters(self.config)

    # ------------------------------------------------------------ 基本层

    def _linear(self, x: Tensor, name: str) -> Tensor:
        return ops.linear(x, self.params[f"{name}.weight"], self.params[f"{name}.bias"])

    def _norm(self, x: Tensor, name: str) -> Tensor:
        return ops.layernorm(x, self.params[f"{name}.weight"], self.params[f"{name}.bias"], self.config.layernorm_eps)

    def _attn_weights(self, prefix: str) -> AttentionWeights:
        p = self.params
        a = f"{prefix}.attn"
        return AttentionWeights(
            p[f"{a}.q.weight"], p[f"{a}.q.bias"],
            p[f"{a}.k.weight"], p[f"{a}.k.bias"],
            p[f"{a}.v.weight"], p[f"{a}.v.bias"],
            p[f"{a}.o.weight"], p[f"{a}.o.bias"],
        )

    @staticmethod
    def _modulate(x: Tensor, shift: Tensor, scale: Tensor) -> Tensor:
        return ops.add(ops.mul(x, ops.add(scale, 1.0)), shift)

    @staticmethod
    def _residual(x: Tensor, delta: Tensor, gate: Optional[Tensor]) -> Tensor:
        return ops.add(x, delta if gate is None else ops.mul(delta, gate))

    def _embed(self, branch: str, positions: np.ndarray, embedding: PositionEmbedding) -> Tensor:
        return self._linear(Tensor(embedding.features(positions)), f"{branch}.embed")

    # ------------------------------------------------------------ 条件化

    def _condition_embedding(self, alpha: float) -> Optional[Tensor]:
        if not self.config.use_conditioning:
            return None
        features = Tensor(condition_features(alpha, self.config.n_cond_frequencies))
        h = ops.gelu(self._linear(features, "cond.embed.fc1"))
        return ops.gelu(self._linear(h, "cond.embed.fc2"))

    def _modulation(self, cond: Optional[Tensor], prefix: str) -> Optional[Modulation]:
        if cond is None:
            return None
        d = self.config.dim
        m = self._linear(cond, f"{prefix}.ada")
        return Modulation(*(ops.slice_cols(m, i * d, (i + 1) * d) for i in range(6)))

    def condition(self, alpha: float, prefix: str) -> Optional[Modulation]:
        """
        攻角 → 指定 block 的 (shift, scale, gate) 调制量

        条件化关闭时返回 None（等价于 shift=scale=0, gate=1）
        """
        if not math.isfinite(alpha):
            raise InvalidArgumentError("攻角必须为有限值")
        return self._modulation(self._condition_embedding(alpha), prefix)

    def _final_modulation(self, cond: Optional[Tensor], branch: str) -> Optional[Tuple[Tensor, Tensor]]:
        if cond is None:
            return None
        d = self.config.dim
        m = self._linear(cond, f"{branch}.final_ada")
        return ops.slice_cols(m, 0, d), ops.slice_cols(m, d, 2 * d)

    # ------------------------------------------------------------ block

    def _attention_input(self, x: Tensor, prefix: str, mod: Optional[Modulation]) -> Tensor:
        h = self._norm(x, f"{prefix}.norm1")
        return h if mod is None else self._modulate(h, mod.shift_attn, mod.scale_attn)

    def _block_step(self, x: Tensor, h: Tensor, block: BlockCache) -> Tensor:
        """给定注意力输入 h 与锚点键值，完成注意力与 MLP 两个残差子层"""
        mod = block.modulation
        a = ops.attend(h, block.keys, block.values, self._attn_weights(block.prefix), self.config.heads)
        x = self._residual(x, a, None if mod is None else mod.gate_attn)

        h2 = self._norm(x, f"{block.prefix}.norm2")
        if mod is not None:
            h2 = self._modulate(h2, mod.shift_mlp, mod.scale_mlp)
        h2 = self._linear(ops.gelu(self._linear(h2, f"{block.prefix}.mlp.fc1")), f"{block.prefix}.mlp.fc2")
        return self._residual(x, h2, None if mod is None else mod.gate_mlp)

    def _head(self, x: Tensor, branch: str, final: Optional[Tuple[Tensor, Tensor]]) -> Tensor:
        h = self._norm(x, f"{branch}.final_norm")
        if final is not None:
            h = self._modulate(h, final[0], final[1])
        return self._linear(h, f"{branch}.head")

    # ------------------------------------------------------------ 前向

    def encode_anchors(self, batch: TokenBatch) -> AnchorCache:
        """锚点通过全部 block，记录每个 block 的键值供查询解码"""
        embedding = PositionEmbedding(self.config.n_frequencies, batch.bounds)
        cond = self._condition_embedding(batch.alpha)
        cache = AnchorCache(embedding=embedding, alpha=batch.alpha, blocks={b: [] for b in BRANCHES})

        states = {b: self._embed(b, batch.anchors(b), embedding) for b in BRANCHES}
        for index in range(self.config.depth):
            cross = is_cross_block(index)
            updated: Dict[str, Tensor] = {}
            for branch in BRANCHES:
                prefix = block_prefix(self.config, branch, index)
                mod = self._modulation(cond, prefix)
                h = self._attention_input(states[branch], prefix, mod)
                kv_src = self._norm(states[_other(branch)], f"{prefix}.norm_kv") if cross else h
                keys, values = ops.project_kv(kv_src, self._attn_weights(prefix))
                block = BlockCache(prefix=prefix, keys=keys, values=values, modulation=mod)
                cache.blocks[branch].append(block)
                updated[branch] = self._block_step(states[branch], h, block)
            states = updated

        for branch in BRANCHES:
            cache.final[branch] = self._final_modulation(cond, branch)
            cache.outputs[branch] = self._head(states[branch], branch, cache.final[branch])
        return cache

    def decode_queries(
        self,
        cache: AnchorCache,
        branch: str,
        positions: np.ndarray,
        chunk: Optional[int] = None,
    ) -> Tensor:
        """
        查询点解码：每一步只对锚点键值做交叉注意力，可任意分块

        Args:
            cache: encode_anchors 的结果
            branch: "surface" 或 "volume"
            positions: 查询位置 (m, 3)
            chunk: 分块大小（None 表示一次解码）
        """
        if branch not in BRANCHES:
            raise InvalidArgumentError(f"未知分支: {branch}")
        positions = _points(positions, "queries")
        channels = self.config.surface_channels if branch == "surface" else self.config.volume_channels
        m = len(positions)
        if m == 0:
            return Tensor(np.zeros((0, channels), dtype=get_default_dtype()))
        if chunk is not None and chunk < 1:
            raise InvalidArgumentError("chunk 必须为正整数")
        step = m if chunk is None else chunk

        outputs: List[Tensor] = []
        for start in range(0, m, step):
            x = self._embed(branch, positions[start:start + step], cache.embedding)
            for block in cache.blocks[branch]:
                h = self._attention_input(x, block.prefix, block.modulation)
                x = self._block_step(x, h, block)
            outputs.append(self._head(x, branch, cache.final[branch]))
        return outputs[0] if len(outputs) == 1 else ops.concat(outputs, axis=0)

    def forward(self, batch: TokenBatch) -> Prediction:
        """
        完整前向

        Raises:
            InvalidArgumentError: 锚点为空
        """
        cache = self.encode_anchors(batch)
        queries = {
            b: self.decode_queries(cache, b, batch.queries(b)) if len(batch.queries(b)) else None
            for b in BRANCHES
        }
        return Prediction(
            surface_anchors=cache.outputs["surface"],
            volume_anchors=cache.outputs["volume"],
            surface_queries=queries["surface"],
            volume_queries=queries["volume"],
        )

    __call__ = forward

    def predict(self, batch: TokenBatch, chunk: Optional[int] = None) -> Dict[str, np.ndarray]:
        """推理：不记录计算图，查询分块解码，返回每个分支锚点+查询的完整预测"""
        with no_grad():
            cache = self.encode_anchors(batch)
            result: Dict[str, np.ndarray] = {}
            for b in BRANCHES:
                parts = [cache.outputs[b].data]
                if len(batch.queries(b)):
                    parts.append(self.decode_queries(cache, b, batch.queries(b), chunk).data)
                result[b] = np.concatenate(parts, axis=0)
        return result


__all__ = [
    "ANCHOR",
    "QUERY",
    "TokenBatch",
    "Modulation",
    "BlockCache",
    "AnchorCache",
    "Prediction",
    "AbUptModel",
]
