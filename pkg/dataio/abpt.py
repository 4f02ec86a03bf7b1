"""
ABPT 单文件数据集

文件布局（小端）：
    "ABPT" | u32 格式版本 | u64 清单长度 | canonical-JSON 清单 | 各算例 blob 区
清单中每个算例的 offset/length 相对 blob 区起点。单位法向以 float64、其余数组以 float32 落盘，读入后均为 float64。
读取时只访问清单与目标算例的字节区间；写入先写临时文件再原子替换。
"""

import json
import os
import struct
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger
from pydantic import ValidationError

from canonical.errors import CorruptFileError, InvalidArgumentError, NotFoundError
from canonical.mapper import FieldMapper
from canonical.models import (
    CaseEntry,
    CaseRecord,
    DatasetManifest,
    FieldSample,
    SplitTag,
    StandardizationStats,
    SurfacePointSet,
    VolumePointSet,
)
from dataio.blobs import atomic_write, canonical_json, encode_blob, iter_blobs

MAGIC = b"ABPT"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQ")

_SURFACE_GROUPS = ("solution_surface", "cad_surface")
_VOLUME_GROUPS = ("solution_volume", "cad_volume")
_FIELD_GROUPS = ("solution_fields", "cad_fields")
_FIELD_NAMES = ("surface_pressure", "wall_shear", "volume_pressure", "velocity")
# 单位法向以 float64 落盘，其余浮点数组为 float32
_F8_SUFFIXES = ("/normals",)


def _encode_case(arrays: Dict[str, np.ndarray]) -> bytes:
    return b"".join(
        encode_blob(name, arr, "<f8" if name.endswith(_F8_SUFFIXES) else "<f4") for name, arr in arrays.items()
    )


def case_arrays(case: CaseRecord) -> Dict[str, np.ndarray]:
    """算例 → 有序的 组/字段 → 数组"""
    arrays: Dict[str, np.ndarray] = {}
    for group in _SURFACE_GROUPS:
        surface: SurfacePointSet = getattr(case, group)
        arrays[f"{group}/positions"] = surface.positions
        arrays[f"{group}/normals"] = surface.normals
        arrays[f"{group}/areas"] = surface.areas
        if surface.uv is not None:
            arrays[f"{group}/uv"] = surface.uv
    for group in _VOLUME_GROUPS:
        volume: VolumePointSet = getattr(case, group)
        arrays[f"{group}/positions"] = volume.positions
        arrays[f"{group}/bbox"] = volume.bbox
    for group in _FIELD_GROUPS:
        fields: FieldSample = getattr(case, group)
        for name in _FIELD_NAMES:
            arrays[f"{group}/{name}"] = getattr(fields, name)
    return arrays


def _case_from_arrays(entry: CaseEntry, arrays: Dict[str, np.ndarray]) -> CaseRecord:
    def get(name: str) -> np.ndarray:
        if name not in arrays:
            raise CorruptFileError(f"算例 {entry.case_id} 缺少数组 {name}")
        return arrays[name].astype(np.float64)

    kwargs: Dict[str, Any] = {}
    for group in _SURFACE_GROUPS:
        uv = arrays.get(f"{group}/uv")
        kwargs[group] = SurfacePointSet(
            positions=get(f"{group}/positions"),
            normals=get(f"{group}/normals"),
            areas=get(f"{group}/areas"),
            uv=None if uv is None else uv.astype(np.float64),
        )
    for group in _VOLUME_GROUPS:
        kwargs[group] = VolumePointSet(positions=get(f"{group}/positions"), bbox=get(f"{group}/bbox"))
    for group in _FIELD_GROUPS:
        kwargs[group] = FieldSample(**{name: get(f"{group}/{name}") for name in _FIELD_NAMES})
    return CaseRecord(case_id=entry.case_id, shape=entry.shape, flow=entry.flow, split=entry.split, **kwargs)


def write_dataset(
    cases: Sequence[CaseRecord],
    path: Union[str, Path],
    regime: str = "0.5",
    statistics: Optional[StandardizationStats] = None,
    generator: Optional[Dict[str, Any]] = None,
) -> DatasetManifest:
    """
    写入 ABPT 数据集

    Args:
        cases: 算例记录（split 标签已确定）
        path: 输出文件
        regime: 工况标签
        statistics: 标准化统计量；缺省由 train 划分计算
        generator: 生成器种子与参数（不得含时间戳）

    Raises:
        InvalidArgumentError: 没有算例，或缺省统计量时没有 train 算例
    """
    if not cases:
        raise InvalidArgumentError("数据集至少需要一个算例")
    if statistics is None:
        train = [c.solution_fields for c in cases if c.split == SplitTag.TRAIN]
        if not train:
            raise InvalidArgumentError("缺少 train 划分，无法计算标准化统计量")
        statistics = FieldMapper.fit(train).stats

    blobs: List[bytes] = []
    entries: List[CaseEntry] = []
    offset = 0
    for case in cases:
        arrays = case_arrays(case)
        payload = _encode_case(arrays)
        entries.append(
            CaseEntry(
                case_id=case.case_id,
                split=case.split,
                offset=offset,
                length=len(payload),
                shape=case.shape,
                flow=case.flow,
                arrays=list(arrays),
            )
        )
        blobs.append(payload)
        offset += len(payload)

    manifest = DatasetManifest(
        format_version=FORMAT_VERSION,
        regime=regime,
        cases=entries,
        statistics=statistics,
        generator=generator or {},
        data_size=offset,
    )
    manifest_bytes = canonical_json(manifest.model_dump(mode="json"))
    header = _HEADER.pack(MAGIC, FORMAT_VERSION, len(manifest_bytes))
    atomic_write(path, [header, manifest_bytes, *blobs])
    logger.info(f"数据集已写入: {path}（{len(entries)} 个算例, {offset} 字节数据区）")
    return manifest


def _read_header(fh, size: int) -> Tuple[DatasetManifest, int]:
    raw = fh.read(_HEADER.size)
    if len(raw) != _HEADER.size:
        raise CorruptFileError("文件过短，缺少文件头")
    magic, version, manifest_len = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise CorruptFileError(f"魔数错误: {magic!r}")
    if version != FORMAT_VERSION:
        raise CorruptFileError(f"不支持的格式版本: {version}")
    if _HEADER.size + manifest_len > size:
        raise CorruptFileError("清单长度超出文件大小")
    try:
        manifest = DatasetManifest.model_validate(json.loads(fh.read(manifest_len).decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, ValidationError) as e:
        raise CorruptFileError(f"清单无法解析: {e}") from e
    base = _HEADER.size + manifest_len
    if base + manifest.data_size != size:
        raise CorruptFileError(f"文件大小 {size} 与清单声明 {base + manifest.data_size} 不符（文件可能被截断）")
    return manifest, base


class DatasetReader:
    """
    ABPT 数据集读取器

    构造时只解析文件头与清单；read 按需读取单个算例的字节区间。
    可被多个线程并发读取（每次读取独立打开文件）。
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        if not self.path.exists():
            raise NotFoundError(f"数据集文件不存在: {self.path}")
        size = os.path.getsize(self.path)
        with open(self.path, "rb") as fh:
            self.manifest, self._base = _read_header(fh, size)

    def __len__(self) -> int:
        return len(self.manifest.cases)

    @property
    def statistics(self) -> Optional[StandardizationStats]:
        return self.manifest.statistics

    def ids(self, split: Optional[SplitTag] = None) -> List[str]:
        if split is None:
            return [c.case_id for c in self.manifest.cases]
        return self.manifest.ids_for(SplitTag(split))

    def read(self, case_id: str) -> CaseRecord:
        """
        读取单个算例

        Raises:
            NotFoundError: 未知算例 ID
            CorruptFileError: 字节区间不完整、CRC 不符或数组缺失
        """
        entry = self.manifest.entry(case_id)
        if entry is None:
            raise NotFoundError(f"算例不存在: {case_id}")
        with open(self.path, "rb") as fh:
            fh.seek(self._base + entry.offset)
            buffer = fh.read(entry.length)
        if len(buffer) != entry.length:
            raise CorruptFileError(f"算例 {case_id} 数据被截断")
        arrays = dict(iter_blobs(buffer))
        if list(arrays) != entry.arrays:
            raise CorruptFileError(f"算例 {case_id} 数组列表与清单不符")
        try:
            return _case_from_arrays(entry, arrays)
        except ValidationError as e:
            raise CorruptFileError(f"算例 {case_id} 数据非法: {e}") from e

    def iter_cases(self, split: Optional[SplitTag] = None) -> Iterator[CaseRecord]:
        for case_id in self.ids(split):
            yield self.read(case_id)


def read_manifest(path: Union[str, Path]) -> DatasetManifest:
    return DatasetReader(path).manifest


def read_case(path: Union[str, Path], case_id: str) -> CaseRecord:
    """读取单个算例（只访问清单与该算例的字节区间）"""
    return DatasetReader(path).read(case_id)


__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "DatasetReader",
    "case_arrays",
    "write_dataset",
    "read_manifest",
    "read_case",
]
