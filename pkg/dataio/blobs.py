"""
命名数组二进制块编解码

单个 blob 布局（全部小端）：
    u16 名称长度 | 名称 (UTF-8) | u8 dtype 标签 | u8 维数 | u64 × 维数 形状 | u32 CRC32(负载) | 负载
canonical JSON：UTF-8、键排序、分隔符 (",", ":")
"""

import json
import os
import tempfile
import struct
import zlib
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, Tuple, Union

import numpy as np

from canonical.errors import CorruptFileError, ShapeError

DTYPE_TAGS: Dict[int, np.dtype] = {
    1: np.dtype("<f4"),
    2: np.dtype("<f8"),
    3: np.dtype("<i8"),
}
_TAG_OF = {v: k for k, v in DTYPE_TAGS.items()}

_NAME_LEN = struct.Struct("<H")
_TAG_NDIM = struct.Struct("<BB")
_CRC = struct.Struct("<I")


def canonical_json(obj: Any) -> bytes:
    """canonical JSON 编码"""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


def encode_blob(name: str, array: np.ndarray, dtype: str = "<f4") -> bytes:
    """把数组编码为一个 blob"""
    target = np.dtype(dtype)
    if target not in _TAG_OF:
        raise ShapeError(f"不支持的 dtype: {dtype}")
    arr = np.ascontiguousarray(np.asarray(array), dtype=target)
    name_bytes = name.encode("utf-8")
    payload = arr.tobytes()
    header = (
        _NAME_LEN.pack(len(name_bytes))
        + name_bytes
        + _TAG_NDIM.pack(_TAG_OF[target], arr.ndim)
        + struct.pack(f"<{arr.ndim}Q", *arr.shape)
        + _CRC.pack(zlib.crc32(payload))
    )
    return header + payload


def _take(buffer: bytes, offset: int, size: int, what: str) -> bytes:
    end = offset + size
    if size < 0 or end > len(buffer):
        raise CorruptFileError(f"读取 {what} 越界（偏移 {offset}，需要 {size} 字节，可用 {len(buffer) - offset}）")
    return buffer[offset:end]


def decode_blob(buffer: bytes, offset: int = 0) -> Tuple[str, np.ndarray, int]:
    """
    从 offset 处解码一个 blob

    Returns:
        (名称, 数组, 下一个 blob 的偏移)

    Raises:
        CorruptFileError: 截断、未知 dtype 或 CRC 不符
    """
    (name_len,) = _NAME_LEN.unpack(_take(buffer, offset, _NAME_LEN.size, "名称长度"))
    offset += _NAME_LEN.size
    try:
        name = _take(buffer, offset, name_len, "名称").decode("utf-8")
    except UnicodeDecodeError as e:
        raise CorruptFileError("blob 名称不是合法 UTF-8") from e
    offset += name_len
    tag, ndim = _TAG_NDIM.unpack(_take(buffer, offset, _TAG_NDIM.size, "dtype 标签"))
    offset += _TAG_NDIM.size
    dtype = DTYPE_TAGS.get(tag)
    if dtype is None:
        raise CorruptFileError(f"blob {name}: 未知 dtype 标签 {tag}")
    shape = struct.unpack(f"<{ndim}Q", _take(buffer, offset, 8 * ndim, "形状"))
    offset += 8 * ndim
    (crc,) = _CRC.unpack(_take(buffer, offset, _CRC.size, "校验和"))
    offset += _CRC.size
    nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    payload = _take(buffer, offset, nbytes, f"blob {name} 负载")
    if zlib.crc32(payload) != crc:
        raise CorruptFileError(f"blob {name}: CRC32 校验失败")
    array = np.frombuffer(payload, dtype=dtype).reshape(shape).copy()
    return name, array, offset + nbytes


def iter_blobs(buffer: bytes) -> Iterator[Tuple[str, np.ndarray]]:
    """依次解码缓冲区中的全部 blob"""
    offset = 0
    while offset < len(buffer):
        name, array, offset = decode_blob(buffer, offset)
        yield name, array


def encode_blobs(arrays: Dict[str, np.ndarray], dtype: str = "<f4") -> bytes:
    """按插入顺序编码多个数组"""
    return b"".join(encode_blob(name, arr, dtype) for name, arr in arrays.items())


def atomic_write(path: Union[str, Path], chunks: Iterable[bytes]) -> Path:
    """先写同目录临时文件再 os.replace，读者不会看到半写入的文件"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=str(path.parent))
    try:
        with os.fdopen(fd, "wb") as fh:
            for chunk in chunks:
                fh.write(chunk)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
        raise
    return path


__all__ = [
    "DTYPE_TAGS",
    "canonical_json",
    "encode_blob",
    "decode_blob",
    "encode_blobs",
    "iter_blobs",
    "atomic_write",
]
