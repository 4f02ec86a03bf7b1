"""
数据读写模块
ABPT 单文件数据集与命名数组 blob 编解码
"""

from .abpt import FORMAT_VERSION, MAGIC, DatasetReader, case_arrays, read_case, read_manifest, write_dataset
from .blobs import atomic_write, canonical_json, decode_blob, encode_blob, encode_blobs, iter_blobs

__version__ = "1.0.0"

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "DatasetReader",
    "case_arrays",
    "write_dataset",
    "read_manifest",
    "read_case",
    "atomic_write",
    "canonical_json",
    "encode_blob",
    "decode_blob",
    "encode_blobs",
    "iter_blobs",
]
