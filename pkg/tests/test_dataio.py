"""
数据读写单元测试
测试 blob 编解码的校验、ABPT 数据集的逐字节重写、截断与缺失处理
"""

import shutil
import unittest

import numpy as np
import pytest

from canonical.errors import CorruptFileError, InvalidArgumentError, NotFoundError
from canonical.models import SplitTag
from dataio import DatasetReader, canonical_json, decode_blob, encode_blob, iter_blobs, write_dataset


class TestBlobs(unittest.TestCase):
    """测试命名数组 blob"""

    def test_float64_blob_is_exact(self):
        """测试 f8 blob 精确还原名称、形状与数值"""
        print("\n=== 测试 blob 编解码 ===")
        arr = np.random.default_rng(0).standard_normal((3, 4))
        buffer = encode_blob("solution_volume/positions", arr, dtype="<f8")
        name, out, end = decode_blob(buffer)
        self.assertEqual(name, "solution_volume/positions")
        self.assertEqual(end, len(buffer))
        np.testing.assert_array_equal(out, arr)
        print(f"✓ blob 长度 {len(buffer)} 字节")

    def test_empty_array(self):
        """测试空数组（例如 0 个体点）"""
        (name, out), = list(iter_blobs(encode_blob("empty", np.zeros((0, 3)))))
        self.assertEqual(out.shape, (0, 3))

    def test_crc_and_truncation(self):
        """测试负载被篡改或截断时报错"""
        buffer = bytearray(encode_blob("w", np.arange(6.0)))
        buffer[-1] ^= 0xFF
        with self.assertRaises(CorruptFileError):
            decode_blob(bytes(buffer))
        with self.assertRaises(CorruptFileError):
            decode_blob(encode_blob("w", np.arange(6.0))[:-3])

    def test_canonical_json(self):
        """测试 canonical JSON 键排序、无空白"""
        self.assertEqual(canonical_json({"b": 1, "a": [1.5, "α"]}), '{"a":[1.5,"α"],"b":1}'.encode("utf-8"))


def test_manifest_and_splits(tiny_dataset):
    """清单记录 10 个算例与 8/1/1 划分，统计量来自 train 划分"""
    reader = DatasetReader(tiny_dataset)
    assert len(reader) == 10
    assert [len(reader.ids(tag)) for tag in (SplitTag.TRAIN, SplitTag.VAL, SplitTag.TEST)] == [8, 1, 1]
    assert reader.statistics is not None
    assert reader.manifest.regime == "0.5"
    assert "created" not in reader.manifest.generator


def test_rewrite_is_byte_identical(tiny_dataset, tmp_path):
    """读出全部算例后按相同清单信息重写，文件逐字节一致"""
    reader = DatasetReader(tiny_dataset)
    cases = list(reader.iter_cases())
    copy = tmp_path / "rewritten.abpt"
    write_dataset(
        cases,
        copy,
        regime=reader.manifest.regime,
        statistics=reader.statistics,
        generator=reader.manifest.generator,
    )
    assert copy.read_bytes() == tiny_dataset.read_bytes()


def test_case_read_is_exact(tiny_dataset):
    """同一算例两次读取逐位一致，点集与流场长度对齐"""
    reader = DatasetReader(tiny_dataset)
    case_id = reader.ids()[3]
    a, b = reader.read(case_id), reader.read(case_id)
    np.testing.assert_array_equal(a.solution_surface.positions, b.solution_surface.positions)
    np.testing.assert_array_equal(a.solution_fields.velocity, b.solution_fields.velocity)
    assert len(a.solution_fields.surface_pressure) == a.solution_surface.count
    assert a.solution_fields.velocity.shape == (a.solution_volume.count, 3)
    assert len(a.cad_fields.volume_pressure) == a.cad_volume.count


def test_normals_read_back_unit_length(tiny_dataset):
    """读回的法向与生成时逐位一致，且单位长度误差 ≤ 1e-9"""
    from data.case_generator import CaseGenerator
    from tests.conftest import tiny_gen_config

    reader = DatasetReader(tiny_dataset)
    gen = CaseGenerator(tiny_gen_config())
    design = gen.design()[3]
    built = gen.build_case(design, reader.manifest.regime)
    case = reader.read(design.case_id)
    for group in ("solution_surface", "cad_surface"):
        normals = getattr(case, group).normals
        np.testing.assert_array_equal(normals, getattr(built, group).normals)
        assert np.abs(np.linalg.norm(normals, axis=1) - 1.0).max() <= 1e-9


def test_truncated_file_rejected(tiny_dataset, tmp_path):
    """截断文件在打开时即被拒绝"""
    data = tiny_dataset.read_bytes()
    broken = tmp_path / "truncated.abpt"
    broken.write_bytes(data[:-10])
    with pytest.raises(CorruptFileError):
        DatasetReader(broken)
    short = tmp_path / "short.abpt"
    short.write_bytes(data[:6])
    with pytest.raises(CorruptFileError):
        DatasetReader(short)


def test_flipped_payload_byte_rejected(tiny_dataset, tmp_path):
    """数据区字节被篡改时读取该算例报错，其余算例不受影响"""
    broken = tmp_path / "flipped.abpt"
    shutil.copyfile(tiny_dataset, broken)
    data = bytearray(broken.read_bytes())
    data[-1] ^= 0xFF
    broken.write_bytes(bytes(data))

    reader = DatasetReader(broken)
    last = reader.ids()[-1]
    with pytest.raises(CorruptFileError):
        reader.read(last)
    reader.read(reader.ids()[0])


def test_missing_and_unknown(tiny_dataset, tmp_path):
    """文件不存在或算例 ID 未知时报 NotFoundError"""
    with pytest.raises(NotFoundError):
        DatasetReader(tmp_path / "nope.abpt")
    with pytest.raises(NotFoundError):
        DatasetReader(tiny_dataset).read("case_9999")


def test_write_requires_cases(tmp_path):
    with pytest.raises(InvalidArgumentError):
        write_dataset([], tmp_path / "empty.abpt")


if __name__ == "__main__":
    unittest.main(verbosity=2)
