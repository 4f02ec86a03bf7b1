"""
命令行测试：退出码与输出目录
"""

import json

import pytest

from canonical.errors import CorruptFileError, NotFoundError, UndefinedRatioError
from cli.main import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC, EXIT_OK, exit_code_for, main

_SMALL_GEN = [
    "--set", "gen.n_cases=10",
    "--set", "gen.n_solution_surface=64",
    "--set", "gen.n_cad_surface=32",
    "--set", "gen.n_solution_volume=64",
    "--set", "gen.n_grid_volume=64",
]


def test_gen_writes_dataset_and_snapshot(tmp_path):
    """小规模 gen 成功，写出数据集与配置快照"""
    code = main(["gen", "--out", str(tmp_path), "--seed", "3", *_SMALL_GEN])
    assert code == EXIT_OK
    assert (tmp_path / "dataset_M0.5.abpt").exists()
    snapshot = json.loads((tmp_path / "config.json").read_text(encoding="utf-8"))
    assert snapshot["gen"]["seed"] == 3 and snapshot["gen"]["n_cases"] == 10


def test_zero_cases_is_config_error(tmp_path):
    assert main(["gen", "--out", str(tmp_path), "--set", "gen.n_cases=0"]) == EXIT_CONFIG


def test_unknown_override_is_config_error(tmp_path):
    assert main(["gen", "--out", str(tmp_path), "--set", "gen.bogus=1"]) == EXIT_CONFIG
    assert main(["gen", "--out", str(tmp_path), "--set", "model.dim=30"]) == EXIT_CONFIG


def test_missing_dataset_is_data_error(tmp_path):
    code = main(["train", "--out", str(tmp_path), "--dataset", str(tmp_path / "missing.abpt")])
    assert code == EXIT_DATA


def test_truncated_dataset_is_data_error(tiny_dataset, tmp_path):
    broken = tmp_path / "broken.abpt"
    broken.write_bytes(tiny_dataset.read_bytes()[:-100])
    code = main(
        ["eval", "--out", str(tmp_path / "eval"), "--dataset", str(broken), "--checkpoint", str(tmp_path / "x.abck")]
    )
    assert code == EXIT_DATA


def test_missing_required_argument_exits_by_argparse(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["train", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_exit_code_mapping():
    assert exit_code_for(CorruptFileError("x")) == EXIT_DATA
    assert exit_code_for(NotFoundError("x")) == EXIT_DATA
    assert exit_code_for(UndefinedRatioError("x")) == EXIT_NUMERIC
    assert exit_code_for(RuntimeError("x")) == 1
