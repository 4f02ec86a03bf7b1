"""
命令行入口

    python -m cli <gen|train|eval|forces|slice|bench> --config FILE --seed N --out DIR --set key=value ...

退出码：0 成功，2 配置/参数错误，3 数据错误，4 数值错误
"""

import argparse
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

_ROOT = Path(__file__).resolve().parents[1]
if str(_ROOT) not in sys.path:
    sys.path.insert(0, str(_ROOT))

from loguru import logger  # noqa: E402
from pydantic import ValidationError  # noqa: E402

from canonical.errors import (  # noqa: E402
    AbuptError,
    ConfigError,
    DataError,
    InvalidArgumentError,
    NumericError,
    ShapeError,
)
from config.run_config import RunConfig, load_run_config, snapshot_config  # noqa: E402
from config.settings import get_settings, setup_logging  # noqa: E402
from orchestrator import (  # noqa: E402
    bench_decode,
    evaluate_model,
    generate_dataset,
    report_forces,
    slice_profiles,
    train_model,
)
from orchestrator.router import Router  # noqa: E402

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


def exit_code_for(exc: BaseException) -> int:
    """异常 → 退出码"""
    if isinstance(exc, (ConfigError, InvalidArgumentError, ShapeError, ValidationError)):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    if isinstance(exc, AbuptError):
        return exc.exit_code
    return 1


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="canonical JSON 配置文件")
    parser.add_argument("--seed", type=int, default=None, help="覆盖各分区的随机种子")
    parser.add_argument("--out", type=Path, default=None, help="输出目录（缺省 ABUPT_OUTPUT_ROOT）")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE", help="覆盖配置项 section.key=value"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="abupt", description="桌面规模 AB-UPT 神经代理模型")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="生成合成数据集")
    _common(p)

    p = sub.add_parser("train", help="训练模型")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--resume", type=Path, default=None, help="从检查点恢复")
    p.add_argument("--max-steps", type=int, default=None, help="执行若干步后停止")

    p = sub.add_parser("eval", help="评估检查点")
    _common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--split", choices=["train", "val", "test"], default=None)
    p.add_argument("--input-mesh", choices=["solution", "cad"], default=None)

    p = sub.add_parser("forces", help="气动力报告")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--checkpoint", type=Path, default=None)

    p = sub.add_parser("slice", help="展向剖面切片")
    _common(p)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--case-id", required=True)
    p.add_argument("--span", type=float, nargs="+", default=None)
    p.add_argument("--checkpoint", type=Path, default=None)

    p = sub.add_parser("bench", help="解码耗时基准")
    _common(p)
    p.add_argument("--checkpoint", type=Path, required=True)
    p.add_argument("--dataset", type=Path, required=True)
    p.add_argument("--queries", type=int, nargs="+", default=None)
    return parser


def _effective_config(args: argparse.Namespace) -> RunConfig:
    overrides: List[str] = list(args.overrides)
    if getattr(args, "split", None):
        overrides.append(f"eval.split={args.split}")
    if getattr(args, "input_mesh", None):
        overrides.append(f"eval.input_mesh={args.input_mesh}")
    if getattr(args, "queries", None):
        overrides.append("bench.queries=[" + ",".join(str(q) for q in args.queries) + "]")
    return load_run_config(args.config, overrides).with_seed(args.seed)


def _run_gen(config: RunConfig, args, out: Path) -> None:
    for path in generate_dataset(config, out):
        print(path)


def _run_train(config: RunConfig, args, out: Path) -> None:
    result = train_model(config, args.dataset, out, resume=args.resume, max_steps=args.max_steps)
    print(result.run_dir)


def _run_eval(config: RunConfig, args, out: Path) -> None:
    result = evaluate_model(config, args.dataset, checkpoint=args.checkpoint, out_dir=out)
    print(result.files["report"])


def _run_forces(config: RunConfig, args, out: Path) -> None:
    report_forces(config, args.dataset, checkpoint=args.checkpoint, out_dir=out)
    print(out / "forces.csv")


def _run_slice(config: RunConfig, args, out: Path) -> None:
    for path in slice_profiles(config, args.dataset, args.case_id, args.span, args.checkpoint, out).values():
        print(path)


def _run_bench(config: RunConfig, args, out: Path) -> None:
    result = bench_decode(config, args.checkpoint, args.dataset, out)
    print(result.files["bench.csv"])


_COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace, Path], None]] = {
    "gen": _run_gen,
    "train": _run_train,
    "eval": _run_eval,
    "forces": _run_forces,
    "slice": _run_slice,
    "bench": _run_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging()
    try:
        config, _ = Router().route(args.command, _effective_config(args))
        out = Path(args.out) if args.out is not None else get_settings().get_output_root()
        out.mkdir(parents=True, exist_ok=True)
        snapshot_config(config, out)
        _COMMANDS[args.command](config, args, out)
    except (AbuptError, ValidationError) as e:
        code = exit_code_for(e)
        logger.error(f"{args.command} 失败（退出码 {code}）: {e}")
        print(f"error: {e}", file=sys.stderr)
        return code
    return EXIT_OK


__all__ = ["main", "build_parser", "exit_code_for", "EXIT_OK", "EXIT_CONFIG", "EXIT_DATA", "EXIT_NUMERIC"]
