"""
编排层执行器（Executor）

职责：
- 线程池并发生成算例，结果按设计点顺序返回（与线程调度无关）。
- 单个算例失败不影响其余算例，失败信息标准化为 ErrorSpec。
- 汇总每个算例的耗时与整体指标。
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from time import perf_counter
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from loguru import logger

from canonical.errors import AbuptError, ConfigError, DataError, InvalidArgumentError, NumericError, ShapeError
from canonical.models import CaseRecord, ErrorSpec
from data.case_generator import CaseDesign

# 错误分类 → (错误码, 严重程度, 是否可重试)
_ERROR_TABLE: Dict[str, Tuple[str, str, bool]] = {
    "config": ("E-CONFIG", "critical", False),
    "argument": ("E-ARGUMENT", "critical", False),
    "data": ("E-DATA", "critical", True),
    "numeric": ("E-NUMERIC", "degraded", False),
    "unknown": ("E-UNKNOWN", "critical", False),
}


def _error_class(exc: BaseException) -> str:
    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, (InvalidArgumentError, ShapeError)):
        return "argument"
    if isinstance(exc, DataError):
        return "data"
    if isinstance(exc, NumericError):
        return "numeric"
    return "unknown"


def build_error_spec(exc: BaseException, case_id: Optional[str] = None) -> ErrorSpec:
    error_class = _error_class(exc)
    code, severity, retryable = _ERROR_TABLE[error_class]
    return ErrorSpec(
        error_code=code,
        error_class=error_class,
        severity=severity,
        retryable=retryable,
        message=str(exc),
        case_id=case_id,
    )


@dataclass
class GenerationResult:
    """并发生成结果：cases 与设计点顺序一致，失败的算例不出现在 cases 中"""

    cases: List[CaseRecord] = field(default_factory=list)
    errors: List[ErrorSpec] = field(default_factory=list)
    exceptions: List[BaseException] = field(default_factory=list)
    metrics: Dict[str, Any] = field(default_factory=dict)

    @property
    def status(self) -> str:
        if not self.errors:
            return "ok"
        return "error" if not self.cases else "degraded"


class Executor:
    """负责算例生成的并发执行与结果聚合。"""

    def __init__(self, num_workers: int = 4) -> None:
        if num_workers < 1:
            raise ConfigError("num_workers 必须为正整数")
        self.num_workers = num_workers
        logger.debug(f"Executor: 初始化完成（workers={num_workers}）")

    def _safe_build(
        self, build: Callable[[CaseDesign], CaseRecord], design: CaseDesign
    ) -> Tuple[Optional[CaseRecord], Optional[BaseException], float]:
        """包装单个算例的生成，返回 (算例, 异常, 耗时 ms)"""
        start = perf_counter()
        try:
            case = build(design)
            return case, None, (perf_counter() - start) * 1000.0
        except AbuptError as e:
            logger.error(f"Executor: 算例 {design.case_id} 生成失败: {e}")
            return None, e, (perf_counter() - start) * 1000.0
        except Exception as e:
            logger.exception(f"Executor: 算例 {design.case_id} 未预期异常: {e}")
            return None, e, (perf_counter() - start) * 1000.0

    def execute(self, designs: Sequence[CaseDesign], build: Callable[[CaseDesign], CaseRecord]) -> GenerationResult:
        """
        并发生成全部设计点

        Args:
            designs: 设计点（输出顺序与之一致）
            build: 设计点 → 算例记录
        """
        overall_start = perf_counter()
        logger.info(f"Executor: 并发生成开始（算例={len(designs)}, workers={self.num_workers}）")

        with ThreadPoolExecutor(max_workers=self.num_workers) as pool:
            outcomes = list(pool.map(lambda d: self._safe_build(build, d), designs))

        result = GenerationResult()
        durations: Dict[str, float] = {}
        for design, (case, exc, duration_ms) in zip(designs, outcomes):
            durations[design.case_id] = duration_ms
            if exc is None and case is not None:
                result.cases.append(case)
            else:
                result.errors.append(build_error_spec(exc, design.case_id))
                result.exceptions.append(exc)

        total_ms = (perf_counter() - overall_start) * 1000.0
        error_class_counts: Dict[str, int] = {}
        for spec in result.errors:
            error_class_counts[spec.error_class] = error_class_counts.get(spec.error_class, 0) + 1
        result.metrics = {
            "per_case_duration_ms": durations,
            "success_count": len(result.cases),
            "fail_count": len(result.errors),
            "total_duration_ms": total_ms,
            "error_class_counts": error_class_counts,
        }
        logger.info(
            f"Executor: 并发生成完成，总耗时 {total_ms:.2f}ms，成功 {len(result.cases)}，失败 {len(result.errors)}"
        )
        return result


__all__ = ["Executor", "GenerationResult", "build_error_spec"]
