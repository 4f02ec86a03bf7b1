"""
SVG 绘图（matplotlib Agg 后端，无需显示设备）
"""

from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "abupt"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from loguru import logger  # noqa: E402

from canonical.errors import ShapeError  # noqa: E402

from .profile import PressureProfile, VelocitySlice  # noqa: E402


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    logger.debug(f"图已保存: {path}")
    return path


def scatter_plot(
    target: Sequence[float],
    pred: Sequence[float],
    path: Path,
    title: str = "",
    label: str = "",
    r2: Optional[float] = None,
) -> Path:
    """目标-预测散点图，附 y = x 参考线"""
    t = np.asarray(target, dtype=np.float64)
    p = np.asarray(pred, dtype=np.float64)
    if t.shape != p.shape:
        raise ShapeError("散点图的目标与预测长度不一致")
    fig, ax = plt.subplots(figsize=(4.5, 4.5))
    ax.scatter(t, p, s=14, alpha=0.8)
    if t.size:
        lo = float(min(t.min(), p.min()))
        hi = float(max(t.max(), p.max()))
        ax.plot([lo, hi], [lo, hi], "k--", linewidth=0.8)
    ax.set_xlabel(f"target {label}".strip())
    ax.set_ylabel(f"prediction {label}".strip())
    ax.set_title(title if r2 is None else f"{title}  R²={r2:.4f}")
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def profile_plot(target: PressureProfile, pred: Optional[PressureProfile], path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve, style in ((target.upper, "-"), (target.lower, "--")):
        ax.plot(curve.x_c, curve.pressure, style, color="black", label=f"target {curve.surface}")
    predicted = () if pred is None else ((pred.upper, "-"), (pred.lower, "--"))
    for curve, style in predicted:
        ax.plot(curve.x_c, curve.pressure, style, color="tab:red", label=f"pred {curve.surface}")
    ax.invert_yaxis()
    ax.set_xlabel("x/c")
    ax.set_ylabel("p")
    ax.set_title(title or f"span fraction {target.span_fraction:g}")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


def velocity_slice_plot(target: VelocitySlice, pred: VelocitySlice, path: Path, title: str = "") -> Path:
    fig, axes = plt.subplots(1, 3, figsize=(13, 4), sharey=True)
    vmin = float(min(target.u_x.min(), pred.u_x.min()))
    vmax = float(max(target.u_x.max(), pred.u_x.max()))
    panels = (
        (target.u_x, "target u_x", vmin, vmax, "viridis"),
        (pred.u_x, "pred u_x", vmin, vmax, "viridis"),
        (pred.u_x - target.u_x, "error", None, None, "coolwarm"),
    )
    for ax, (values, name, lo, hi, cmap) in zip(axes, panels):
        sc = ax.scatter(target.x, target.z, c=values, s=6, cmap=cmap, vmin=lo, vmax=hi)
        ax.set_title(name)
        ax.set_xlabel("x")
        fig.colorbar(sc, ax=ax)
    axes[0].set_ylabel("z")
    if title:
        fig.suptitle(title)
    return _save(fig, path)


def bench_plot(n_queries: Sequence[int], seconds: Sequence[float], path: Path, slope: float, intercept: float) -> Path:
    n = np.asarray(n_queries, dtype=np.float64)
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.plot(n, seconds, "o", label="measured")
    ax.plot(n, slope * n + intercept, "-", label=f"fit {slope:.3g}·n + {intercept:.3g}")
    ax.set_xlabel("query points")
    ax.set_ylabel("decode seconds")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    return _save(fig, path)


__all__ = ["scatter_plot", "profile_plot", "velocity_slice_plot", "bench_plot"]
