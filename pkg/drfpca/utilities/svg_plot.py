"""
静态 SVG 图：Pareto 散点 (ARE, ABDiff) 与多序列折线
使用 matplotlib 的 Figure 对象（不经过 pyplot 全局状态），可在工作线程中调用
"""

import logging
import os
from typing import Dict, Iterable, Optional, Sequence, Tuple

import matplotlib as mpl
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

logger = logging.getLogger(__name__)

# 固定 SVG 内部 id 的盐并去掉日期，保证同样的数据写出同样的文件
mpl.rcParams["svg.hashsalt"] = "drfpca"
mpl.rcParams["svg.fonttype"] = "none"

MARGIN = 0.05


def _new_axes(width: float = 6.0, height: float = 4.5):
    fig = Figure(figsize=(width, height), facecolor="w")
    FigureCanvasAgg(fig)
    ax = fig.add_subplot(1, 1, 1)
    ax.margins(MARGIN)
    ax.grid(True, linestyle=":", linewidth=0.5)
    return fig, ax


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    logger.info("Wrote %s", path)


def pareto_svg(points: Iterable[Tuple[float, float, str]], path, title: str = "Pareto front"):
    """
    points: (are, abdiff, label) 序列，label 标在点旁
    """
    points = list(points)
    fig, ax = _new_axes()
    if points:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
        ax.scatter(xs, ys, s=18, color="tab:blue", zorder=3)
        for x, y, label in points:
            ax.annotate(label, (x, y), textcoords="offset points", xytext=(4, 4), fontsize=7)
    else:
        ax.text(0.5, 0.5, "no successful grid points", ha="center", va="center", transform=ax.transAxes)
    ax.set_xlabel("ARE")
    ax.set_ylabel("ABDiff")
    ax.set_title(title)
    _save(fig, path)


def line_svg(series: Dict[str, Tuple[Sequence[float], Sequence[float]]], path, xlabel: str = "",
             ylabel: str = "", title: str = "", errors: Optional[Dict[str, Sequence[float]]] = None):
    """
    series: {名称: (x, y)}；errors 给出时画误差棒
    """
    fig, ax = _new_axes()
    for name, (xs, ys) in series.items():
        if errors and name in errors:
            ax.errorbar(xs, ys, yerr=errors[name], marker="o", markersize=3, capsize=2, label=name)
        else:
            ax.plot(xs, ys, marker="o", markersize=3, label=name)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if series:
        ax.legend(fontsize=8)
    _save(fig, path)
