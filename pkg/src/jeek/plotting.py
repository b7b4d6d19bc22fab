"""Static figures for sweep reports.

Figures are drawn on standalone :class:`matplotlib.figure.Figure` objects with
the Agg canvas, so nothing here touches pyplot state or needs a display.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .evaluate import MetricsReport

STYLE = {
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10.0,
    "legend.fontsize": "small",
    "lines.linewidth": 1.2,
}

# PNG metadata otherwise embeds the matplotlib version string
_SAVE_META = {"Software": None}


def _new_figure(size=(4.8, 3.6)) -> Figure:
    import matplotlib as mpl

    with mpl.rc_context(STYLE):
        fig = Figure(figsize=size, dpi=100, layout="constrained")
        FigureCanvasAgg(fig)
        fig.add_subplot()
    return fig


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, format="png", metadata=_SAVE_META)
    return path


def _roc_xy(report: MetricsReport):
    pts = sorted([(0.0, 0.0), *report.roc, (1.0, 1.0)])
    return [x for x, _ in pts], [y for _, y in pts]


def plot_roc(groups: Mapping[str, Sequence[MetricsReport]], path: str | Path) -> Path:
    """ROC polylines, one colour per labelled group, one line per seed.

    The legend carries the mean AUC of each group.
    """
    import matplotlib as mpl

    fig = _new_figure()
    ax = fig.axes[0]
    with mpl.rc_context(STYLE):
        colours = mpl.rcParams["axes.prop_cycle"].by_key()["color"]
        for idx, (label, reports) in enumerate(groups.items()):
            colour = colours[idx % len(colours)]
            mean_auc = float(np.mean([r.auc for r in reports]))
            for k, rep in enumerate(reports):
                xs, ys = _roc_xy(rep)
                ax.plot(xs, ys, color=colour, alpha=0.6 if len(reports) > 1 else 1.0,
                        label=f"{label} (AUC {mean_auc:.3f})" if k == 0 else None)
        ax.plot([0, 1], [0, 1], color="0.6", linestyle=":", linewidth=0.8)
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.01)
        ax.set_xlabel("false positive rate")
        ax.set_ylabel("true positive rate")
        ax.legend(loc="lower right")
    return _save(fig, path)


def plot_lambda_curves(groups: Mapping[str, Sequence[MetricsReport]], path: str | Path) -> Path:
    """F1 against ``lambda`` (log axis), averaged over seeds when lambdas agree."""
    import matplotlib as mpl

    fig = _new_figure()
    ax = fig.axes[0]
    with mpl.rc_context(STYLE):
        colours = mpl.rcParams["axes.prop_cycle"].by_key()["color"]
        for idx, (label, reports) in enumerate(groups.items()):
            colour = colours[idx % len(colours)]
            lams = [tuple(r.lambdas) for r in reports]
            if len(set(lams)) == 1:
                ax.plot(reports[0].lambdas, np.mean([r.f1_per_lambda for r in reports], axis=0),
                        marker=".", color=colour, label=label)
            else:
                # data-scaled paths differ per seed; draw each one
                for k, rep in enumerate(reports):
                    ax.plot(rep.lambdas, rep.f1_per_lambda, marker=".", alpha=0.6, color=colour,
                            label=label if k == 0 else None)
        ax.set_xscale("log")
        ax.set_ylim(0, 1.01)
        ax.set_xlabel("lambda")
        ax.set_ylabel("F1")
        ax.legend(loc="best")
    return _save(fig, path)
