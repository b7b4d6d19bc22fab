"""Edge-recovery metrics and lambda sweeps."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .backward import DEFAULT_V_GRID, RCOND_MIN, TaskDataset, backward_map, sample_covariance, select_v
from .entry_lp import estimate, lambda_path
from .knowledge import KnowledgeWeights, PrecisionDecomposition
from .simulate import GroundTruth

DEFAULT_TOL = 1e-8
AUC_METHOD = ("trapezoid over FPR-sorted points; TPR averaged over duplicate FPR; "
              "(0,0) and (1,1) anchors added as separate vertices")


@dataclass(frozen=True)
class ConfusionCounts:
    """Edge confusion over off-diagonal unordered pairs, summed over tasks."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be nonnegative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def fpr(self) -> float:
        neg = self.fp + self.tn
        return self.fp / neg if neg else 0.0

    @property
    def tpr(self) -> float:
        pos = self.tp + self.fn
        return self.tp / pos if pos else 0.0

    @property
    def precision(self) -> float:
        called = self.tp + self.fp
        return self.tp / called if called else 0.0

    @property
    def recall(self) -> float:
        return self.tpr


def _true_matrices(truth) -> tuple:
    if isinstance(truth, GroundTruth):
        return truth.precisions
    if isinstance(truth, PrecisionDecomposition):
        return truth.omega_total
    return tuple(np.asarray(t, dtype=float) for t in truth)


def _est_matrices(est) -> tuple:
    if isinstance(est, PrecisionDecomposition):
        return est.omega_total
    return tuple(np.asarray(e, dtype=float) for e in est)


def confusion(est, truth, tol: float = DEFAULT_TOL) -> ConfusionCounts:
    """Compare off-diagonal supports of estimated and true ``Omega^(i)``.

    An entry counts as an edge when ``|entry| > tol``.
    """
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    E, T = _est_matrices(est), _true_matrices(truth)
    if len(E) != len(T):
        raise ValueError(f"{len(E)} estimated vs {len(T)} true matrices")
    tp = fp = tn = fn = 0
    for e, t in zip(E, T):
        if e.shape != t.shape:
            raise ValueError(f"shape mismatch {e.shape} vs {t.shape}")
        iu = np.triu_indices(t.shape[0], 1)
        pe = np.abs(e[iu]) > tol
        pt = np.abs(t[iu]) > tol
        tp += int(np.count_nonzero(pe & pt))
        fp += int(np.count_nonzero(pe & ~pt))
        fn += int(np.count_nonzero(~pe & pt))
        tn += int(np.count_nonzero(~pe & ~pt))
    return ConfusionCounts(tp, fp, tn, fn)


def f1(counts: ConfusionCounts) -> float:
    """Harmonic mean of precision and recall; 0 when there are no true positives."""
    if counts.tp == 0:
        return 0.0
    prec, rec = counts.precision, counts.recall
    return 2 * prec * rec / (prec + rec)


def roc_auc(points: Sequence[tuple[float, float]]) -> float:
    """Area under the anchored, FPR-sorted ROC polyline (trapezoid rule).

    Supplied points sharing an FPR are replaced by their mean TPR.  The
    anchors ``(0, 0)`` and ``(1, 1)`` are then added as separate vertices, so
    a supplied point at FPR 0 or 1 forms a vertical step with zero area.
    """
    pts = [(float(x), float(y)) for x, y in points]
    for x, y in pts:
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise ValueError(f"ROC point ({x}, {y}) outside [0, 1]^2")
    by_fpr: dict[float, list[float]] = {}
    for x, y in pts:
        by_fpr.setdefault(x, []).append(y)
    xs = [0.0, *sorted(by_fpr), 1.0]
    ys = [0.0, *(float(np.mean(by_fpr[x])) for x in sorted(by_fpr)), 1.0]
    return float(sum((x1 - x0) * (y0 + y1) / 2 for x0, x1, y0, y1 in zip(xs, xs[1:], ys, ys[1:])))


def frobenius_error(est, truth) -> float:
    """``||Omega_hat^tot - Omega*^tot||_F`` over all tasks."""
    E, T = _est_matrices(est), _true_matrices(truth)
    return float(np.sqrt(sum(np.sum((e - t) ** 2) for e, t in zip(E, T))))


@dataclass
class MetricsReport:
    lambdas: list
    confusions: list
    f1_per_lambda: list
    roc: list
    f1: float
    auc: float
    runtime_seconds: dict
    v_used: float
    frobenius: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    @property
    def best_lambda(self) -> float:
        return self.lambdas[int(np.argmax(self.f1_per_lambda))]

    def to_dict(self) -> dict:
        return {
            "f1": self.f1,
            "auc": self.auc,
            "roc": [[x, y] for x, y in self.roc],
            "runtime_seconds": self.runtime_seconds,
            "lambdas": list(self.lambdas),
            "f1_per_lambda": list(self.f1_per_lambda),
            "confusion": [{"tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn} for c in self.confusions],
            "frobenius": list(self.frobenius),
            "v_used": self.v_used,
            "best_lambda": self.best_lambda,
            "auc_method": AUC_METHOD,
            "metadata": self.metadata,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["lambda", "fpr", "tpr", "f1", "seconds", "tp", "fp", "tn", "fn", "frobenius"])
        per = self.runtime_seconds["per_lambda"]
        for i, lam in enumerate(self.lambdas):
            c = self.confusions[i]
            fro = self.frobenius[i] if self.frobenius else ""
            writer.writerow([repr(lam), repr(c.fpr), repr(c.tpr), repr(self.f1_per_lambda[i]),
                             repr(per[i]), c.tp, c.fp, c.tn, c.fn, repr(fro) if fro != "" else ""])
        return buf.getvalue()


def sweep(data: TaskDataset, truth, w: KnowledgeWeights, lambdas: Sequence[float] | str,
          v: float | None = None, v_grid: Sequence[float] = DEFAULT_V_GRID,
          workers: int | None = None, tol: float = DEFAULT_TOL,
          rcond_min: float = RCOND_MIN, path_steps: int = 30) -> MetricsReport:
    """Estimate once per ``lambda`` from a single backward map and score each result.

    ``runtime_seconds`` holds the per-lambda estimation times, their sum
    (``total``), the backward-map time and the overall wall clock.

    ``lambdas`` may also be the string ``"path"``, which builds
    :func:`~jeek.entry_lp.lambda_path` (``path_steps`` values) from the backward map.
    """
    wall0 = time.perf_counter()
    cov = sample_covariance(data)
    v_used = select_v(cov, v_grid, rcond_min) if v is None else float(v)
    bmap = backward_map(cov, v_used)
    t_bmap = time.perf_counter() - wall0
    if isinstance(lambdas, str):
        if lambdas != "path":
            raise ValueError(f"unknown lambda spec {lambdas!r}")
        lambdas = lambda_path(bmap, path_steps)
    if not len(lambdas):
        raise ValueError("need at least one lambda")

    confs, f1s, roc, per, fro = [], [], [], [], []
    for lam in lambdas:
        t0 = time.perf_counter()
        est = estimate(bmap, w, float(lam), workers)
        per.append(time.perf_counter() - t0)
        c = confusion(est, truth, tol)
        confs.append(c)
        f1s.append(f1(c))
        roc.append((c.fpr, c.tpr))
        fro.append(frobenius_error(est, truth))
    runtime = {"per_lambda": per, "total": float(sum(per)), "backward_map": t_bmap,
               "wall": time.perf_counter() - wall0}
    return MetricsReport(list(map(float, lambdas)), confs, f1s, roc, max(f1s), roc_auc(roc),
                         runtime, v_used, fro)
