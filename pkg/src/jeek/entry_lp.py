"""Entry-wise solution of the joint estimator.

The joint program separates into one tiny linear program per matrix position
``(j, k)``.  With ``a_i`` the individual entry of task ``i``, ``b`` the shared
entry and ``c_i`` the backward-map entry::

    minimize    sum_i w_i |a_i| + K w_s |b|
    subject to  |a_i + b - c_i| <= lam * min(w_i, w_s),   i = 1..K

Splitting ``a_i = a_i+ - a_i-`` and ``b = b+ - b-`` gives an LP in ``2K + 2``
nonnegative variables with ``2K`` inequality rows.  The slack basis is dual
feasible (all costs are positive), so a dual simplex reaches the optimum
without a phase-one step.  A second, primal pass then moves along the optimal
face to maximize ``|b|``, which makes the answer unique when the LP has ties.

Every position is independent, so positions can be split across worker
threads in any way; each one runs the same scalar code, so the output is
bit-identical for any schedule.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .backward import BackwardMap
from .knowledge import KnowledgeWeights, PrecisionDecomposition

try:
    from numba import njit
except ImportError:  # pragma: no cover - pure-Python fallback, very slow
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

_PIVOT_TOL = 1e-9
_COST_TOL = 1e-12
_RHS_TOL = 1e-12


@njit(cache=True, nogil=True)
def _pivot(T, d1, d2, basis, is_basic, r, j):
    m, ncol = T.shape
    piv = T[r, j]
    for q in range(ncol):
        T[r, q] /= piv
    T[r, j] = 1.0
    for i in range(m):
        if i != r:
            f = T[i, j]
            if f != 0.0:
                for q in range(ncol):
                    T[i, q] -= f * T[r, q]
                T[i, j] = 0.0
    f1 = d1[j]
    f2 = d2[j]
    for q in range(ncol - 1):
        d1[q] -= f1 * T[r, q]
        d2[q] -= f2 * T[r, q]
    d1[j] = 0.0
    d2[j] = 0.0
    is_basic[basis[r]] = False
    basis[r] = j
    is_basic[j] = True


@njit(cache=True, nogil=True)
def _solve_one(c, w, ws, lam, T, d1, d2, basis, is_basic, x):
    """Solve one entry problem in place; returns (b, ok) and fills ``x``."""
    K = c.shape[0]
    m = 2 * K
    nstruct = 2 * K + 2
    ncol = nstruct + m
    rhs = ncol  # column index of the right-hand side

    scale = 1.0
    for i in range(K):
        if abs(c[i]) > scale:
            scale = abs(c[i])
    cmax = K * ws
    for i in range(K):
        if w[i] > cmax:
            cmax = w[i]
    ftol = _RHS_TOL * scale
    dtol = _COST_TOL * cmax

    for i in range(m):
        for q in range(ncol + 1):
            T[i, q] = 0.0
    for q in range(ncol):
        d1[q] = 0.0
        d2[q] = 0.0
        is_basic[q] = False

    for i in range(K):
        t = lam * min(w[i], ws)
        up = 2 * i
        lo = 2 * i + 1
        T[up, i] = 1.0
        T[up, K + i] = -1.0
        T[up, 2 * K] = 1.0
        T[up, 2 * K + 1] = -1.0
        T[up, nstruct + up] = 1.0
        T[up, rhs] = c[i] + t
        T[lo, i] = -1.0
        T[lo, K + i] = 1.0
        T[lo, 2 * K] = -1.0
        T[lo, 2 * K + 1] = 1.0
        T[lo, nstruct + lo] = 1.0
        T[lo, rhs] = -(c[i] - t)
        d1[i] = w[i]
        d1[K + i] = w[i]
    d1[2 * K] = K * ws
    d1[2 * K + 1] = K * ws
    d2[2 * K] = -1.0
    d2[2 * K + 1] = -1.0
    for r in range(m):
        basis[r] = nstruct + r
        is_basic[nstruct + r] = True

    max_iter = 50 * (m + ncol)
    ok = True

    # dual simplex, Bland's rule: leave on the infeasible row whose basic
    # variable has the smallest index, enter on the smallest-index min ratio
    it = 0
    while True:
        r = -1
        for i in range(m):
            if T[i, rhs] < -ftol and (r < 0 or basis[i] < basis[r]):
                r = i
        if r < 0:
            break
        it += 1
        if it > max_iter:
            ok = False
            break
        jbest = -1
        best = 0.0
        for j in range(ncol):
            if not is_basic[j] and T[r, j] < -_PIVOT_TOL:
                ratio = d1[j] / (-T[r, j])
                if jbest < 0 or ratio < best - 1e-12 * (1.0 + abs(best)):
                    jbest = j
                    best = ratio
        if jbest < 0:
            ok = False
            break
        _pivot(T, d1, d2, basis, is_basic, r, jbest)

    # lexicographic pass: among zero-reduced-cost columns, increase |b|
    if ok:
        it = 0
        while True:
            jin = -1
            for j in range(ncol):
                if not is_basic[j] and abs(d1[j]) <= dtol and d2[j] < -1e-12:
                    jin = j
                    break
            if jin < 0:
                break
            it += 1
            if it > max_iter:
                break
            r = -1
            best = 0.0
            for i in range(m):
                if T[i, jin] > _PIVOT_TOL:
                    ratio = max(T[i, rhs], 0.0) / T[i, jin]
                    if r < 0 or ratio < best - 1e-12 * (1.0 + abs(best)) or (
                            abs(ratio - best) <= 1e-12 * (1.0 + abs(best))
                            and basis[i] < basis[r]):
                        r = i
                        best = ratio
            if r < 0:
                break
            _pivot(T, d1, d2, basis, is_basic, r, jin)

    for q in range(ncol):
        x[q] = 0.0
    for i in range(m):
        v = T[i, rhs]
        if abs(v) <= ftol:
            v = 0.0
        x[basis[i]] = v
    return ok


@njit(cache=True, nogil=True)
def _solve_batch(C, WI, WS, lam, out_a, out_b, out_ok):
    N, K = C.shape
    m = 2 * K
    ncol = 4 * K + 2
    T = np.empty((m, ncol + 1))
    d1 = np.empty(ncol)
    d2 = np.empty(ncol)
    basis = np.empty(m, dtype=np.int64)
    is_basic = np.empty(ncol, dtype=np.bool_)
    x = np.empty(ncol)
    for e in range(N):
        ok = _solve_one(C[e], WI[e], WS[e], lam, T, d1, d2, basis, is_basic, x)
        for i in range(K):
            out_a[e, i] = (x[i] - x[K + i]) + 0.0
        out_b[e] = (x[2 * K] - x[2 * K + 1]) + 0.0
        out_ok[e] = ok


def solve_entries(C: np.ndarray, WI: np.ndarray, WS: np.ndarray, lam: float,
                  workers: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Solve ``N`` independent entry problems.

    Parameters
    ----------
    C, WI : arrays of shape (N, K)
        Backward-map entries and individual weights.
    WS : array of shape (N,)
        Shared weights.
    lam : float
        Regularization level, > 0.
    workers : int
        Number of threads; contiguous chunks of entries go to each.

    Returns
    -------
    a : (N, K) individual parts, b : (N,) shared parts, ok : (N,) bool
    """
    C = np.ascontiguousarray(C, dtype=np.float64)
    WI = np.ascontiguousarray(WI, dtype=np.float64)
    WS = np.ascontiguousarray(WS, dtype=np.float64)
    if C.ndim != 2 or WI.shape != C.shape or WS.shape != (C.shape[0],):
        raise ValueError(f"inconsistent entry shapes {C.shape}, {WI.shape}, {WS.shape}")
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    if np.any(WI <= 0) or np.any(WS <= 0):
        raise ValueError("entry weights must be strictly positive")
    N, K = C.shape
    a = np.empty((N, K))
    b = np.empty(N)
    ok = np.empty(N, dtype=np.bool_)
    workers = max(1, int(workers))
    if workers == 1 or N < 2 * workers:
        _solve_batch(C, WI, WS, float(lam), a, b, ok)
    else:
        bounds = np.linspace(0, N, workers + 1).astype(int)

        def run(s, t):
            _solve_batch(C[s:t], WI[s:t], WS[s:t], float(lam), a[s:t], b[s:t], ok[s:t])

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for f in [pool.submit(run, s, t) for s, t in zip(bounds[:-1], bounds[1:]) if t > s]:
                f.result()
    return a, b, ok


@dataclass(frozen=True)
class EntryProblem:
    """One ``(j, k)`` position: backward-map values, weights and ``lambda``."""

    c: tuple
    w_ind: tuple
    w_shared: float
    lam: float

    def __post_init__(self):
        c = tuple(float(x) for x in self.c)
        w = tuple(float(x) for x in self.w_ind)
        if len(c) != len(w) or not c:
            raise ValueError("c and w_ind must have the same nonzero length")
        if any(not x > 0 for x in w) or not float(self.w_shared) > 0:
            raise ValueError("weights must be strictly positive")
        if not float(self.lam) > 0:
            raise ValueError("lambda must be positive")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "w_ind", w)
        object.__setattr__(self, "w_shared", float(self.w_shared))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def K(self) -> int:
        return len(self.c)

    def tolerances(self) -> np.ndarray:
        return self.lam * np.minimum(np.array(self.w_ind), self.w_shared)


@dataclass(frozen=True)
class EntrySolution:
    a: tuple
    b: float
    objective: float
    feasible: bool


def entry_objective(a: Sequence[float], b: float, w_ind: Sequence[float], w_shared: float) -> float:
    a = np.asarray(a, dtype=float)
    return float(np.sum(np.abs(np.asarray(w_ind) * a)) + len(a) * abs(w_shared * b))


def solve_entry(prob: EntryProblem) -> EntrySolution:
    a, b, ok = solve_entries(np.array([prob.c]), np.array([prob.w_ind]),
                             np.array([prob.w_shared]), prob.lam)
    a0 = tuple(float(x) for x in a[0])
    b0 = float(b[0])
    feasible = bool(ok[0]) and bool(np.all(
        np.abs(np.array(a0) + b0 - np.array(prob.c)) <= prob.tolerances() + 1e-9))
    return EntrySolution(a0, b0, entry_objective(a0, b0, prob.w_ind, prob.w_shared), feasible)


class EntrySolveError(RuntimeError):
    pass


#: Environment variable consulted when no worker count is given.
THREADS_ENV = "JEEK_THREADS"


def default_workers() -> int:
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def estimate(bmap: BackwardMap, w: KnowledgeWeights, lam: float,
             workers: int | None = None) -> PrecisionDecomposition:
    """Run the entry-wise estimator over every position ``k <= j``.

    Diagonal positions go through the same entry LP as off-diagonal ones.
    ``workers`` defaults to ``$JEEK_THREADS`` or 1.
    """
    if bmap.K != w.K or bmap.p != w.p:
        raise ValueError(
            f"shape mismatch: backward map (K={bmap.K}, p={bmap.p}) vs weights (K={w.K}, p={w.p})")
    p, K = bmap.p, bmap.K
    jj, kk = np.tril_indices(p)
    C = np.stack([c[jj, kk] for c in bmap.maps], axis=1)
    WI = np.stack([wi[jj, kk] for wi in w.w_individual], axis=1)
    WS = w.w_shared[jj, kk]
    a, b, ok = solve_entries(C, WI, WS, lam, workers or default_workers())
    if not ok.all():
        bad = int(np.flatnonzero(~ok)[0])
        raise EntrySolveError(f"entry LP failed at position ({jj[bad]}, {kk[bad]})")
    omega_i = []
    for i in range(K):
        m = np.zeros((p, p))
        m[jj, kk] = a[:, i]
        m[kk, jj] = a[:, i]
        omega_i.append(m)
    omega_s = np.zeros((p, p))
    omega_s[jj, kk] = b
    omega_s[kk, jj] = b
    return PrecisionDecomposition(tuple(omega_i), omega_s)


def lambda_grid(p: int, K: int, n_tot: int, steps: int = 30) -> list[float]:
    """``{0.01 sqrt(log(K p) / n_tot) i : i = 1..steps}`` (natural log)."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    base = 0.01 * math.sqrt(math.log(K * p) / n_tot)
    return [base * i for i in range(1, steps + 1)]


def lambda_path(bmap: BackwardMap, steps: int = 30, ratio: float = 1e-3) -> list[float]:
    """Ascending geometric grid scaled to the backward map.

    The top value is the largest off-diagonal ``|c|``, where every off-diagonal
    estimate under all-ones weights is exactly zero.  The bottom value is
    ``ratio`` times that.  Unlike :func:`lambda_grid` this adapts to the scale
    of ``c``, which grows quickly as ``v`` shrinks.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must lie in (0, 1), got {ratio}")
    iu = np.triu_indices(bmap.p, 1)
    top = max(float(np.max(np.abs(c[iu]), initial=0.0)) for c in bmap.maps)
    if top == 0.0:
        raise ValueError("backward map has no nonzero off-diagonal entry")
    if steps == 1:
        return [top]
    return [float(x) for x in np.geomspace(top * ratio, top, steps)]
