"""Independent reference computations used by the test-suite.

Nothing in here imports from ``jeek``; each routine recomputes its quantity
from first principles so it can serve as a check on the library.
"""

import itertools
import math

import numpy as np


def covariance_double_loop(X):
    """Unbiased sample covariance with explicit loops over variable pairs."""
    X = [list(map(float, row)) for row in X]
    n, p = len(X), len(X[0])
    means = [sum(X[s][j] for s in range(n)) / n for j in range(p)]
    out = [[0.0] * p for _ in range(p)]
    for j in range(p):
        for k in range(p):
            acc = 0.0
            for s in range(n):
                acc += (X[s][j] - means[j]) * (X[s][k] - means[k])
            out[j][k] = acc / (n - 1)
    return np.array(out)


def gauss_jordan_inverse(A):
    """Invert ``A`` by Gauss-Jordan elimination with partial pivoting."""
    A = [list(map(float, row)) for row in A]
    n = len(A)
    aug = [A[i] + [1.0 if i == j else 0.0 for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if abs(aug[piv][col]) < 1e-300:
            raise ZeroDivisionError("singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        scale = aug[col][col]
        aug[col] = [x / scale for x in aug[col]]
        for r in range(n):
            if r != col:
                f = aug[r][col]
                if f != 0.0:
                    aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return np.array([row[n:] for row in aug])


def det_2x2(A):
    return A[0][0] * A[1][1] - A[0][1] * A[1][0]


def soft_threshold_loop(A, v):
    A = np.asarray(A, dtype=float)
    out = np.empty_like(A)
    p = A.shape[0]
    for i in range(p):
        for j in range(p):
            if i == j:
                out[i, j] = A[i, j] + v
            else:
                mag = abs(A[i, j]) - v
                out[i, j] = math.copysign(mag, A[i, j]) if mag > 0 else 0.0
    return out


# --------------------------------------------------------------------------
# Entry LP oracles
# --------------------------------------------------------------------------

def _entry_bounds(c, w, ws, lam):
    c = np.asarray(c, dtype=float)
    w = np.asarray(w, dtype=float)
    tol = lam * np.minimum(w, ws)
    return c - tol, c + tol


def _best_a(lo, hi):
    # smallest-magnitude point of each interval [lo, hi]
    return np.where(lo > 0, lo, np.where(hi < 0, hi, 0.0))


def entry_objective(a, b, w, ws):
    a = np.asarray(a, dtype=float)
    return float(np.sum(np.abs(np.asarray(w) * a)) + len(a) * abs(ws * b))


def entry_breakpoint_oracle(c, w, ws, lam):
    """Exact solve of one entry problem by enumerating shared-part breakpoints.

    For a fixed shared value ``b`` the best individual values are the
    smallest-magnitude points of ``[l_i - b, u_i - b]``, so the objective is a
    convex piecewise-linear function of ``b`` whose kinks lie in
    ``{0} U {l_i} U {u_i}``.  Among optimal breakpoints the one with the
    largest ``|b|`` is returned.
    """
    lo, hi = _entry_bounds(c, w, ws, lam)
    candidates = np.concatenate([[0.0], lo, hi])
    best = None
    for b in candidates:
        a = _best_a(lo - b, hi - b)
        f = entry_objective(a, b, w, ws)
        if best is None:
            best = (f, a, b)
            continue
        scale = max(1.0, abs(best[0]))
        if f < best[0] - 1e-12 * scale:
            best = (f, a, b)
        elif abs(f - best[0]) <= 1e-12 * scale and abs(b) > abs(best[2]):
            best = (f, a, b)
    return best


def entry_vertex_oracle(c, w, ws, lam):
    """Minimum objective over all vertices of the hyperplane arrangement.

    Variables are ``(a_1..a_K, b)``.  The candidate hyperplanes are the
    constraint boundaries ``a_i + b = l_i``, ``a_i + b = u_i`` and the kinks
    of the absolute values ``a_i = 0``, ``b = 0``.  Every feasible
    intersection of ``K + 1`` independent hyperplanes is evaluated.
    """
    K = len(c)
    lo, hi = _entry_bounds(c, w, ws, lam)
    planes = []
    for i in range(K):
        row = np.zeros(K + 1)
        row[i] = 1.0
        row[K] = 1.0
        planes.append((row, lo[i]))
        planes.append((row, hi[i]))
        kink = np.zeros(K + 1)
        kink[i] = 1.0
        planes.append((kink, 0.0))
    kink = np.zeros(K + 1)
    kink[K] = 1.0
    planes.append((kink, 0.0))

    best = math.inf
    for combo in itertools.combinations(planes, K + 1):
        M = np.array([r for r, _ in combo])
        rhs = np.array([v for _, v in combo])
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        x = np.linalg.solve(M, rhs)
        a, b = x[:K], x[K]
        s = a + b
        if np.all(s >= lo - 1e-10) and np.all(s <= hi + 1e-10):
            best = min(best, entry_objective(a, b, w, ws))
    return best


def entry_grid_oracle(c, w, ws, lam, step=0.01, span=1.0):
    """Brute-force minimum over a regular grid of ``(a, b)`` plus boundary points.

    For each grid value of ``b`` every ``a_i`` is scanned on the grid and on
    the two interval endpoints ``l_i - b`` and ``u_i - b``.
    """
    lo, hi = _entry_bounds(c, w, ws, lam)
    grid = np.round(np.arange(-span, span + step / 2, step), 12)
    best = (math.inf, None, None)
    for b in grid:
        a = []
        cost = len(c) * abs(ws * b)
        for i in range(len(c)):
            cand = np.concatenate([grid, [lo[i] - b, hi[i] - b]])
            s = cand + b
            ok = cand[(s >= lo[i] - 1e-12) & (s <= hi[i] + 1e-12)]
            if ok.size == 0:
                cost = math.inf
                break
            ai = ok[np.argmin(np.abs(ok))]
            a.append(ai)
            cost += abs(w[i] * ai)
        if cost < best[0] - 1e-12:
            best = (cost, np.array(a), b)
    return best


# --------------------------------------------------------------------------
# kw-norm oracles
# --------------------------------------------------------------------------

def kw_elementwise_sum(omega_i, omega_s, w_i, w_s):
    total = 0.0
    K = len(omega_i)
    for t in range(K):
        for j in range(len(omega_s)):
            for k in range(len(omega_s)):
                total += abs(w_i[t][j][k] * omega_i[t][j][k])
    for j in range(len(omega_s)):
        for k in range(len(omega_s)):
            total += K * abs(w_s[j][k] * omega_s[j][k])
    return total


def dual_grid_sup(u, w_i, w_s, points_per_axis=5):
    """Grid-search ``sup <u, theta>`` over unit kw-norm decompositions, K = 1.

    ``theta = omega_I + omega_S`` with both parts general 2x2 matrices; each
    coordinate of a part is scanned on ``linspace(-1/w, 1/w, m)`` and points
    with kw-norm above one are discarded.
    """
    u = np.asarray(u, dtype=float).ravel()
    w_i = np.asarray(w_i, dtype=float).ravel()
    w_s = np.asarray(w_s, dtype=float).ravel()
    weights = np.concatenate([w_i, w_s])
    axes = [np.linspace(-1.0 / wt, 1.0 / wt, points_per_axis) for wt in weights]
    best = -math.inf
    # chunk over the first two axes to keep memory small
    rest = np.stack(np.meshgrid(*axes[2:], indexing="ij"), axis=-1).reshape(-1, len(axes) - 2)
    for x0 in axes[0]:
        for x1 in axes[1]:
            pts = np.concatenate(
                [np.broadcast_to([x0, x1], (len(rest), 2)), rest], axis=1)
            norm = np.abs(pts * weights).sum(axis=1)
            ok = norm <= 1.0 + 1e-12
            if not ok.any():
                continue
            half = len(u)
            val = pts[ok, :half] @ u + pts[ok, half:] @ u
            best = max(best, float(val.max()))
    return best


# --------------------------------------------------------------------------
# evaluation oracles
# --------------------------------------------------------------------------

def confusion_enumerate(est_list, true_list, tol=1e-8):
    tp = fp = tn = fn = 0
    for E, T in zip(est_list, true_list):
        p = len(T)
        for j in range(p):
            for k in range(j + 1, p):
                e = abs(E[j][k]) > tol
                t = abs(T[j][k]) > tol
                if e and t:
                    tp += 1
                elif e and not t:
                    fp += 1
                elif t:
                    fn += 1
                else:
                    tn += 1
    return tp, fp, tn, fn
