"""Sample covariances and the proxy backward mapping ``[T_v(S)]^{-1}``.

``T_v`` adds ``v`` to the diagonal and soft-thresholds every off-diagonal
entry at level ``v``.  For ``p > n`` the raw sample covariance is singular, but
``T_v(S)`` is invertible for a suitable ``v`` and its inverse serves as a
closed-form surrogate for the precision matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

#: Default threshold grid ``{0.001 i : i = 1..1000}``.
DEFAULT_V_GRID = tuple(round(0.001 * i, 3) for i in range(1, 1001))

#: Minimum reciprocal 1-norm condition estimate accepted as "invertible".
RCOND_MIN = 1e-10

#: Largest tolerated entry of ``c T - I`` for an accepted inverse.
RESIDUAL_MAX = 1e-6


class SingularBackwardMapError(np.linalg.LinAlgError):
    """``T_v(S^{(i)})`` could not be inverted reliably for task ``task``."""

    def __init__(self, task: int, reason: str):
        super().__init__(f"task {task}: {reason}")
        self.task = task


class ThresholdSelectionError(ValueError):
    pass


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TaskDataset:
    """Sample matrices for ``K`` related tasks over the same ``p`` variables.

    Parameters
    ----------
    tasks : sequence of arrays, each of shape (n_i, p)
    variable_names : optional list of ``p`` identifiers
    """

    tasks: tuple
    variable_names: tuple | None = None

    def __post_init__(self):
        tasks = tuple(_readonly(np.atleast_2d(t)) for t in self.tasks)
        if len(tasks) < 1:
            raise ValueError("need at least one task")
        p = tasks[0].shape[1]
        if p < 2:
            raise ValueError(f"need p >= 2 variables, got {p}")
        for i, X in enumerate(tasks):
            if X.ndim != 2 or X.shape[1] != p:
                raise ValueError(f"task {i} has shape {X.shape}; expected (n, {p})")
            if X.shape[0] < 2:
                raise ValueError(f"task {i} has n={X.shape[0]} samples; need at least 2")
            if not np.all(np.isfinite(X)):
                raise ValueError(f"task {i} contains non-finite values")
        object.__setattr__(self, "tasks", tasks)
        if self.variable_names is not None:
            names = tuple(str(s) for s in self.variable_names)
            if len(names) != p:
                raise ValueError(f"{len(names)} variable names for p={p}")
            object.__setattr__(self, "variable_names", names)

    @property
    def K(self) -> int:
        return len(self.tasks)

    @property
    def p(self) -> int:
        return self.tasks[0].shape[1]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(X.shape[0] for X in self.tasks)

    @property
    def n_tot(self) -> int:
        return sum(self.sizes)


@dataclass(frozen=True)
class CovarianceSet:
    sigmas: tuple
    means: tuple = field(default=())

    def __post_init__(self):
        sigmas = tuple(_readonly(s) for s in self.sigmas)
        for i, S in enumerate(sigmas):
            if S.ndim != 2 or S.shape[0] != S.shape[1]:
                raise ValueError(f"covariance {i} is not square: {S.shape}")
            if np.max(np.abs(S - S.T), initial=0.0) > 1e-12:
                raise ValueError(f"covariance {i} is not symmetric")
            if np.any(np.diag(S) < 0):
                raise ValueError(f"covariance {i} has a negative diagonal entry")
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "means", tuple(_readonly(m) for m in self.means))

    @property
    def K(self) -> int:
        return len(self.sigmas)

    @property
    def p(self) -> int:
        return self.sigmas[0].shape[0]


@dataclass(frozen=True)
class BackwardMap:
    """Per-task proxy backward maps ``c^{(i)} = [T_v(S^{(i)})]^{-1}``."""

    maps: tuple
    v_used: float

    def __post_init__(self):
        maps = tuple(_readonly(c) for c in self.maps)
        for i, c in enumerate(maps):
            if not np.all(np.isfinite(c)):
                raise ValueError(f"backward map {i} has non-finite entries")
        if self.v_used < 0:
            raise ValueError("v_used must be nonnegative")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "v_used", float(self.v_used))

    @property
    def K(self) -> int:
        return len(self.maps)

    @property
    def p(self) -> int:
        return self.maps[0].shape[0]


def sample_covariance(data: TaskDataset) -> CovarianceSet:
    """Unbiased (``n_i - 1`` divisor) covariance of every task."""
    sigmas, means = [], []
    for X in data.tasks:
        mu = X.mean(axis=0)
        Xc = X - mu
        S = (Xc.T @ Xc) / (X.shape[0] - 1)
        S = (S + S.T) / 2.0
        sigmas.append(S)
        means.append(mu)
    return CovarianceSet(tuple(sigmas), tuple(means))


def soft_threshold_matrix(A: np.ndarray, v: float) -> np.ndarray:
    """Apply ``T_v``: ``A_ii + v`` on the diagonal, ``sign(A_ij) max(|A_ij| - v, 0)`` elsewhere."""
    if v < 0:
        raise ValueError(f"threshold v must be nonnegative, got {v}")
    A = np.asarray(A, dtype=float)
    out = np.sign(A) * np.maximum(np.abs(A) - v, 0.0)
    np.fill_diagonal(out, np.diag(A) + v)
    return out + 0.0


def reciprocal_condition(A: np.ndarray) -> float:
    """LAPACK 1-norm reciprocal condition estimate from an LU factorization.

    Returns 0.0 when the factorization hits an exactly zero pivot.
    """
    A = np.asarray(A, dtype=float)
    lu, piv, info = lapack.dgetrf(A)
    if info != 0:
        return 0.0
    anorm = np.abs(A).sum(axis=0).max()
    if anorm == 0.0:
        return 0.0
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    return float(rcond) if info == 0 else 0.0


def is_invertible(A: np.ndarray, rcond_min: float = RCOND_MIN) -> bool:
    return reciprocal_condition(A) > rcond_min


def select_v(cov: CovarianceSet, grid: Sequence[float] = DEFAULT_V_GRID,
             rcond_min: float = RCOND_MIN) -> float:
    """Smallest grid value for which every ``T_v(S^{(i)})`` is invertible.

    Raising ``rcond_min`` above its default asks for a better-conditioned
    ``T_v(S)`` and so pushes the selected ``v`` up.
    """
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("v grid is empty")
    if any(v < 0 for v in grid):
        raise ValueError("v grid must be nonnegative")
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("v grid must be ascending")
    for v in grid:
        if all(is_invertible(soft_threshold_matrix(S, v), rcond_min) for S in cov.sigmas):
            return v
    raise ThresholdSelectionError(
        f"no v in [{grid[0]}, {grid[-1]}] makes T_v(S) invertible for all {cov.K} tasks")


def _invert_task(i: int, S: np.ndarray, v: float) -> np.ndarray:
    T = soft_threshold_matrix(S, v)
    if not is_invertible(T):
        raise SingularBackwardMapError(i, f"T_v(S) is singular or ill-conditioned at v={v}")
    c = lu_solve(lu_factor(T, check_finite=False), np.eye(T.shape[0]), check_finite=False)
    resid = np.max(np.abs(c @ T - np.eye(T.shape[0])))
    if not np.isfinite(resid) or resid > RESIDUAL_MAX:
        raise SingularBackwardMapError(i, f"inverse residual {resid:.3g} exceeds {RESIDUAL_MAX}")
    return c


def backward_map(cov: CovarianceSet, v: float) -> BackwardMap:
    """Invert ``T_v(S^{(i)})`` for every task (LU with partial pivoting)."""
    if v < 0:
        raise ValueError(f"threshold v must be nonnegative, got {v}")
    return BackwardMap(tuple(_invert_task(i, S, v) for i, S in enumerate(cov.sigmas)), v)


def proxy_backward_map(data: TaskDataset, v: float | None = None,
                       grid: Sequence[float] = DEFAULT_V_GRID,
                       rcond_min: float = RCOND_MIN) -> BackwardMap:
    """Covariance, threshold selection (if ``v`` is None) and inversion in one call."""
    cov = sample_covariance(data)
    if v is None:
        v = select_v(cov, grid, rcond_min)
    return backward_map(cov, v)
