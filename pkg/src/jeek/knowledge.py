"""Knowledge-as-weight matrices and the kw-norm.

Prior knowledge enters the estimator only through ``K + 1`` strictly positive
weight matrices: one per task for the individual parts ``W_I^{(i)}`` and one
``W_S`` for the part shared by all tasks.  Small weights make an entry cheap
to use, large weights make it expensive.

Node and task indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np


def _frozen(a, name: str) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class KnowledgeWeights:
    """``K`` individual weight matrices plus one shared weight matrix."""

    w_individual: tuple
    w_shared: np.ndarray

    def __post_init__(self):
        wi = tuple(_frozen(w, f"w_individual[{i}]") for i, w in enumerate(self.w_individual))
        ws = _frozen(self.w_shared, "w_shared")
        if not wi:
            raise ValueError("need at least one individual weight matrix")
        for i, w in enumerate(wi + (ws,)):
            label = "w_shared" if i == len(wi) else f"w_individual[{i}]"
            if w.shape != ws.shape:
                raise ValueError(f"{label} has shape {w.shape}, expected {ws.shape}")
            if not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValueError(f"{label} must be strictly positive and finite")
            if np.max(np.abs(w - w.T)) > 1e-12:
                raise ValueError(f"{label} must be symmetric")
        object.__setattr__(self, "w_individual", wi)
        object.__setattr__(self, "w_shared", ws)

    @property
    def K(self) -> int:
        return len(self.w_individual)

    @property
    def p(self) -> int:
        return self.w_shared.shape[0]

    def matrices(self) -> list[np.ndarray]:
        """``[W_I^{(1)}, ..., W_I^{(K)}, W_S]``, the on-disk container order."""
        return list(self.w_individual) + [self.w_shared]

    @classmethod
    def from_matrices(cls, mats: Sequence[np.ndarray]) -> "KnowledgeWeights":
        if len(mats) < 2:
            raise ValueError("a weight container holds K individual matrices followed by W_S")
        return cls(tuple(mats[:-1]), mats[-1])


@dataclass(frozen=True)
class PrecisionDecomposition:
    """Individual parts ``Omega_I^{(i)}`` and the shared part ``Omega_S``."""

    omega_individual: tuple
    omega_shared: np.ndarray

    def __post_init__(self):
        oi = tuple(_frozen(o, f"omega_individual[{i}]") for i, o in enumerate(self.omega_individual))
        os_ = _frozen(self.omega_shared, "omega_shared")
        for i, o in enumerate(oi):
            if o.shape != os_.shape:
                raise ValueError(f"omega_individual[{i}] has shape {o.shape}, expected {os_.shape}")
        for o in oi + (os_,):
            if np.max(np.abs(o - o.T), initial=0.0) > 1e-12:
                raise ValueError("precision parts must be symmetric")
        object.__setattr__(self, "omega_individual", oi)
        object.__setattr__(self, "omega_shared", os_)

    @property
    def K(self) -> int:
        return len(self.omega_individual)

    @property
    def p(self) -> int:
        return self.omega_shared.shape[0]

    @property
    def omega_total(self) -> tuple:
        return tuple(o + self.omega_shared for o in self.omega_individual)

    def support_counts(self, tol: float = 0.0) -> tuple[int, int]:
        """Nonzero tallies ``(k_i, k_s)`` of the stacked individual and shared parts.

        The shared part is counted once per task, as in ``Omega_S^tot``.
        """
        k_i = sum(int(np.count_nonzero(np.abs(o) > tol)) for o in self.omega_individual)
        k_s = self.K * int(np.count_nonzero(np.abs(self.omega_shared) > tol))
        return k_i, k_s

    @classmethod
    def zeros(cls, p: int, K: int) -> "PrecisionDecomposition":
        return cls(tuple(np.zeros((p, p)) for _ in range(K)), np.zeros((p, p)))


def _check_pair(decomp: PrecisionDecomposition, w: KnowledgeWeights) -> None:
    if decomp.K != w.K or decomp.p != w.p:
        raise ValueError(
            f"shape mismatch: decomposition (K={decomp.K}, p={decomp.p}) vs "
            f"weights (K={w.K}, p={w.p})")


def kw_norm_value(decomp: PrecisionDecomposition, w: KnowledgeWeights) -> float:
    """``sum_i ||W_I^(i) o Omega_I^(i)||_1 + K ||W_S o Omega_S||_1``."""
    _check_pair(decomp, w)
    ind = sum(float(np.abs(wi * oi).sum()) for wi, oi in zip(w.w_individual, decomp.omega_individual))
    return ind + w.K * float(np.abs(w.w_shared * decomp.omega_shared).sum())


def _as_blocks(u, K: int, p: int) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape == (K, p, p):
        return u
    if u.shape == (p, K * p):
        return u.reshape(p, K, p).transpose(1, 0, 2)
    raise ValueError(f"expected a ({p}, {K * p}) block or ({K}, {p}, {p}) stack, got {u.shape}")


def kw_dual_norm(u, w: KnowledgeWeights) -> float:
    """Dual of the kw-norm: ``max(||u / W_I^tot||_inf, ||u / W_S^tot||_inf)``.

    ``u`` is either the ``p x Kp`` horizontal block ``(u^(1), ..., u^(K))`` or
    an equivalent ``(K, p, p)`` stack.
    """
    blocks = _as_blocks(u, w.K, w.p)
    wi = np.stack(w.w_individual)
    return float(max(np.max(np.abs(blocks / wi)), np.max(np.abs(blocks / w.w_shared))))


# ---------------------------------------------------------------------------
# weight builders
# ---------------------------------------------------------------------------

def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not gamma > 1:
        raise ValueError(f"gamma must exceed 1, got {gamma}")
    return gamma


def _check_nodes(nodes: Iterable[int], p: int) -> list[int]:
    out = sorted({int(j) for j in nodes})
    for j in out:
        if not 0 <= j < p:
            raise ValueError(f"node index {j} out of range for p={p}")
    return out


def uniform_weights(p: int, K: int) -> KnowledgeWeights:
    """All-ones weights: the no-knowledge baseline."""
    ones = np.ones((p, p))
    return KnowledgeWeights(tuple(ones for _ in range(K)), ones)


def build_matrix_weights(W, K: int) -> KnowledgeWeights:
    """Use one knowledge matrix (e.g. a distance matrix) for every part."""
    W = np.asarray(W, dtype=float)
    if np.any(W <= 0):
        raise ValueError("knowledge matrix must be strictly positive")
    return KnowledgeWeights(tuple(W.copy() for _ in range(K)), W.copy())


def build_cohub_weights(p: int, K: int, hub_nodes: Iterable[int], gamma: float) -> KnowledgeWeights:
    """Shared weights ``1/gamma`` on every off-diagonal entry touching a known co-hub."""
    gamma = _check_gamma(gamma)
    hubs = _check_nodes(hub_nodes, p)
    ws = np.ones((p, p))
    for j in hubs:
        ws[j, :] = 1.0 / gamma
        ws[:, j] = 1.0 / gamma
    np.fill_diagonal(ws, 1.0)
    return KnowledgeWeights(tuple(np.ones((p, p)) for _ in range(K)), ws)


def default_perturbed_classes(K: int) -> tuple[bool, ...]:
    # 1st, 3rd, ... task carry the hub; 2nd, 4th, ... do not
    return tuple(i % 2 == 0 for i in range(K))


def build_perturbed_weights(p: int, K: int, hub_nodes: Iterable[int], gamma: float,
                            present: Sequence[bool] | None = None) -> KnowledgeWeights:
    """Individual weights for perturbed hubs.

    Tasks where the hub is ``present`` get ``1/gamma`` on the hub's row and
    column, the other tasks get ``gamma``.  By default the 1st, 3rd, ... tasks
    are the present class.
    """
    gamma = _check_gamma(gamma)
    if K < 2:
        raise ValueError("perturbed-hub weights need K >= 2")
    hubs = _check_nodes(hub_nodes, p)
    present = default_perturbed_classes(K) if present is None else tuple(bool(x) for x in present)
    if len(present) != K:
        raise ValueError(f"{len(present)} class labels for K={K}")
    wi = []
    for i in range(K):
        m = np.ones((p, p))
        val = 1.0 / gamma if present[i] else gamma
        for j in hubs:
            m[j, :] = val
            m[:, j] = val
        np.fill_diagonal(m, 1.0)
        wi.append(m)
    return KnowledgeWeights(tuple(wi), np.ones((p, p)))


def group_edges(nodes: Iterable[int]) -> list[tuple[int, int]]:
    """All unordered pairs within one node group."""
    return list(combinations(sorted({int(j) for j in nodes}), 2))


def build_group_weights(p: int, K: int, edge_set: Iterable[tuple[int, int]],
                        gamma: float) -> KnowledgeWeights:
    """Shared weights ``1/gamma`` on listed node pairs (group members or known edges)."""
    gamma = _check_gamma(gamma)
    ws = np.ones((p, p))
    for j, k in edge_set:
        j, k = int(j), int(k)
        if j == k:
            raise ValueError(f"self-pair ({j}, {k}) is not an edge")
        _check_nodes((j, k), p)
        ws[j, k] = ws[k, j] = 1.0 / gamma
    return KnowledgeWeights(tuple(np.ones((p, p)) for _ in range(K)), ws)
