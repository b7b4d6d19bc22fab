"""Synthetic ground truths and Gaussian samples for benchmarking.

Every truth has the form ``Omega^(i) = B_I^(i) + B_S + delta I`` with
off-diagonal entries in ``{0, 0.5}``.  Randomness comes from numpy's Philox
counter-based generator seeded with a 64-bit integer, and draws happen in a
fixed order, so ``(parameters, seed)`` determines the output exactly:

1. one uniform per strictly-upper-triangle pair (row-major) for ``B_S``;
2. the same for ``B_I^(1)``, ``B_I^(2)``, ... in task order;
3. hub protocols only: hub nodes via ``Generator.choice(p, h, replace=False)``,
   then per task (perturbed) or once (co-hub), per hub in ascending order,
   the hub's neighbours via ``Generator.choice``.

A pair drawn in both ``B_S`` and ``B_I^(i)`` keeps only the shared entry, so
individual and shared supports stay disjoint.  ``delta`` is
``max(0, -min_i lambda_min(B_I^(i) + B_S)) + 0.2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .backward import TaskDataset
from .knowledge import PrecisionDecomposition

EDGE_VALUE = 0.5
DELTA_MARGIN = 0.2
RNG_NAME = "numpy.random.Philox"


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed) & 0xFFFFFFFFFFFFFFFF))


@dataclass(frozen=True)
class GroundTruth:
    """True decomposition plus diagonal boost ``delta`` and provenance metadata."""

    decomp: PrecisionDecomposition
    delta: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "delta", float(self.delta))
        for i, om in enumerate(self.precisions):
            lam_min = np.linalg.eigvalsh(om)[0]
            if not lam_min > 1e-8:
                raise ValueError(f"true precision {i} is not positive definite (min eig {lam_min:.3g})")
        S = np.abs(self.decomp.omega_shared) > 0
        for i, oi in enumerate(self.decomp.omega_individual):
            if np.any(S & (np.abs(oi) > 0)):
                raise ValueError(f"task {i}: individual and shared supports overlap")

    @property
    def K(self) -> int:
        return self.decomp.K

    @property
    def p(self) -> int:
        return self.decomp.p

    @property
    def precisions(self) -> tuple:
        eye = self.delta * np.eye(self.decomp.p)
        return tuple(o + eye for o in self.decomp.omega_total)

    @property
    def supports(self) -> tuple[set, set]:
        """``(S_I, S_S)``: ``{(task, j, k)}`` and ``{(j, k)}`` nonzero positions."""
        s_i = {(i, int(j), int(k)) for i, o in enumerate(self.decomp.omega_individual)
               for j, k in zip(*np.nonzero(o))}
        s_s = {(int(j), int(k)) for j, k in zip(*np.nonzero(self.decomp.omega_shared))}
        return s_i, s_s

    @property
    def hubs(self) -> list[int]:
        return list(self.metadata.get("hubs", []))


def _draw_upper(rng: np.random.Generator, probs: np.ndarray) -> np.ndarray:
    return rng.random(probs.shape[0]) < probs


def _symmetric(p: int, iu, mask: np.ndarray) -> np.ndarray:
    m = np.zeros((p, p))
    m[iu] = np.where(mask, EDGE_VALUE, 0.0)
    return m + m.T


def _random_parts(rng, p: int, K: int, shared_prob, task_prob: Callable[[int], np.ndarray]):
    """Draw ``B_S`` then ``B_I^(1..K)`` on the strict upper triangle."""
    iu = np.triu_indices(p, 1)
    npairs = iu[0].size
    shared = _draw_upper(rng, np.broadcast_to(shared_prob, (npairs,)))
    parts, collisions = [], []
    for i in range(K):
        drawn = _draw_upper(rng, np.broadcast_to(task_prob(i), (npairs,)))
        collisions.append(int(np.count_nonzero(drawn & shared)))
        parts.append(drawn & ~shared)
    return _symmetric(p, iu, shared), [_symmetric(p, iu, d) for d in parts], collisions


def _delta(shared: np.ndarray, individual: Sequence[np.ndarray]) -> float:
    worst = min(np.linalg.eigvalsh(b + shared)[0] for b in individual)
    return max(0.0, -worst) + DELTA_MARGIN


def _finish(shared, individual, meta) -> GroundTruth:
    decomp = PrecisionDecomposition(tuple(individual), shared)
    return GroundTruth(decomp, _delta(shared, individual), meta)


def gen_random_graphs(p: int, K: int, seed: int) -> GroundTruth:
    """Random graph model: task ``i`` (1-based) edges w.p. ``0.1 i``, shared edges w.p. 0.1."""
    if p < 2 or K < 1:
        raise ValueError("need p >= 2 and K >= 1")
    if K > 9:
        raise ValueError("random graph model supports K <= 9 (edge probability 0.1 i < 1)")
    rng = make_rng(seed)
    shared, individual, coll = _random_parts(rng, p, K, 0.1, lambda i: 0.1 * (i + 1))
    meta = {"protocol": "random", "p": p, "K": K, "seed": int(seed), "rng": RNG_NAME,
            "collisions": coll}
    return _finish(shared, individual, meta)


def n_hubs(p: int, hub_fraction: float) -> int:
    return max(1, math.ceil(round(hub_fraction * p, 9)))


def _pick_neighbours(rng, p: int, j: int, fraction: float) -> np.ndarray:
    others = np.array([k for k in range(p) if k != j])
    size = int(round(fraction * (p - 1)))
    return np.sort(rng.choice(others, size=size, replace=False))


def _clear_rows(m: np.ndarray, hubs) -> None:
    m[hubs, :] = 0.0
    m[:, hubs] = 0.0


def gen_cohub(p: int, K: int, seed: int, hub_fraction: float = 0.05,
              edge_fraction: float = 0.9) -> GroundTruth:
    """Random graphs plus co-hubs densely connected in every task.

    Hub rows are cleared, then ``round(0.9 (p - 1))`` random neighbours of
    each hub are connected in the shared part.
    """
    if p < 2 or K < 1:
        raise ValueError("need p >= 2 and K >= 1")
    if K > 9:
        raise ValueError("random graph model supports K <= 9")
    if hub_fraction * p < 1 - 1e-9:
        raise ValueError(f"p={p} too small for hub fraction {hub_fraction}")
    rng = make_rng(seed)
    shared, individual, coll = _random_parts(rng, p, K, 0.1, lambda i: 0.1 * (i + 1))
    hubs = sorted(int(h) for h in rng.choice(p, size=n_hubs(p, hub_fraction), replace=False))
    for m in [shared, *individual]:
        _clear_rows(m, hubs)
    for j in hubs:
        nb = _pick_neighbours(rng, p, j, edge_fraction)
        shared[j, nb] = EDGE_VALUE
        shared[nb, j] = EDGE_VALUE
    for m in individual:
        m[shared != 0] = 0.0
    meta = {"protocol": "cohub", "p": p, "K": K, "seed": int(seed), "rng": RNG_NAME,
            "hub_fraction": hub_fraction, "edge_fraction": edge_fraction,
            "hubs": hubs, "hub_part": "shared", "collisions": coll}
    return _finish(shared, individual, meta)


def gen_perturbed(p: int, K: int, seed: int, hub_fraction: float = 0.05,
                  dense_fraction: float = 0.9, sparse_fraction: float = 0.1) -> GroundTruth:
    """Random graphs plus perturbed hubs: dense in the 1st, 3rd, ... task, sparse in the others.

    Hub rows are cleared in every part, then hub edges are written into the
    individual parts.
    """
    if K < 2:
        raise ValueError("perturbed-hub simulation needs K >= 2")
    if p < 2 or K > 9:
        raise ValueError("need p >= 2 and K <= 9")
    if hub_fraction * p < 1 - 1e-9:
        raise ValueError(f"p={p} too small for hub fraction {hub_fraction}")
    rng = make_rng(seed)
    shared, individual, coll = _random_parts(rng, p, K, 0.1, lambda i: 0.1 * (i + 1))
    hubs = sorted(int(h) for h in rng.choice(p, size=n_hubs(p, hub_fraction), replace=False))
    for m in [shared, *individual]:
        _clear_rows(m, hubs)
    present = [i % 2 == 0 for i in range(K)]
    for i, m in enumerate(individual):
        frac = dense_fraction if present[i] else sparse_fraction
        for j in hubs:
            nb = _pick_neighbours(rng, p, j, frac)
            m[j, nb] = EDGE_VALUE
            m[nb, j] = EDGE_VALUE
    meta = {"protocol": "perturbed", "p": p, "K": K, "seed": int(seed), "rng": RNG_NAME,
            "hub_fraction": hub_fraction, "dense_fraction": dense_fraction,
            "sparse_fraction": sparse_fraction, "hubs": hubs, "present": present,
            "hub_part": "individual", "collisions": coll}
    return _finish(shared, individual, meta)


def brain_edge_probability(distance) -> np.ndarray:
    """``inv.logit(10 - W / 3)`` applied entrywise."""
    return expit(10.0 - np.asarray(distance, dtype=float) / 3.0)


def gen_brain(distance, K: int, seed: int) -> GroundTruth:
    """Distance-driven graphs: each part has an edge w.p. ``inv.logit(10 - W_jk / 3)``."""
    W = np.asarray(distance, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1] or W.shape[0] < 2:
        raise ValueError(f"distance must be a square matrix with p >= 2, got {W.shape}")
    if not np.allclose(W, W.T, rtol=0, atol=1e-12):
        raise ValueError("distance matrix must be symmetric")
    if np.any(W < 0) or np.any(np.diag(W) != 0):
        raise ValueError("distance matrix must be nonnegative with a zero diagonal")
    if K < 1:
        raise ValueError("need K >= 1")
    p = W.shape[0]
    probs = brain_edge_probability(W)[np.triu_indices(p, 1)]
    rng = make_rng(seed)
    shared, individual, coll = _random_parts(rng, p, K, probs, lambda i: probs)
    meta = {"protocol": "brain", "p": p, "K": K, "seed": int(seed), "rng": RNG_NAME,
            "collisions": coll}
    return _finish(shared, individual, meta)


def gaussian_draws(precision, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` zero-mean rows with covariance ``precision^{-1}`` (Cholesky of the covariance)."""
    precision = np.atleast_2d(np.asarray(precision, dtype=float))
    cov = np.linalg.inv(precision)
    cov = (cov + cov.T) / 2.0
    L = np.linalg.cholesky(cov)
    Z = rng.standard_normal((int(n), precision.shape[0]))
    return Z @ L.T


def sample_gaussian(truth: GroundTruth, n_per_task, seed: int) -> TaskDataset:
    """Draw ``n_per_task`` samples (int or one per task) from ``N(0, (Omega^(i))^{-1})``."""
    sizes = [int(n_per_task)] * truth.K if np.isscalar(n_per_task) else [int(n) for n in n_per_task]
    if len(sizes) != truth.K:
        raise ValueError(f"{len(sizes)} sample sizes for K={truth.K}")
    rng = make_rng(seed)
    return TaskDataset(tuple(gaussian_draws(om, n, rng) for om, n in zip(truth.precisions, sizes)))


PROTOCOLS = ("random", "cohub", "perturbed", "brain")


def generate(protocol: str, p: int | None = None, K: int = 2, seed: int = 0,
             distance=None, hub_fraction: float = 0.05) -> GroundTruth:
    """Dispatch by protocol name."""
    if protocol == "random":
        return gen_random_graphs(p, K, seed)
    if protocol == "cohub":
        return gen_cohub(p, K, seed, hub_fraction)
    if protocol == "perturbed":
        return gen_perturbed(p, K, seed, hub_fraction)
    if protocol == "brain":
        if distance is None:
            raise ValueError("brain protocol needs a distance matrix")
        return gen_brain(distance, K, seed)
    raise ValueError(f"unknown protocol {protocol!r}; choose from {', '.join(PROTOCOLS)}")
