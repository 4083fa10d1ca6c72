"""First-stage outlier elimination: k-means with restarts, then size pruning.

Lloyd iterations with k-means++ seeding, repeated over independent restarts
keeping the partition of minimum energy (sum of squared distances to the
assigned centroids). Clusters below a size threshold are dropped; the
survivors feed the per-cluster one-class SVMs.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

DEFAULT_CUBES_PER_CLUSTER = 1000
DEFAULT_RESTARTS = 10
DEFAULT_MIN_CLUSTER_SIZE = 500
DEFAULT_MAX_ITER = 100
DEFAULT_TOL = 1e-4

_ASSIGN_CHUNK = 65536


@dataclass
class ClusterModel:
    centroids: np.ndarray  # (k, m)
    assignments: np.ndarray  # (n,) int
    sizes: np.ndarray  # (k,) int
    energy: float
    retained: np.ndarray  # (k,) bool
    energy_history: list[float]

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def retained_indices(self) -> np.ndarray:
        return np.nonzero(self.retained)[0]


def choose_k(n_samples: int, cubes_per_cluster: int = DEFAULT_CUBES_PER_CLUSTER) -> int:
    """Cluster count targeting a fixed average population (round half up)."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    return max(1, int(math.floor(n_samples / cubes_per_cluster + 0.5)))


def _sq_norms(x: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", x, x)


def _assign(data: np.ndarray, centroids: np.ndarray,
            data_sq: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per row (ties to the lowest index) and that distance^2."""
    n = data.shape[0]
    cent_sq = _sq_norms(centroids)
    assign = np.empty(n, dtype=np.int64)
    best = np.empty(n, dtype=np.float64)
    for lo in range(0, n, _ASSIGN_CHUNK):
        hi = min(lo + _ASSIGN_CHUNK, n)
        d2 = data_sq[lo:hi, None] - 2.0 * (data[lo:hi] @ centroids.T) + cent_sq
        assign[lo:hi] = np.argmin(d2, axis=1)
        best[lo:hi] = np.take_along_axis(d2, assign[lo:hi, None], axis=1)[:, 0]
    np.maximum(best, 0.0, out=best)
    return assign, best


def kmeans_pp_init(data: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: each next centroid sampled proportional to D^2."""
    n = data.shape[0]
    if k > n:
        raise ValueError(f"k={k} exceeds the {n} available samples")
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = rng.integers(n)
    data_sq = _sq_norms(data.astype(np.float64, copy=False))
    d2 = data_sq - 2.0 * (data @ data[chosen[0]]) + data_sq[chosen[0]]
    np.maximum(d2, 0.0, out=d2)
    taken = np.zeros(n, dtype=bool)
    taken[chosen[0]] = True
    for j in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = rng.choice(n, p=d2 / total)
        else:
            # All remaining points duplicate a chosen centroid.
            idx = rng.choice(np.nonzero(~taken)[0])
        chosen[j] = idx
        taken[idx] = True
        cand = data_sq - 2.0 * (data @ data[idx]) + data_sq[idx]
        np.minimum(d2, np.maximum(cand, 0.0), out=d2)
    return data[chosen].copy()


def lloyd(data: np.ndarray, init_centroids: np.ndarray,
          max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL) -> ClusterModel:
    """Alternating assignment/update until the relative energy gain < tol.

    Empty clusters are re-seeded to the point farthest from its assigned
    centroid, so k never shrinks.
    """
    data = np.ascontiguousarray(data)
    centroids = np.array(init_centroids, dtype=data.dtype)
    if not np.all(np.isfinite(centroids)):
        raise ValueError("initial centroids must be finite")
    k = centroids.shape[0]
    n = data.shape[0]
    data_sq = _sq_norms(data.astype(np.float64, copy=False))
    history: list[float] = []
    assign, best = _assign(data, centroids, data_sq)
    prev_energy = math.inf
    for _ in range(max_iter):
        energy = float(best.sum())
        history.append(energy)
        if prev_energy - energy < tol * max(prev_energy, 1e-300):
            break
        prev_energy = energy
        # Update step: mean of members via a contiguous segmented reduction.
        order = np.argsort(assign, kind="stable")
        sizes = np.bincount(assign, minlength=k)
        starts = np.zeros(k, dtype=np.int64)
        np.cumsum(sizes[:-1], out=starts[1:])
        sums = np.add.reduceat(data[order], np.minimum(starts, n - 1), axis=0)
        nonempty = sizes > 0
        centroids = centroids.copy()
        centroids[nonempty] = (sums[nonempty] /
                               sizes[nonempty, None]).astype(data.dtype)
        empties = np.nonzero(~nonempty)[0]
        if empties.size:
            far = best.copy()
            for j in empties:
                idx = int(np.argmax(far))
                centroids[j] = data[idx]
                far[idx] = -math.inf
        assign, best = _assign(data, centroids, data_sq)
    energy = float(best.sum())
    if not history or history[-1] != energy:
        history.append(energy)
    sizes = np.bincount(assign, minlength=k)
    return ClusterModel(
        centroids=centroids,
        assignments=assign,
        sizes=sizes,
        energy=energy,
        retained=np.ones(k, dtype=bool),
        energy_history=history,
    )


def best_of_restarts(data: np.ndarray, k: int, restarts: int = DEFAULT_RESTARTS,
                     rng: np.random.Generator | None = None,
                     max_iter: int = DEFAULT_MAX_ITER, tol: float = DEFAULT_TOL,
                     workers: int = 1) -> ClusterModel:
    """Minimum-energy partition over independent seeded restarts."""
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    seeds = [int(s) for s in rng.integers(0, 2**63 - 1, size=restarts)]

    def run(seed: int) -> ClusterModel:
        child = np.random.default_rng(seed)
        init = kmeans_pp_init(data, k, child)
        return lloyd(data, init, max_iter=max_iter, tol=tol)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            models = list(pool.map(run, seeds))
    else:
        models = [run(s) for s in seeds]
    best = models[0]
    for model in models[1:]:
        if model.energy < best.energy:
            best = model
    return best


def prune_small_clusters(model: ClusterModel,
                         min_size: int = DEFAULT_MIN_CLUSTER_SIZE) -> ClusterModel:
    """Keep clusters with >= min_size members; fall back to the largest one."""
    retained = model.sizes >= min_size
    if not retained.any():
        retained = np.zeros(model.k, dtype=bool)
        retained[int(np.argmax(model.sizes))] = True
    return replace(model, retained=retained)
