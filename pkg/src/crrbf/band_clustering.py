"""Group spectral bands with K-Means so each group can share one kernel width."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import LabeledDataset


@dataclass(frozen=True, eq=False)
class BandClustering:
    """Partition of band indices 0..d-1 into ``cluster_count`` non-empty groups."""

    assignments: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignments)
        if a.ndim != 1 or a.size == 0:
            raise ValueError("assignments must be a non-empty vector")
        if not np.issubdtype(a.dtype, np.integer):
            if not np.all(np.mod(a, 1) == 0):
                raise ValueError("cluster ids must be integers")
        a = np.ascontiguousarray(a, dtype=np.int64)
        if a.min() < 0:
            raise ValueError("cluster ids must be non-negative")
        k = int(a.max()) + 1
        counts = np.bincount(a, minlength=k)
        if np.any(counts == 0):
            empty = np.flatnonzero(counts == 0).tolist()
            raise ValueError(f"clusters {empty} are empty; ids must be dense")
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    @property
    def cluster_count(self) -> int:
        return int(self.assignments.max()) + 1

    @property
    def band_count(self) -> int:
        return self.assignments.size

    def members(self, cluster: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster)

    def groups(self) -> list[np.ndarray]:
        return [self.members(c) for c in range(self.cluster_count)]

    def relabeled(self) -> "BandClustering":
        """Canonical ids: clusters numbered by their lowest band index."""
        _, first = np.unique(self.assignments, return_index=True)
        order = np.argsort(first)
        remap = np.empty_like(order)
        remap[order] = np.arange(order.size)
        return BandClustering(remap[self.assignments])

    def same_partition(self, other: "BandClustering") -> bool:
        return np.array_equal(self.relabeled().assignments, other.relabeled().assignments)

    def to_list(self) -> list[int]:
        return self.assignments.tolist()


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    max_iterations: int = 100
    tolerance: float = 1e-6
    seed: int | None = 0
    restarts: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True, eq=False)
class KMeansResult:
    assignments: np.ndarray
    centroids: np.ndarray
    inertia: float
    iterations: int
    inertia_history: tuple


def band_points(ds: LabeledDataset) -> np.ndarray:
    """Bands as points: row i is band i over all samples, z-scored."""
    X = ds.features
    stds = X.std(axis=0, ddof=1)
    centered = X - X.mean(axis=0)
    safe = np.where(stds < 1e-12, 1.0, stds)
    Z = centered / safe
    Z[:, stds < 1e-12] = 0.0
    return np.ascontiguousarray(Z.T)


def _sq_dists(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - centroids[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    m = points.shape[0]
    chosen = [int(rng.integers(m))]
    closest = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # all remaining points coincide with a centroid; take any unused one
            unused = np.setdiff1d(np.arange(m), chosen)
            nxt = int(unused[rng.integers(unused.size)])
        else:
            nxt = int(rng.choice(m, p=closest / total))
        chosen.append(nxt)
        closest = np.minimum(closest, ((points - points[nxt]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _repair_empty(points, assign, centroids, d2):
    k = centroids.shape[0]
    for c in range(k):
        if np.any(assign == c):
            continue
        own = d2[np.arange(points.shape[0]), assign]
        # only steal from clusters that keep at least one member
        sizes = np.bincount(assign, minlength=k)
        own = np.where(sizes[assign] > 1, own, -1.0)
        far = int(np.argmax(own))
        assign[far] = c
        centroids[c] = points[far]
        d2[far, c] = 0.0
    return assign


def _lloyd(points, init, config):
    centroids = init.astype(np.float64, copy=True)
    k = centroids.shape[0]
    history = []
    it = 0
    for it in range(1, config.max_iterations + 1):
        d2 = _sq_dists(points, centroids)
        assign = np.argmin(d2, axis=1)
        assign = _repair_empty(points, assign, centroids, d2)
        history.append(float(d2[np.arange(points.shape[0]), assign].sum()))
        new = np.empty_like(centroids)
        for c in range(k):
            new[c] = points[assign == c].mean(axis=0)
        shift = float(np.sqrt(((new - centroids) ** 2).sum(axis=1)).max())
        centroids = new
        if shift < config.tolerance:
            break
    d2 = _sq_dists(points, centroids)
    assign = np.argmin(d2, axis=1)
    assign = _repair_empty(points, assign, centroids, d2)
    for c in range(k):
        centroids[c] = points[assign == c].mean(axis=0)
    inertia = float(((points - centroids[assign]) ** 2).sum())
    history.append(inertia)
    return assign, centroids, inertia, it, tuple(history)


def kmeans(points, config: KMeansConfig, init_centroids=None) -> KMeansResult:
    """Lloyd's algorithm with k-means++ seeding.

    Returns the lowest-inertia run over ``config.restarts`` seeds. Cluster ids
    are renumbered by first appearance so equal partitions compare equal.
    ``init_centroids`` skips seeding and runs a single Lloyd pass from them.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2:
        raise ValueError("points must be a 2-D matrix")
    m = points.shape[0]
    if config.k > m:
        raise ValueError(f"k={config.k} exceeds the number of points ({m})")
    if not np.all(np.isfinite(points)):
        raise ValueError("points must be finite")

    rng = np.random.default_rng(config.seed)
    best = None
    runs = 1 if init_centroids is not None else config.restarts
    for _ in range(runs):
        if init_centroids is not None:
            init = np.asarray(init_centroids, dtype=np.float64)
            if init.shape != (config.k, points.shape[1]):
                raise ValueError("init_centroids must be k x n")
        else:
            init = kmeans_plus_plus(points, config.k, rng)
        result = _lloyd(points, init, config)
        if best is None or result[2] < best[2]:
            best = result
    assign, centroids, inertia, iterations, history = best

    _, first = np.unique(assign, return_index=True)
    order = np.argsort(first)
    remap = np.empty(config.k, dtype=np.int64)
    remap[order] = np.arange(config.k)
    return KMeansResult(remap[assign], centroids[order], inertia, iterations, history)


def cluster_bands(ds: LabeledDataset, k: int, seed=0, **kmeans_options) -> BandClustering:
    if not 1 <= k <= ds.band_count:
        raise ValueError(f"cluster count must be in [1, {ds.band_count}], got {k}")
    result = kmeans(band_points(ds), KMeansConfig(k=k, seed=seed, **kmeans_options))
    return BandClustering(result.assignments)
