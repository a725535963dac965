"""k-means variants over per-pixel features."""

import logging
from typing import Iterable, List, Tuple, Union

import numpy as np

from ..model.errors import InvalidInputError
from ..model.models import ClusterModel

logger = logging.getLogger(__name__)

Stream = Union[np.ndarray, Iterable[np.ndarray]]


def squared_distances(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d = (points ** 2).sum(1)[:, None] - 2.0 * points @ centroids.T + (centroids ** 2).sum(1)[None, :]
    return np.maximum(d, 0.0)


def assign_clusters(clusters: ClusterModel, points: np.ndarray) -> np.ndarray:
    """Index of the nearest centroid for each point; ties go to the lowest id."""
    return np.argmin(squared_distances(np.asarray(points, dtype=np.float64), clusters.centroids), axis=1)


def inertia(clusters: ClusterModel, points: np.ndarray) -> float:
    d = squared_distances(np.asarray(points, dtype=np.float64), clusters.centroids)
    return float(d.min(axis=1).sum())


def _check_distinct(points: np.ndarray, k: int) -> None:
    if points.ndim != 2 or points.shape[0] == 0:
        raise InvalidInputError("Clustering needs a non-empty N×D array")
    if k < 1:
        raise InvalidInputError(f"k must be positive, got {k}")
    if np.unique(points, axis=0).shape[0] < k:
        raise InvalidInputError(f"Fewer than {k} distinct points to cluster")


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Seed centroids with D² sampling."""
    centroids = [points[rng.integers(points.shape[0])]]
    closest = squared_distances(points, np.asarray(centroids)).ravel()
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            raise InvalidInputError("Fewer distinct points than clusters")
        index = rng.choice(points.shape[0], p=closest / total)
        centroids.append(points[index])
        closest = np.minimum(closest, squared_distances(points, points[index][None]).ravel())
    return np.asarray(centroids, dtype=np.float64)


def _batches(features: Stream, batch_size: int) -> List[np.ndarray]:
    if isinstance(features, np.ndarray):
        return [features[i:i + batch_size] for i in range(0, features.shape[0], batch_size)]
    return [np.asarray(batch, dtype=np.float64) for batch in features]


def minibatch_kmeans(
    features: Stream,
    k: int,
    iters: int = 10,
    seed: int = 0,
    batch_size: int = 1024,
) -> ClusterModel:
    """Mini-batch k-means: k-means++ seeding, then per-batch nearest assignment
    and per-centroid running means.

    `features` is an N×D array (split into batches of `batch_size`) or an
    iterable of batches; every pass visits each batch once. Centroid counts
    start at zero, so the first assigned point replaces the seed.
    """
    batches = _batches(features, batch_size)
    points = np.concatenate(batches).astype(np.float64)
    _check_distinct(points, k)
    rng = np.random.default_rng(seed)
    centroids = kmeans_plus_plus(points, k, rng)
    counts = np.zeros(k)

    for _ in range(iters):
        for batch in (batches[i] for i in rng.permutation(len(batches))):
            batch = batch.astype(np.float64)
            assignment = np.argmin(squared_distances(batch, centroids), axis=1)
            batch_counts = np.bincount(assignment, minlength=k).astype(np.float64)
            sums = np.zeros_like(centroids)
            np.add.at(sums, assignment, batch)
            touched = batch_counts > 0
            new_counts = counts + batch_counts
            centroids[touched] = (
                counts[touched, None] * centroids[touched] + sums[touched]
            ) / new_counts[touched, None]
            counts = new_counts
    logger.debug(f"mini-batch k-means: k={k}, {points.shape[0]} points, counts {counts.tolist()}")
    return ClusterModel(centroids)


def lloyd_kmeans(points: np.ndarray, k: int, iters: int = 50, seed: int = 0) -> Tuple[ClusterModel, List[float]]:
    """Full-batch Lloyd iterations from k-means++ seeds, with the inertia trace."""
    points = np.asarray(points, dtype=np.float64)
    _check_distinct(points, k)
    centroids = kmeans_plus_plus(points, k, np.random.default_rng(seed))
    trace = []
    for _ in range(iters):
        d = squared_distances(points, centroids)
        assignment = d.argmin(axis=1)
        trace.append(float(d.min(axis=1).sum()))
        updated = centroids.copy()
        for c in range(k):
            members = points[assignment == c]
            if len(members):
                updated[c] = members.mean(axis=0)
        if np.array_equal(updated, centroids):
            break
        centroids = updated
    trace.append(float(squared_distances(points, centroids).min(axis=1).sum()))
    return ClusterModel(centroids), trace
