"""Group-assignment machinery: k-means initialization, reassignment and coherence."""

# Standard library imports
import logging
from typing import Optional, Tuple

# Third party imports
import numpy as np
from scipy.spatial.distance import cdist

from src.core.errors import DimensionMismatch, InvalidParameter, KTooLarge
from src.models.clustering import KmeansResult
from src.models.data import DataMatrix, GroupAssignment, HiddenSignals, NoiseVariances
from src.models.solver import ReassignMetric

log = logging.getLogger(__name__)

LLOYD_MAX_ITER = 100
HARTIGAN_MAX_PASSES = 100
TRANSFER_SLACK = 1e-12


def seed_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: returns k rows of ``points`` as initial centers."""
    count = points.shape[0]
    chosen = [int(rng.integers(count))]
    nearest = ((points - points[chosen[0]]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = nearest.sum()
        if total > 0:
            index = int(rng.choice(count, p=nearest / total))
        else:
            remaining = np.setdiff1d(np.arange(count), chosen)
            index = int(rng.choice(remaining))
        chosen.append(index)
        nearest = np.minimum(nearest, ((points - points[index]) ** 2).sum(axis=1))
    return points[chosen].copy()


def _nearest(points: np.ndarray, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    distances = cdist(points, centers, "sqeuclidean")
    return np.argmin(distances, axis=1), distances


def repair_empty(labels: np.ndarray, distances: np.ndarray, k: int) -> Tuple[np.ndarray, int]:
    """Fill every empty group with the column farthest from its own center.

    Only columns whose group has more than one member are eligible, so a repair
    never empties another group. Returns the repaired labels and the repair count.
    """
    labels = labels.copy()
    repairs = 0
    sizes = np.bincount(labels, minlength=k)
    for group in np.flatnonzero(sizes == 0):
        own = distances[np.arange(labels.shape[0]), labels]
        eligible = sizes[labels] > 1
        candidate = int(np.argmax(np.where(eligible, own, -np.inf)))
        sizes[labels[candidate]] -= 1
        labels[candidate] = group
        sizes[group] += 1
        repairs += 1
    if repairs:
        log.warning("Repaired %d empty group(s)", repairs)
    return labels, repairs


def _centers_of(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    return sums / np.bincount(labels, minlength=k)[:, None]


def within_ss(points: np.ndarray, labels: np.ndarray, k: int) -> float:
    """Total squared distance of the points to their cluster means."""
    centers = _centers_of(points, labels, k)
    return float(((points - centers[labels]) ** 2).sum())


def lloyd_step(points: np.ndarray, centers: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """One assignment-then-update pass; returns (labels, new centers)."""
    k = centers.shape[0]
    labels, distances = _nearest(points, centers)
    labels, _ = repair_empty(labels, distances, k)
    return labels, _centers_of(points, labels, k)


def _hartigan(points: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    """Single-point transfers while any transfer lowers the within-cluster sum of squares."""
    labels = labels.copy()
    sizes = np.bincount(labels, minlength=k).astype(float)
    sums = np.zeros((k, points.shape[1]))
    np.add.at(sums, labels, points)
    centers = sums / sizes[:, None]

    for _ in range(HARTIGAN_MAX_PASSES):
        moved = 0
        for j in range(points.shape[0]):
            source = labels[j]
            if sizes[source] == 1:
                continue
            point = points[j]
            distances = ((centers - point) ** 2).sum(axis=1)
            removal = sizes[source] / (sizes[source] - 1) * distances[source]
            addition = sizes / (sizes + 1) * distances
            addition[source] = np.inf
            target = int(np.argmin(addition))
            if addition[target] < removal * (1.0 - TRANSFER_SLACK):
                sums[source] -= point
                sums[target] += point
                sizes[source] -= 1
                sizes[target] += 1
                centers[source] = sums[source] / sizes[source]
                centers[target] = sums[target] / sizes[target]
                labels[j] = target
                moved += 1
        if not moved:
            break
    return labels


def _single_run(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    labels, centers = lloyd_step(points, seed_centers(points, k, rng))
    for _ in range(LLOYD_MAX_ITER):
        updated, centers = lloyd_step(points, centers)
        if np.array_equal(updated, labels):
            break
        labels = updated
    return _hartigan(points, labels, k)


def kmeans_init(x: DataMatrix, k: int, *, seed: int, restarts: int = 1) -> KmeansResult:
    """Hartigan k-means on the p columns of X as points in R^n.

    Each restart draws k-means++ seeds from one PCG64 stream seeded by ``seed``,
    runs Lloyd passes to a fixed point and then Hartigan transfers. The run with
    the smallest within-cluster sum of squares wins; earlier runs win ties.
    """
    if k < 1 or restarts < 1:
        raise InvalidParameter("k and restarts must be at least 1")
    if k > x.p:
        raise KTooLarge(k, x.p)
    points = x.values.T
    rng = np.random.default_rng(seed)
    best: Optional[Tuple[float, np.ndarray]] = None
    for restart in range(restarts):
        labels = _single_run(points, k, rng)
        score = within_ss(points, labels, k)
        log.debug("k-means restart %d: within_ss %.6g", restart, score)
        if best is None or score < best[0]:
            best = (score, labels)

    score, labels = best  # type: ignore[misc]
    return KmeansResult(
        centers=_centers_of(points, labels, k).T,
        labels=GroupAssignment(labels=labels, k=k),
        within_ss=score,
        restarts_used=restarts,
    )


def reassign_groups(
    x: DataMatrix,
    z: HiddenSignals,
    *,
    metric: ReassignMetric = ReassignMetric.EUCLIDEAN,
    phi: Optional[NoiseVariances] = None,
) -> GroupAssignment:
    """Move every column to its closest center Z_k; ties go to the smallest k.

    The default metric is plain Euclidean distance. ``PHI_WEIGHTED`` uses each
    column's contribution to the objective instead,
    ||X_j - Z_k||^2 / (n phi_k) + log phi_k.
    """
    if z.n != x.n:
        raise DimensionMismatch(f"signals have {z.n} rows, data has {x.n}")
    distances = cdist(x.values.T, z.values.T, "sqeuclidean")
    if metric is ReassignMetric.PHI_WEIGHTED:
        if phi is None or phi.k != z.k:
            raise InvalidParameter("phi-weighted reassignment needs one variance per group")
        distances = distances / (x.n * phi.phi) + np.log(phi.phi)
    labels = np.argmin(distances, axis=1)
    labels, repairs = repair_empty(labels, distances, z.k)
    return GroupAssignment(labels=labels, k=z.k, repairs=repairs)


def coherence_rates(est: GroupAssignment, truth: GroupAssignment) -> np.ndarray:
    """r_k = max_i |G-hat_i intersect G_k| / |G_k| for each true group k."""
    if est.p != truth.p:
        raise DimensionMismatch(f"estimate covers {est.p} variables, truth {truth.p}")
    table = np.zeros((truth.k, est.k), dtype=np.int64)
    np.add.at(table, (truth.labels, est.labels), 1)
    return table.max(axis=1) / truth.sizes
