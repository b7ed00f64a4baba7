"""Partitioning of the Gaussian-space state space into tail and bulk clusters."""
import logging
from enum import Enum

import numpy as np
from joblib import Parallel, delayed
from sklearn.cluster import kmeans_plusplus

from ..config import Space
from ..databases.series import MarkovStateSequence
from ..exceptions import EmptyInput, KTooLarge, RegionEmpty, SpaceTagMismatch, ShapeMismatch
from ..preprocess.marginals import gaussian_quantile
from ..utils import spawn_seeds, get_n_jobs

logger = logging.getLogger(__name__)

_CHUNK_CELLS = 2 ** 22


class Region(Enum):
    TAIL = 'tail'
    BULK = 'bulk'


class TailRegionSpec:
    """Points with any coordinate above ``Phi^-1(quantile_level)`` are tail points."""

    def __init__(self, quantile_level=.96):
        assert 0 < quantile_level < 1, f'quantile_level must be in (0, 1), got {quantile_level}'
        self.quantile_level = float(quantile_level)

    @property
    def threshold(self):
        return float(gaussian_quantile(self.quantile_level))

    def tail_mask(self, points):
        """Boolean mask over points with shape (N, m)."""
        return np.any(np.asarray(points) > self.threshold, axis=1)


def tail_mask(series, spec=None):
    """Columns of a Gaussian-space series that fall into the tail region."""
    if series.space is not Space.GAUSSIAN:
        raise SpaceTagMismatch('The tail region is defined in Gaussian space.')
    return (TailRegionSpec() if spec is None else spec).tail_mask(series.data.T)


def sq_distances(points, centroids):
    """Squared Euclidean distances, shape (N, k), computed in row chunks."""
    n, k = len(points), len(centroids)
    out = np.empty((n, k))
    step = max(1, _CHUNK_CELLS // max(1, k * points.shape[1]))
    for start in range(0, n, step):
        diff = points[start:start + step, None, :] - centroids[None, :, :]
        out[start:start + step] = np.einsum('ijk,ijk->ij', diff, diff)
    return out


def nearest_centroid(points, centroids):
    """Index of the closest centroid; ties go to the lowest index."""
    return np.argmin(sq_distances(points, centroids), axis=1)


def _lloyd(points, k, seed, max_iter, tol):
    centroids, _ = kmeans_plusplus(points, k, random_state=seed)
    labels = None
    history = []
    for _ in range(max_iter):
        dist = sq_distances(points, centroids)
        new_labels = np.argmin(dist, axis=1)
        point_dist = dist[np.arange(len(points)), new_labels]
        inertia = float(point_dist.sum())
        if history:
            assert inertia <= history[-1] * (1 + tol) + tol, \
                f'Inertia increased from {history[-1]} to {inertia}.'
        history.append(inertia)
        if labels is not None and np.array_equal(labels, new_labels):
            break
        labels = new_labels

        counts = np.bincount(labels, minlength=k)
        sums = np.zeros_like(centroids)
        np.add.at(sums, labels, points)
        nonempty = counts > 0
        centroids = centroids.copy()
        centroids[nonempty] = sums[nonempty] / counts[nonempty, None]
        # empty clusters are moved to the points farthest from their centroids
        taken = set()
        for c in np.flatnonzero(~nonempty):
            for idx in np.argsort(-point_dist, kind='stable'):
                if idx not in taken:
                    taken.add(idx)
                    centroids[c] = points[idx]
                    point_dist[idx] = 0.
                    break
    return centroids, history[-1], history


def kmeans(points, k, n_restarts=20, seed=None, max_iter=300, tol=1e-10, n_jobs=1, return_history=False):
    """K-means with k-means++ seeding and Lloyd iterations.

    The best of ``n_restarts`` runs by inertia is kept, ties go to the
    earlier restart. Restarts may run in parallel without changing the result.

    Parameters
    ----------
    points : ndarray
        Shape (N, m).
    k : int
        Number of clusters.

    Returns
    -------
    centroids : ndarray, shape (k, m)
    inertia : float
    history : list of float
        Only if ``return_history`` is True. Inertia per iteration of the best run.
    """
    points = np.asarray(points, dtype=np.float64)
    if len(points) == 0:
        raise EmptyInput('No points to cluster.')
    n_distinct = len(np.unique(points, axis=0))
    if k > n_distinct:
        raise KTooLarge(f'k={k} exceeds the number of distinct points ({n_distinct}).')
    assert k > 0, f'k must be positive, got {k}'
    seeds = spawn_seeds(seed, n_restarts)
    runs = Parallel(n_jobs=get_n_jobs(n_jobs))(
        delayed(_lloyd)(points, k, s, max_iter, tol) for s in seeds)
    best = min(range(len(runs)), key=lambda i: (runs[i][1], i))
    centroids, inertia, history = runs[best]
    logger.info(f'k-means k={k} on {len(points)} points: best inertia {inertia:.6g} '
                f'(restart {best + 1}/{n_restarts}, {len(history)} iterations)')
    if return_history:
        return centroids, inertia, history
    return centroids, inertia


class ClusterModel:
    """Centroids of the tail and bulk regions.

    States ``0 .. n_tail-1`` are tail clusters, the rest are bulk clusters.
    """

    def __init__(self, centroids, regions, tail_spec=None, inertia=None):
        self.centroids = np.asarray(centroids, dtype=np.float64)
        self.regions = [Region(r) for r in regions]
        if len(self.regions) != len(self.centroids):
            raise ShapeMismatch(f'{len(self.regions)} region tags for {len(self.centroids)} centroids.')
        self.tail_spec = TailRegionSpec() if tail_spec is None else tail_spec
        self.inertia = inertia if inertia is not None else {}

    @property
    def n_clusters(self):
        return len(self.centroids)

    @property
    def n_tail(self):
        return sum(r is Region.TAIL for r in self.regions)

    @property
    def n_bulk(self):
        return sum(r is Region.BULK for r in self.regions)

    @property
    def tail_states(self):
        return np.array([r is Region.TAIL for r in self.regions])

    def assign(self, series):
        return assign_states(series, self)

    def to_dict(self):
        return dict(centroids=self.centroids.tolist(), regions=[r.value for r in self.regions],
                    quantile_level=self.tail_spec.quantile_level, inertia=self.inertia)

    @classmethod
    def from_dict(cls, d):
        return cls(d['centroids'], d['regions'], TailRegionSpec(d['quantile_level']), d.get('inertia'))


def fit_state_space(series, tail_spec=None, n_tail=100, n_bulk=200, n_restarts=20, seed=None, n_jobs=1):
    """Cluster the tail and the bulk points of a Gaussian-space series separately.

    Parameters
    ----------
    series : TimeSeriesMatrix
        Gaussian-space observations, every column is a point.
    tail_spec : TailRegionSpec
    n_tail, n_bulk : int
        Number of clusters per region, either may be 0.

    Returns
    -------
    ClusterModel
    """
    if series.space is not Space.GAUSSIAN:
        raise SpaceTagMismatch('State space is fitted on Gaussian-space data.')
    if tail_spec is None:
        tail_spec = TailRegionSpec()
    points = series.data.T
    if len(points) == 0:
        raise EmptyInput('No points to cluster.')
    mask = tail_spec.tail_mask(points)
    seed_tail, seed_bulk = spawn_seeds(seed, 2)

    centroids, regions, inertia = [], [], {}
    for region, k, region_mask, s in ((Region.TAIL, n_tail, mask, seed_tail),
                                      (Region.BULK, n_bulk, ~mask, seed_bulk)):
        if k == 0:
            continue
        n_points = int(region_mask.sum())
        if n_points < k:
            raise RegionEmpty(f'{region.value} region has {n_points} points for {k} clusters.')
        c, inr = kmeans(points[region_mask], k, n_restarts, s, n_jobs=n_jobs)
        centroids.append(c)
        regions.extend([region] * k)
        inertia[region.value] = inr
    logger.info(f'State space: {n_tail} tail and {n_bulk} bulk clusters, '
                f'{mask.mean():.2%} of the points are in the tail region.')
    return ClusterModel(np.concatenate(centroids), regions, tail_spec, inertia)


def assign_states(series, model):
    """Label every column with the index of its nearest centroid."""
    if series.space is not Space.GAUSSIAN:
        raise SpaceTagMismatch('States are assigned in Gaussian space.')
    if series.m != model.centroids.shape[1]:
        raise ShapeMismatch(f'Series has {series.m} rows, centroids have {model.centroids.shape[1]}.')
    labels = nearest_centroid(series.data.T, model.centroids)
    return MarkovStateSequence(labels, model.n_clusters, series.boundaries)
