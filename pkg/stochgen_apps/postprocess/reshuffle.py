"""Rank reshuffling: restore marginals while keeping the rank structure of each location."""
import numpy as np
from joblib import Parallel, delayed

from ..preprocess.marginals import MarginalSet
from ..utils import spawn_seeds, get_n_jobs


def descending_ranks(u):
    """Positions ordered from the largest to the smallest value, ties by earlier index."""
    return np.argsort(-np.asarray(u), kind='stable')


def reshuffle_row(u, z):
    """Place the values ``z`` so that their ranks follow the ranks of ``u``.

    The largest ``z`` goes where ``u`` is largest, and so on.
    """
    u = np.asarray(u, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    assert u.shape == z.shape, f'Shapes differ: {u.shape} vs {z.shape}'
    out = np.empty_like(z)
    out[descending_ranks(u)] = np.sort(z)[::-1]
    return out


def _draw_and_reshuffle(u, model, seed):
    return reshuffle_row(u, model.sample(len(u), np.random.default_rng(seed)))


def reshuffle(series, marginals, seed=None, n_jobs=1):
    """Reshuffle every location with fresh draws from its marginal.

    Parameters
    ----------
    series : TimeSeriesMatrix
        Corrected Gaussian-space synthetic data, usually all realizations stacked.
    marginals : MarginalSet or ndarray
        Marginal samplers, or an (m, n) array of pre-drawn samples.
    seed : int
        Master seed, one child stream per location.

    Returns
    -------
    TimeSeriesMatrix
        Tagged with the space of the marginals.
    """
    if not isinstance(marginals, MarginalSet):
        samples = np.asarray(marginals, dtype=np.float64)
        data = np.stack([reshuffle_row(u, z) for u, z in zip(series.data, samples)])
        return series.with_data(data)
    assert len(marginals) == series.m, f'{len(marginals)} marginals for {series.m} locations.'
    seeds = spawn_seeds(seed, series.m)
    rows = Parallel(n_jobs=get_n_jobs(n_jobs))(
        delayed(_draw_and_reshuffle)(u, model, s) for u, model, s in zip(series.data, marginals, seeds))
    return series.with_data(np.stack(rows), marginals.space)
