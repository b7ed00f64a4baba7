"""Translation-process baseline: a Gaussian process with matched second moments
mapped through the marginal inverses."""
import logging

import numpy as np
from scipy import linalg

from .config import Space
from .databases.series import TimeSeriesMatrix, TimeStampVector, concat_realizations
from .exceptions import SeriesTooShort, CovarianceTooLarge, RepairFailed, SpaceTagMismatch
from .postprocess.correlation import spatial_correlation
from .preprocess.marginals import MarginalSet, from_gaussian

logger = logging.getLogger(__name__)

MAX_COVARIANCE_DIM = 5000
MAX_REPAIR_CHANGE = .05


def lagged_autocorrelation(series, tau_max, center=False):
    """Per-location autocorrelation at lags ``0..tau_max``, pooled over realizations.

    Lag products never cross realization boundaries. Returns shape (m, tau_max + 1).
    """
    data = series.data
    if center:
        data = data - data.mean(axis=1, keepdims=True)
    num = np.zeros((series.m, tau_max + 1))
    cnt = np.zeros(tau_max + 1)
    for sl in series.realization_slices():
        x = data[:, sl]
        n = x.shape[1]
        for tau in range(min(tau_max + 1, n)):
            num[:, tau] += np.sum(x[:, :n - tau] * x[:, tau:], axis=1)
            cnt[tau] += n - tau
    if np.any(cnt == 0):
        raise SeriesTooShort(f'No realization is longer than tau_max={tau_max}.')
    cov = num / cnt
    return cov / cov[:, :1]


class TranslationModel:

    def __init__(self, correlation, autocorr, marginals):
        self.correlation = np.asarray(correlation, dtype=np.float64)
        self.autocorr = np.asarray(autocorr, dtype=np.float64)
        self.marginals = marginals

    @property
    def m(self):
        return len(self.correlation)

    @property
    def tau_max(self):
        return self.autocorr.shape[1] - 1

    @property
    def mean_autocorr(self):
        return self.autocorr.mean(axis=0)

    def to_dict(self):
        return dict(correlation=self.correlation.tolist(), autocorr=self.autocorr.tolist(),
                    marginals=self.marginals.to_dict())

    @classmethod
    def from_dict(cls, d):
        return cls(d['correlation'], d['autocorr'], MarginalSet.from_dict(d['marginals']))


def fit_translation(observations, tau_max, marginals):
    """Estimate spatial correlation and lagged autocorrelation from Gaussian-space data."""
    if observations.space is not Space.GAUSSIAN:
        raise SpaceTagMismatch('The translation model is fitted in Gaussian space.')
    if max(s.stop - s.start for s in observations.realization_slices()) <= tau_max:
        raise SeriesTooShort(f'Realizations must be longer than tau_max={tau_max}.')
    return TranslationModel(spatial_correlation(observations),
                            lagged_autocorrelation(observations, tau_max), marginals)


def space_time_covariance(model, n_steps):
    """Separable covariance ``C[i, k] * rho(|s - u|)``, index ``i * n_steps + s``."""
    if model.m * n_steps > MAX_COVARIANCE_DIM:
        raise CovarianceTooLarge(f'{model.m} x {n_steps} exceeds the dense limit of {MAX_COVARIANCE_DIM}.')
    rho = np.zeros(n_steps)
    k = min(n_steps, model.tau_max + 1)
    rho[:k] = model.mean_autocorr[:k]
    return np.kron(model.correlation, linalg.toeplitz(rho))


def psd_factor(cov):
    """Factor ``A`` with ``A A^T`` the eigenvalue-clipped repair of ``cov``."""
    w, v = linalg.eigh(cov)
    clipped = np.clip(w, 0., None)
    if np.any(w < 0):
        repaired = (v * clipped) @ v.T
        change = np.linalg.norm(repaired - cov) / np.linalg.norm(cov)
        if change > MAX_REPAIR_CHANGE:
            raise RepairFailed(f'Eigenvalue clipping changed the covariance by {change:.2%}.')
        logger.info(f'Covariance repaired by eigenvalue clipping ({change:.2e} relative change).')
    return v * np.sqrt(clipped)


def simulate_translation(model, n_steps, n_realizations, seed=None, gaussian=False, dt=1.):
    """Sample realizations of the translation process.

    Returns
    -------
    TimeSeriesMatrix
        Realizations stacked with boundaries, physical space unless ``gaussian``.
    """
    factor = psd_factor(space_time_covariance(model, n_steps))
    rng = np.random.default_rng(seed)
    z = factor @ rng.standard_normal((factor.shape[1], n_realizations))
    stamps = TimeStampVector.unitless(n_steps, dt)
    reals = [TimeSeriesMatrix(z[:, r].reshape(model.m, n_steps), Space.GAUSSIAN, stamps)
             for r in range(n_realizations)]
    out = concat_realizations(reals)
    return out if gaussian else from_gaussian(out, model.marginals)
