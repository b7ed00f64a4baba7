"""Synthetic benchmark: coupled square-root diffusions with Gamma marginals."""
import logging

import numpy as np

from .series import TimeSeriesMatrix, TimeStampVector
from ..config import Space
from ..exceptions import ShapeMismatch
from ..preprocess.marginals import MarginalSet
from ..utils import spawn_seeds

logger = logging.getLogger(__name__)

CLAMP_EPS = 1e-12


class SdeParams:
    """Parameters of ``dQ = theta (alpha/beta - Q) dt + sqrt(2 theta Q / beta) dB``."""

    def __init__(self, theta=40., alpha=1., beta=1., m=3, dt=1e-3, n_steps=200, n_realizations=1000, seed=0):
        self.theta = float(theta)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.m = int(m)
        self.dt = float(dt)
        self.n_steps = int(n_steps)
        self.n_realizations = int(n_realizations)
        self.seed = int(seed)
        assert self.theta > 0, f'theta must be positive, got {self.theta}'
        assert self.alpha >= 1, f'alpha must be >= 1, got {self.alpha}'
        assert self.beta > 0, f'beta must be positive, got {self.beta}'
        assert self.dt > 0, f'dt must be positive, got {self.dt}'
        assert self.m >= 1 and self.n_steps >= 1 and self.n_realizations >= 1, 'Sizes must be positive.'

    @property
    def milstein_coefficient(self):
        """``b b' / 2`` of the diffusion ``b(x) = sqrt(2 theta x / beta)``."""
        return self.theta / (2 * self.beta)

    def to_dict(self):
        return dict(vars(self))

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def replace(self, **kwargs):
        d = self.to_dict()
        d.update(kwargs)
        return SdeParams(**d)


class SdeOracles:
    """Closed-form statistics of ``Q`` and of ``V_i = Q_0 + Q_i``."""

    def __init__(self, params):
        self.params = params

    @property
    def mean_q(self):
        return self.params.alpha / self.params.beta

    @property
    def var_q(self):
        return self.params.alpha / self.params.beta ** 2

    @property
    def mean_v(self):
        return 2 * self.params.alpha / self.params.beta

    @property
    def var_v(self):
        return 2 * self.params.alpha / self.params.beta ** 2

    def autocorr(self, tau):
        tau = np.asarray(tau, dtype=np.float64)
        assert np.all(tau >= 0), 'Lags must be non-negative.'
        return np.exp(-self.params.theta * tau)

    def cross_corr(self, k, i, tau):
        return (1. - .5 * (k != i)) * self.autocorr(tau)

    def correlation_matrix(self, m=None):
        m = self.params.m if m is None else m
        return np.full((m, m), .5) + .5 * np.eye(m)

    def v_marginals(self, m=None):
        return MarginalSet.gamma(self.params.m if m is None else m, 2 * self.params.alpha, self.params.beta)

    def to_dict(self, max_lag=50):
        lags = np.arange(max_lag + 1) * self.params.dt
        return dict(mean_q=self.mean_q, var_q=self.var_q, mean_v=self.mean_v, var_v=self.var_v,
                    v_shape=2 * self.params.alpha, v_rate=self.params.beta,
                    lags=lags.tolist(), autocorr=self.autocorr(lags).tolist(),
                    cross_corr=self.cross_corr(0, 1, lags).tolist())


def oracle_autocorr(tau, params):
    return float(SdeOracles(params).autocorr(tau))


def oracle_cross_corr(k, i, tau, params):
    return float(SdeOracles(params).cross_corr(k, i, tau))


def milstein_simulate(params, return_stats=False, noise=None):
    """Integrate ``m + 1`` independent diffusions per realization with the Milstein scheme.

    Every realization has its own seeded stream, so the result does not
    depend on how realizations are batched.

    Parameters
    ----------
    params : SdeParams
    return_stats : bool
        Also return a dict with the clamp count and rate.
    noise : ndarray, optional
        Brownian increments with shape (R, n_steps - 1, m + 1), replaces the random draws.

    Returns
    -------
    list of ndarray
        One (m + 1, n_steps) matrix per realization.
    """
    p = params
    n_comp = p.m + 1
    seeds = spawn_seeds(p.seed, p.n_realizations)
    q = np.empty((p.n_realizations, n_comp, p.n_steps))
    if noise is None:
        d_b = np.empty((p.n_realizations, p.n_steps - 1, n_comp))
        for r, s in enumerate(seeds):
            rng = np.random.default_rng(s)
            q[r, :, 0] = rng.gamma(p.alpha, 1. / p.beta, size=n_comp)
            d_b[r] = np.sqrt(p.dt) * rng.standard_normal((p.n_steps - 1, n_comp))
    else:
        d_b = np.asarray(noise, dtype=np.float64)
        if d_b.shape != (p.n_realizations, p.n_steps - 1, n_comp):
            raise ShapeMismatch(f'Noise must have shape {(p.n_realizations, p.n_steps - 1, n_comp)}.')
        for r, s in enumerate(seeds):
            q[r, :, 0] = np.random.default_rng(s).gamma(p.alpha, 1. / p.beta, size=n_comp)

    n_clamped = 0
    mean = p.alpha / p.beta
    for k in range(p.n_steps - 1):
        qk = q[:, :, k]
        db = d_b[:, k, :]
        nxt = qk + p.theta * (mean - qk) * p.dt + np.sqrt(2 * p.theta * qk / p.beta) * db \
            + p.milstein_coefficient * (db ** 2 - p.dt)
        low = nxt < CLAMP_EPS
        n_clamped += int(low.sum())
        q[:, :, k + 1] = np.where(low, CLAMP_EPS, nxt)

    rate = n_clamped / q[:, :, 1:].size if p.n_steps > 1 else 0.
    logger.info(f'Milstein integration: {p.n_realizations} realizations x {p.n_steps} steps, '
                f'clamp rate {rate:.2e}')
    result = list(q)
    if return_stats:
        return result, dict(n_clamped=n_clamped, clamp_rate=rate)
    return result


def build_v(q, dt=1.):
    """``V_i = Q_0 + Q_i`` for ``i = 1..m`` as a physical-space series."""
    q = np.asarray(q, dtype=np.float64)
    if q.ndim != 2 or q.shape[0] < 2:
        raise ShapeMismatch(f'Need at least two components, got shape {q.shape}.')
    return TimeSeriesMatrix(q[0] + q[1:], Space.PHYSICAL, TimeStampVector.unitless(q.shape[1], dt))


def sde_realizations(params):
    """Physical-space ``V`` realizations for the given parameters."""
    return [build_v(q, params.dt) for q in milstein_simulate(params)]
