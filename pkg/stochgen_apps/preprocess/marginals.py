"""Marginal distributions and the translation between physical and Gaussian space."""
from enum import Enum

import numpy as np
from scipy import special, stats
from sklearn.base import BaseEstimator, TransformerMixin

from ..config import Space
from ..exceptions import DomainError, NonFiniteResult, SpaceTagMismatch, InsufficientData, ShapeMismatch


class MarginalKind(Enum):
    EMPIRICAL = 'empirical'
    GAMMA = 'gamma'
    STANDARD_GAUSSIAN = 'standard_gaussian'


def gaussian_cdf(x):
    return special.ndtr(np.asarray(x, dtype=np.float64))


def gaussian_quantile(p):
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError('Gaussian quantile is defined on the open interval (0, 1).')
    return special.ndtri(p)


def gamma_cdf(x, shape, rate):
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise DomainError('Gamma CDF is defined for non-negative values.')
    return special.gammainc(shape, rate * x)


def gamma_quantile(p, shape, rate):
    p = np.asarray(p, dtype=np.float64)
    if np.any((p <= 0) | (p >= 1)):
        raise DomainError('Gamma quantile is defined on the open interval (0, 1).')
    return special.gammaincinv(shape, p) / rate


class MarginalModel:
    """One-dimensional marginal distribution.

    The empirical CDF maps the k-th smallest sample to ``k / (n + 1)``, linear
    in between and clamped to ``[1 / (n + 1), n / (n + 1)]``.
    """

    def __init__(self, kind, shape=None, rate=None, samples=None):
        self.kind = MarginalKind(kind)
        self.shape = shape
        self.rate = rate
        self._xp = self._fp = None
        self.samples = None
        if self.kind is MarginalKind.GAMMA:
            assert shape is not None and shape > 0 and rate is not None and rate > 0, \
                f'Gamma marginal needs positive shape and rate, got {shape}, {rate}'
        elif self.kind is MarginalKind.EMPIRICAL:
            samples = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
            if len(samples) < 2:
                raise InsufficientData(f'Empirical marginal needs at least 2 samples, got {len(samples)}.')
            self.samples = samples
            n = len(samples)
            probs = np.arange(1, n + 1) / (n + 1)
            # ties: keep the highest rank of every distinct value
            xp, last = np.unique(samples[::-1], return_index=True)
            self._xp = xp
            self._fp = probs[::-1][last]

    @classmethod
    def empirical(cls, samples):
        return cls(MarginalKind.EMPIRICAL, samples=samples)

    @classmethod
    def gamma(cls, shape, rate):
        return cls(MarginalKind.GAMMA, shape=float(shape), rate=float(rate))

    @classmethod
    def standard_gaussian(cls):
        return cls(MarginalKind.STANDARD_GAUSSIAN)

    def cdf(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.kind is MarginalKind.EMPIRICAL:
            return np.interp(x, self._xp, self._fp)
        if self.kind is MarginalKind.GAMMA:
            return gamma_cdf(x, self.shape, self.rate)
        return gaussian_cdf(x)

    def ppf(self, p):
        p = np.asarray(p, dtype=np.float64)
        if self.kind is MarginalKind.EMPIRICAL:
            return np.interp(p, self._fp, self._xp)
        if self.kind is MarginalKind.GAMMA:
            return gamma_quantile(p, self.shape, self.rate)
        return gaussian_quantile(p)

    def pdf(self, x):
        if self.kind is MarginalKind.GAMMA:
            return stats.gamma.pdf(x, a=self.shape, scale=1. / self.rate)
        if self.kind is MarginalKind.STANDARD_GAUSSIAN:
            return stats.norm.pdf(x)
        return stats.gaussian_kde(self.samples, bw_method='silverman')(x)

    def to_gaussian(self, x):
        """``Phi^-1(F(x))``; upper tails go through the survival function."""
        x = np.asarray(x, dtype=np.float64)
        if self.kind is MarginalKind.STANDARD_GAUSSIAN:
            return x.copy()
        if self.kind is MarginalKind.GAMMA:
            if np.any(x < 0):
                raise DomainError('Gamma marginal got negative values.')
            lower = special.gammainc(self.shape, self.rate * x)
            upper = special.gammaincc(self.shape, self.rate * x)
            z = np.where(lower < .5, special.ndtri(lower), -special.ndtri(upper))
        else:
            z = special.ndtri(self.cdf(x))
        if not np.all(np.isfinite(z)):
            raise NonFiniteResult('Mapping to Gaussian space produced non-finite values.')
        return z

    def from_gaussian(self, z):
        """``F^-1(Phi(z))``."""
        z = np.asarray(z, dtype=np.float64)
        if self.kind is MarginalKind.STANDARD_GAUSSIAN:
            return z.copy()
        if self.kind is MarginalKind.GAMMA:
            x = np.where(z < 0, special.gammaincinv(self.shape, special.ndtr(z)),
                         special.gammainccinv(self.shape, special.ndtr(-z))) / self.rate
        else:
            x = self.ppf(special.ndtr(z))
        if not np.all(np.isfinite(x)):
            raise NonFiniteResult('Mapping to physical space produced non-finite values.')
        return x

    def sample(self, n, rng=None):
        rng = np.random.default_rng(rng)
        if self.kind is MarginalKind.GAMMA:
            return rng.gamma(self.shape, 1. / self.rate, size=n)
        if self.kind is MarginalKind.STANDARD_GAUSSIAN:
            return rng.standard_normal(n)
        return self.ppf(rng.uniform(1. / (len(self.samples) + 1), len(self.samples) / (len(self.samples) + 1),
                                    size=n))

    def to_dict(self):
        d = dict(kind=self.kind.value)
        if self.kind is MarginalKind.GAMMA:
            d.update(shape=self.shape, rate=self.rate)
        elif self.kind is MarginalKind.EMPIRICAL:
            d.update(samples=self.samples.tolist())
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d['kind'], shape=d.get('shape'), rate=d.get('rate'), samples=d.get('samples'))


class MarginalSet:
    """One marginal per location."""

    def __init__(self, models):
        self.models = list(models)

    @classmethod
    def fit_empirical(cls, series):
        if series.space is not Space.PHYSICAL:
            raise SpaceTagMismatch('Empirical marginals are fitted in physical space.')
        return cls([MarginalModel.empirical(row) for row in series.data])

    @classmethod
    def gamma(cls, m, shape, rate):
        return cls([MarginalModel.gamma(shape, rate) for _ in range(m)])

    @classmethod
    def standard_gaussian(cls, m):
        return cls([MarginalModel.standard_gaussian() for _ in range(m)])

    @property
    def is_standard_gaussian(self):
        return all(mdl.kind is MarginalKind.STANDARD_GAUSSIAN for mdl in self.models)

    @property
    def space(self):
        return Space.GAUSSIAN if self.is_standard_gaussian else Space.PHYSICAL

    def sample(self, n, rng=None):
        """Independent draws, shape (m, n)."""
        rng = np.random.default_rng(rng)
        return np.stack([mdl.sample(n, rng) for mdl in self.models])

    def __len__(self):
        return len(self.models)

    def __getitem__(self, i):
        return self.models[i]

    def to_dict(self):
        return dict(marginals=[mdl.to_dict() for mdl in self.models])

    @classmethod
    def from_dict(cls, d):
        return cls([MarginalModel.from_dict(md) for md in d['marginals']])


def _check_rows(series, marginals):
    if series.m != len(marginals):
        raise ShapeMismatch(f'{series.m} locations but {len(marginals)} marginals.')


def to_gaussian(series, marginals):
    """Map a physical series to standard Gaussian marginals row by row."""
    if series.space is not Space.PHYSICAL:
        raise SpaceTagMismatch('to_gaussian expects a physical-space series.')
    _check_rows(series, marginals)
    data = np.stack([mdl.to_gaussian(row) for mdl, row in zip(marginals, series.data)]) \
        if series.m else series.data
    return series.with_data(data, Space.GAUSSIAN)


def from_gaussian(series, marginals):
    """Inverse of :func:`to_gaussian`."""
    if series.space is not Space.GAUSSIAN:
        raise SpaceTagMismatch('from_gaussian expects a Gaussian-space series.')
    _check_rows(series, marginals)
    data = np.stack([mdl.from_gaussian(row) for mdl, row in zip(marginals, series.data)]) \
        if series.m else series.data
    return series.with_data(data, Space.PHYSICAL)


class GaussianTransformer(BaseEstimator, TransformerMixin):
    """Scikit-learn style wrapper around :class:`MarginalSet`.

    Parameters
    ----------
    marginals : MarginalSet, optional
        Fixed marginals. If None, empirical marginals are fitted.
    """

    def __init__(self, marginals=None):
        self.marginals = marginals

    def fit(self, x, y=None):
        self.marginals_ = self.marginals if self.marginals is not None else MarginalSet.fit_empirical(x)
        return self

    def transform(self, x):
        return to_gaussian(x, self.marginals_)

    def inverse_transform(self, x):
        return from_gaussian(x, self.marginals_)

