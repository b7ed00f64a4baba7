"""Cholesky based correction of the spatial correlation of synthetic Gaussian-space data."""
import logging

import numpy as np
from scipy import linalg

from ..config import Space
from ..exceptions import EmptySeries, NotPSD, SingularSampleCorrelation, SpaceTagMismatch, ShapeMismatch

logger = logging.getLogger(__name__)

CHOLESKY_JITTER = 1e-10
NEGATIVE_PIVOT_TOL = 1e-8
SINGULAR_RTOL = 1e-12


def spatial_correlation(series):
    """Uncentered second-moment matrix ``X X^T / n``."""
    data = series.data if hasattr(series, 'data') else np.asarray(series, dtype=np.float64)
    if data.shape[1] == 0:
        raise EmptySeries('Spatial correlation needs at least one time step.')
    return data @ data.T / data.shape[1]


def relative_frobenius_error(approx, target):
    return float(np.linalg.norm(approx - target) / np.linalg.norm(target))


def cholesky(c):
    """Lower triangular ``L`` with ``L L^T = C``.

    Matrices that are only numerically semi-definite get a diagonal jitter
    of 1e-10 before the factorization.
    """
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ShapeMismatch(f'Correlation matrix must be square, got shape {c.shape}.')
    if not np.allclose(c, c.T, atol=1e-12, rtol=0):
        raise NotPSD('Correlation matrix is not symmetric.')
    try:
        return linalg.cholesky(c, lower=True)
    except linalg.LinAlgError:
        pass
    min_eig = float(linalg.eigvalsh(c)[0])
    if min_eig < -NEGATIVE_PIVOT_TOL:
        raise NotPSD(f'Correlation matrix has eigenvalue {min_eig:.3g}.')
    jitter = CHOLESKY_JITTER + max(0., -min_eig)
    logger.info(f'Cholesky factorization with diagonal jitter {jitter:.3g}.')
    return linalg.cholesky(c + jitter * np.eye(len(c)), lower=True)


def correlation_correct(series, c_target, transpose_variant=False):
    """Map synthetic Gaussian data onto the target spatial correlation.

    ``U = L L_s^-1 X`` where ``L`` and ``L_s`` are the Cholesky factors of the
    target and of the sample correlation of ``X``. With ``transpose_variant``
    the map ``L L_s^T X`` is applied instead, kept only for comparison since
    it does not reproduce the target.

    Returns
    -------
    TimeSeriesMatrix
    """
    if series.space is not Space.GAUSSIAN:
        raise SpaceTagMismatch('Correlation correction works in Gaussian space.')
    c_target = np.asarray(c_target, dtype=np.float64)
    if c_target.shape != (series.m, series.m):
        raise ShapeMismatch(f'Target correlation has shape {c_target.shape} for {series.m} locations.')
    c_sample = spatial_correlation(series)
    eig = linalg.eigvalsh(c_sample)
    if eig[0] <= SINGULAR_RTOL * max(np.trace(c_sample), np.finfo(float).tiny):
        raise SingularSampleCorrelation(f'Sample correlation is singular (smallest eigenvalue {eig[0]:.3g}).')
    l_target = cholesky(c_target)
    l_sample = linalg.cholesky(c_sample, lower=True)
    if transpose_variant:
        data = l_target @ l_sample.T @ series.data
    else:
        data = l_target @ linalg.solve_triangular(l_sample, series.data, lower=True)
    logger.info(f'Spatial correlation error before correction: '
                f'{relative_frobenius_error(c_sample, c_target):.4g}')
    return series.with_data(data, Space.GAUSSIAN)
