"""Evaluation metrics of synthetic realizations."""
import numpy as np
from scipy import stats
from scipy.integrate import trapezoid

from .baseline import lagged_autocorrelation
from .config import Space
from .exceptions import ZeroTarget, EmptyTailGrid, SpaceTagMismatch, ShapeMismatch, SeriesTooShort, EmptyInput
from .states.markov import state_frequencies


def frobenius_rel_error(c, c_approx):
    """``||C - C~||_F / ||C||_F``."""
    c = np.asarray(c, dtype=np.float64)
    c_approx = np.asarray(c_approx, dtype=np.float64)
    if c.shape != c_approx.shape:
        raise ShapeMismatch(f'Shapes differ: {c.shape} vs {c_approx.shape}.')
    norm = np.linalg.norm(c)
    if norm == 0:
        raise ZeroTarget('Target matrix is zero.')
    return float(np.linalg.norm(c - c_approx) / norm)


def autocorr_curve(series, tau_max):
    """Centered autocorrelation per location, shape (m, tau_max + 1)."""
    if series.n <= tau_max:
        raise SeriesTooShort(f'Series of length {series.n} for tau_max={tau_max}.')
    return lagged_autocorrelation(series, tau_max, center=True)


def density_l1_error(samples, reference, grid):
    """Relative L1 distance of a Silverman KDE to a reference density on ``grid``.

    ``reference`` is a callable pdf or an array of density values on the grid.
    """
    samples = np.asarray(samples, dtype=np.float64).reshape(-1)
    if samples.size == 0:
        raise EmptyInput('No samples for the density estimate.')
    grid = np.asarray(grid, dtype=np.float64)
    f_ref = reference(grid) if callable(reference) else np.asarray(reference, dtype=np.float64)
    f_hat = stats.gaussian_kde(samples, bw_method='silverman')(grid)
    return float(trapezoid(np.abs(f_hat - f_ref), grid) / trapezoid(f_ref, grid))


def exceedance_curve(samples, grid):
    """Fraction of samples strictly above every grid value."""
    samples = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
    grid = np.asarray(grid, dtype=np.float64)
    return 1. - np.searchsorted(samples, grid, side='right') / len(samples)


def exceedance_counts(samples, grid):
    samples = np.sort(np.asarray(samples, dtype=np.float64).reshape(-1))
    return len(samples) - np.searchsorted(samples, np.asarray(grid), side='right')


def return_period_l1_error(p_target, p_model, grid=None, mask=None):
    """Mean relative return-period error over grid points where both curves are positive.

    Parameters
    ----------
    p_target, p_model : ndarray
        Exceedance probabilities on a common grid.
    grid : ndarray, optional
        Only checked for shape.
    mask : ndarray of bool, optional
        Extra selection, e.g. points with enough tail samples.
    """
    p_target = np.asarray(p_target, dtype=np.float64)
    p_model = np.asarray(p_model, dtype=np.float64)
    if p_target.shape != p_model.shape or (grid is not None and np.shape(grid) != p_target.shape):
        raise ShapeMismatch('Exceedance curves and grid must share one shape.')
    keep = (p_target > 0) & (p_model > 0)
    if mask is not None:
        keep &= np.asarray(mask, dtype=bool)
    if not np.any(keep):
        raise EmptyTailGrid('The exceedance curves share no grid point with positive probability.')
    rp_t = 1. / p_target[keep]
    rp_m = 1. / p_model[keep]
    return float(np.mean(np.abs(rp_m - rp_t) / rp_t))


def _check_physical(series):
    if series.space is not Space.PHYSICAL:
        raise SpaceTagMismatch('The downstream metric is defined in physical space.')


def sde_metric_S(series):
    """``S(t) = sum_i V_i(t)`` for every column, pooled over realizations."""
    _check_physical(series)
    return series.data.sum(axis=0)


def wind_metric_S(series, t_sim=None):
    """Per realization, the largest time-average over locations.

    The discrete mean stands in for the time integral divided by ``t_sim``.
    """
    _check_physical(series)
    out = []
    for sl in series.realization_slices():
        block = series.data[:, sl]
        if t_sim is not None:
            assert block.shape[1] == t_sim, f'Realization has {block.shape[1]} steps, expected {t_sim}.'
        out.append(block.mean(axis=1).max())
    return np.array(out)


def state_frequency_scatter(observed, generated, n_states=None):
    """Observed and generated state frequencies with their Pearson correlation."""
    f_obs = state_frequencies(observed, n_states)
    f_gen = state_frequencies(generated, len(f_obs))
    r = stats.pearsonr(f_obs, f_gen)[0] if np.ptp(f_obs) > 0 and np.ptp(f_gen) > 0 else np.nan
    return f_obs, f_gen, float(r)


def ks_standard_gaussian(samples):
    """p-value of the KS test against the standard Gaussian."""
    return float(stats.kstest(np.asarray(samples).reshape(-1), 'norm').pvalue)


def ks_marginal(samples, marginal):
    return float(stats.kstest(np.asarray(samples).reshape(-1), marginal.cdf).pvalue)
