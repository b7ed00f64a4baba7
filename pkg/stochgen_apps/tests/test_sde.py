import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy import stats

from ..baseline import lagged_autocorrelation
from ..config import Space
from ..databases.sde import SdeParams, SdeOracles, milstein_simulate, build_v, sde_realizations, \
    oracle_autocorr, oracle_cross_corr, CLAMP_EPS
from ..databases.series import TimeSeriesMatrix, concat_realizations
from ..exceptions import ShapeMismatch


class TestSdeOracles(unittest.TestCase):
    """Statistics of the Milstein paths against the closed-form values."""

    @classmethod
    def setUpClass(cls):
        cls.params = SdeParams(theta=40., alpha=1., beta=1., m=3, dt=1e-3, n_steps=200, n_realizations=500,
                               seed=0)
        cls.q, cls.sim_stats = milstein_simulate(cls.params, return_stats=True)
        cls.oracles = SdeOracles(cls.params)

    def test_mean(self):
        self.assertLess(abs(np.mean(self.q) - self.oracles.mean_q), .05)
        self.assertLess(abs(np.var(self.q) - self.oracles.var_q), .1)

    def test_autocorrelation(self):
        q_series = concat_realizations([TimeSeriesMatrix(q) for q in self.q])
        acf = lagged_autocorrelation(q_series, 25, center=True).mean(axis=0)
        lags = np.arange(26) * self.params.dt
        self.assertLess(np.max(np.abs(acf - self.oracles.autocorr(lags))), .05)
        self.assertAlmostEqual(oracle_autocorr(.025, self.params), np.exp(-1.))

    def test_cross_correlation(self):
        v = concat_realizations([build_v(q, self.params.dt) for q in self.q])
        corr = np.corrcoef(v.data)
        off = corr[~np.eye(3, dtype=bool)]
        self.assertLess(np.max(np.abs(off - .5)), .05)
        self.assertEqual(oracle_cross_corr(0, 1, 0., self.params), .5)
        self.assertEqual(oracle_cross_corr(1, 1, 0., self.params), 1.)
        assert_allclose(self.oracles.correlation_matrix(), [[1., .5, .5], [.5, 1., .5], [.5, .5, 1.]])

    def test_v_marginal(self):
        last = np.array([q[0, -1] + q[1, -1] for q in self.q])
        gamma = self.oracles.v_marginals()[0]
        self.assertGreater(stats.kstest(last, gamma.cdf).pvalue, .01)
        self.assertGreater(stats.kstest(last, 'gamma', args=(2.,)).pvalue, .01)

    def test_clamping(self):
        self.assertGreaterEqual(np.min(self.q), CLAMP_EPS)
        n_updates = 500 * 4 * 199
        self.assertAlmostEqual(self.sim_stats['clamp_rate'], self.sim_stats['n_clamped'] / n_updates)
        self.assertLess(self.sim_stats['clamp_rate'], 1e-2)


class TestMilstein(unittest.TestCase):

    def setUp(self):
        self.params = SdeParams(m=1, n_steps=5, n_realizations=2, seed=3)

    def test_injected_noise(self):
        p = self.params
        q = milstein_simulate(p, noise=np.zeros((2, 4, 2)))
        for r in q:
            expected = r[:, 0].copy()
            for k in range(1, p.n_steps):
                expected = expected + p.theta * (1. - expected) * p.dt - p.milstein_coefficient * p.dt
                assert_allclose(r[:, k], expected)
        free = milstein_simulate(p)
        assert_allclose([r[:, 0] for r in q], [r[:, 0] for r in free])
        with self.assertRaises(ShapeMismatch):
            milstein_simulate(p, noise=np.zeros((2, 5, 2)))

    def test_realizations_do_not_depend_on_batching(self):
        small = milstein_simulate(self.params)
        large = milstein_simulate(self.params.replace(n_realizations=4))
        for a, b in zip(small, large):
            assert_allclose(a, b)

    def test_build_v(self):
        q = np.arange(12.).reshape(4, 3)
        v = build_v(q, dt=.5)
        self.assertIs(v.space, Space.PHYSICAL)
        assert_allclose(v.data, q[0] + q[1:])
        self.assertEqual(v.stamps.step, .5)
        with self.assertRaises(ShapeMismatch):
            build_v(q[:1])
        reals = sde_realizations(self.params)
        self.assertEqual(len(reals), 2)
        self.assertEqual((reals[0].m, reals[0].n), (1, 5))

    def test_params(self):
        with self.assertRaises(AssertionError):
            SdeParams(alpha=.5)
        self.assertEqual(SdeParams.from_dict(self.params.to_dict()).to_dict(), self.params.to_dict())
        oracle = SdeOracles(SdeParams(alpha=2., beta=2.)).to_dict(max_lag=3)
        self.assertEqual((oracle['mean_v'], oracle['var_v'], oracle['v_shape']), (2., 1., 4.))
        self.assertEqual(len(oracle['autocorr']), 4)


if __name__ == '__main__':
    unittest.main()
