import unittest

import numpy as np
from numpy.testing import assert_allclose
from scipy import stats

from ..config import Space
from ..databases.series import TimeSeriesMatrix
from ..exceptions import DomainError, SpaceTagMismatch, InsufficientData, ShapeMismatch
from ..preprocess.marginals import MarginalModel, MarginalSet, MarginalKind, GaussianTransformer, \
    gaussian_cdf, gaussian_quantile, gamma_cdf, gamma_quantile, to_gaussian, from_gaussian


class TestScalarFunctions(unittest.TestCase):

    def test_gaussian(self):
        assert_allclose(gaussian_cdf(0.), .5)
        assert_allclose(gaussian_quantile(.975), 1.959963984540054, rtol=1e-12)
        for p in (0., 1., -.1):
            with self.subTest(f'p={p}'):
                with self.assertRaises(DomainError):
                    gaussian_quantile(p)

    def test_gamma(self):
        x = np.array([.1, 1., 5.])
        assert_allclose(gamma_cdf(x, 2., 1.), stats.gamma.cdf(x, a=2.), rtol=1e-12)
        assert_allclose(gamma_quantile(gamma_cdf(x, 2., 3.), 2., 3.), x, rtol=1e-10)
        with self.assertRaises(DomainError):
            gamma_cdf(-1., 2., 1.)


class TestMarginalModel(unittest.TestCase):

    def test_empirical_ranks(self):
        mdl = MarginalModel.empirical([3., 1., 2., 4.])
        assert_allclose(mdl.cdf([1., 2., 3., 4.]), [.2, .4, .6, .8])
        assert_allclose(mdl.cdf([0., 10.]), [.2, .8])
        assert_allclose(mdl.ppf([.2, .5, .8]), [1., 2.5, 4.])

    def test_empirical_ties_take_highest_rank(self):
        mdl = MarginalModel.empirical([1., 2., 2., 3.])
        assert_allclose(mdl.cdf(2.), .6)

    def test_empirical_needs_two_samples(self):
        with self.assertRaises(InsufficientData):
            MarginalModel.empirical([1.])

    def test_gamma_gaussian_round_trip(self):
        mdl = MarginalModel.gamma(2., 1.)
        x = np.array([1e-6, .5, 2., 10., 40.])
        assert_allclose(mdl.from_gaussian(mdl.to_gaussian(x)), x, rtol=1e-8)

    def test_gamma_upper_tail_is_finite(self):
        mdl = MarginalModel.gamma(2., 1.)
        z = mdl.to_gaussian(np.array([60.]))
        self.assertTrue(np.isfinite(z).all())
        self.assertGreater(z[0], 8.)

    def test_gamma_negative(self):
        with self.assertRaises(DomainError):
            MarginalModel.gamma(2., 1.).to_gaussian(np.array([-1.]))

    def test_sample_matches_cdf(self):
        mdl = MarginalModel.gamma(2., 1.)
        s = mdl.sample(20000, 0)
        self.assertGreater(stats.kstest(s, mdl.cdf).pvalue, .01)

    def test_dict_round_trip(self):
        for mdl in (MarginalModel.gamma(2., 3.), MarginalModel.empirical([1., 2., 5.]),
                    MarginalModel.standard_gaussian()):
            with self.subTest(mdl.kind.name):
                back = MarginalModel.from_dict(mdl.to_dict())
                self.assertIs(back.kind, mdl.kind)
                assert_allclose(back.cdf([1.5, 3.]), mdl.cdf([1.5, 3.]))


class TestMarginalSet(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        rng = np.random.default_rng(0)
        cls.physical = TimeSeriesMatrix(rng.gamma(2., 1., size=(3, 500)), Space.PHYSICAL)

    def test_space_tags(self):
        self.assertIs(MarginalSet.standard_gaussian(2).space, Space.GAUSSIAN)
        self.assertIs(MarginalSet.gamma(2, 2., 1.).space, Space.PHYSICAL)
        gauss = to_gaussian(self.physical, MarginalSet.gamma(3, 2., 1.))
        with self.assertRaises(SpaceTagMismatch):
            to_gaussian(gauss, MarginalSet.gamma(3, 2., 1.))
        with self.assertRaises(SpaceTagMismatch):
            from_gaussian(self.physical, MarginalSet.gamma(3, 2., 1.))
        with self.assertRaises(ShapeMismatch):
            to_gaussian(self.physical, MarginalSet.gamma(2, 2., 1.))

    def test_empirical_round_trip(self):
        marginals = MarginalSet.fit_empirical(self.physical)
        gauss = to_gaussian(self.physical, marginals)
        self.assertIs(gauss.space, Space.GAUSSIAN)
        assert_allclose(from_gaussian(gauss, marginals).data, self.physical.data, atol=1e-9)
        with self.assertRaises(SpaceTagMismatch):
            MarginalSet.fit_empirical(gauss)

    def test_sample_shape(self):
        self.assertEqual(MarginalSet.gamma(3, 2., 1.).sample(7, 0).shape, (3, 7))

    def test_transformer(self):
        tr = GaussianTransformer().fit(self.physical)
        self.assertIs(tr.marginals_[0].kind, MarginalKind.EMPIRICAL)
        back = tr.inverse_transform(tr.transform(self.physical))
        assert_allclose(back.data, self.physical.data, atol=1e-9)

    def test_dict_round_trip(self):
        marginals = MarginalSet.gamma(3, 2., 1.)
        back = MarginalSet.from_dict(marginals.to_dict())
        self.assertEqual(len(back), 3)
        self.assertEqual(back[1].shape, 2.)


if __name__ == '__main__':
    unittest.main()
