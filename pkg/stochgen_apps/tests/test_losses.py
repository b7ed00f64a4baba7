import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
from numpy.testing import assert_allclose

from ..ai.autograd import Tensor, gradient_check, softmax, backward
from ..ai.interface import BaseNet, LearningRateSchedule
from ..ai.layers import Linear
from ..ai.losses import l1_loss, l2_loss, focal_loss, class_weights_for_tail
from ..ai.optimizer import ParamStore, Adam
from ..exceptions import DegenerateProbability, ShapeMismatch, NonFiniteResult
from .utils import tiny_hp


class _Arrays:

    def __init__(self, x, y):
        self.x = x
        self.y = y

    def __len__(self):
        return len(self.x)

    def batches(self, batch_size, shuffle=False, rng=None):
        ind = np.arange(len(self))
        if shuffle:
            np.random.default_rng(rng).shuffle(ind)
        for start in range(0, len(ind), batch_size):
            yield ind[start:start + batch_size]


class _Regression(BaseNet):

    def __init__(self, seed=None):
        super().__init__(seed)
        self.lin = Linear(3, 1, self.rng)
        self._init_store()

    def batch_loss(self, dataset, ind):
        return l2_loss(self.lin(Tensor(dataset.x[ind])), dataset.y[ind])


def _linear_data(n, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, 3))
    return _Arrays(x, x @ np.array([[1.], [-2.], [.5]]) + .3)


class TestLosses(unittest.TestCase):

    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_regression_losses(self):
        pred = Tensor(np.array([[1., 2.], [3., 4.]]), requires_grad=True)
        target = np.array([[0., 2.], [5., 4.]])
        self.assertAlmostEqual(float(l1_loss(pred, target).data), .75)
        self.assertAlmostEqual(float(l2_loss(pred, target).data), 1.25)
        for loss in (l1_loss, l2_loss):
            with self.subTest(loss.__name__):
                x = Tensor(self.rng.standard_normal((4, 3)), requires_grad=True)
                t = self.rng.standard_normal((4, 3))
                self.assertLess(gradient_check(lambda a: loss(a, t), [x], 1e-5), 1e-4)
                with self.assertRaises(ShapeMismatch):
                    loss(x, t[:2])

    def test_focal_loss_gradient(self):
        targets = np.array([0, 2, 1, 2, 3])
        weights = np.array([1., 2., 1., 4.])
        for gamma in (0., 1., 2.):
            with self.subTest(gamma=gamma):
                logits = Tensor(self.rng.standard_normal((5, 4)), requires_grad=True)
                err = gradient_check(lambda z: focal_loss(softmax(z), targets, gamma, weights), [logits], 1e-5)
                self.assertLess(err, 1e-4)

    def test_focal_loss_values(self):
        probs = np.array([[.5, .5], [.2, .8]])
        targets = np.array([0, 1])
        ce = -(np.log(.5) + np.log(.8)) / 2
        self.assertAlmostEqual(float(focal_loss(probs, targets, 0.).data), ce)
        focal = -(.5 ** 2 * np.log(.5) + .2 ** 2 * np.log(.8)) / 2
        self.assertAlmostEqual(float(focal_loss(probs, targets, 2.).data), focal)
        weighted = -(np.log(.5) + 3 * np.log(.8)) / 2
        self.assertAlmostEqual(float(focal_loss(probs, targets, 0., [1., 3.]).data), weighted)

    def test_focal_loss_errors(self):
        with self.assertRaises(DegenerateProbability):
            focal_loss(np.array([[1., 0.]]), np.array([1]))
        with self.assertRaises(ShapeMismatch):
            focal_loss(np.array([[.5, .5]]), np.array([0, 1]))

    def test_class_weights_for_tail(self):
        assert_allclose(class_weights_for_tail(4, [True, True, False, False], 5.), [5., 5., 1., 1.])


class TestOptimizer(unittest.TestCase):

    def test_first_adam_step(self):
        w = Tensor(np.array([1., -1., 2.]), requires_grad=True)
        store = ParamStore(dict(w=w))
        backward((w * np.array([3., -.5, 0.])).sum())
        Adam(store, lr=.1).step()
        assert_allclose(w.data, [.9, -.9, 2.], atol=1e-6)
        self.assertEqual(store.t, 1)

    def test_adam_minimizes_quadratic(self):
        w = Tensor(np.array([5., -3.]), requires_grad=True)
        store = ParamStore(dict(w=w))
        opt = Adam(store, lr=.1)
        for _ in range(500):
            store.zero_grad()
            backward(((w - 1.) * (w - 1.)).sum())
            opt.step()
        assert_allclose(w.data, 1., atol=1e-2)

    def test_param_store_weights(self):
        store = ParamStore(dict(a=Tensor(np.ones((2, 3)), requires_grad=True),
                                b=Tensor(np.zeros(4), requires_grad=True)))
        self.assertEqual(store.n_params(), 10)
        weights = store.get_weights()
        weights['a'] += 1.
        assert_allclose(store.params['a'].data, 1.)
        store.set_weights(weights)
        assert_allclose(store.params['a'].data, 2.)
        with self.assertRaises(AssertionError):
            store.set_weights(dict(a=np.ones(3), b=np.zeros(4)))

    def test_learning_rate_schedule(self):
        sched = LearningRateSchedule(1e-3, {3: 1e-4, 5: 1e-5})
        self.assertEqual([sched.lr_at(e) for e in range(6)], [1e-3, 1e-3, 1e-4, 1e-4, 1e-5, 1e-5])
        hp = tiny_hp(learning_rate=1e-3, lr_drops={3: 1e-4})
        from_hp = LearningRateSchedule(hp.learning_rate, hp.lr_drops)
        self.assertEqual([from_hp.lr_at(e) for e in range(4)], [1e-3, 1e-3, 1e-4, 1e-4])


class TestBaseNet(unittest.TestCase):

    def test_fit_reduces_loss(self):
        model = _Regression(seed=1)
        history = model.fit(_linear_data(256), _linear_data(64, seed=1), epochs=30, batch_size=32,
                            learning_rate=5e-2, lr_drops={20: 1e-2}, patience=100)
        self.assertEqual(set(history), {'loss', 'val_loss', 'lr'})
        self.assertLess(history['loss'][-1], .1 * history['loss'][0])
        self.assertEqual(history['lr'][-1], 1e-2)
        assert_allclose(model.lin.w.data.ravel(), [1., -2., .5], atol=.1)
        self.assertFalse(model.training)

    def test_max_steps(self):
        model = _Regression(seed=1)
        model.fit(_linear_data(100), epochs=10, batch_size=10, max_steps=7)
        self.assertEqual(model.store.t, 7)

    def test_early_stopping(self):
        model = _Regression(seed=1)
        history = model.fit(_linear_data(40), _linear_data(20, seed=2), epochs=20, batch_size=10,
                            learning_rate=0., patience=1)
        self.assertEqual(len(history['loss']), 2)

    def test_non_finite_loss(self):
        data = _linear_data(10)
        data.y[3] = np.inf
        with self.assertRaises(NonFiniteResult):
            _Regression(seed=0).fit(data, epochs=1, batch_size=10)

    def test_seeded_training_is_deterministic(self):
        weights = []
        for _ in range(2):
            model = _Regression(seed=3)
            model.fit(_linear_data(64), epochs=3, batch_size=8, learning_rate=1e-2)
            weights.append(model.store.get_weights())
        for k in weights[0]:
            assert_allclose(weights[0][k], weights[1][k], rtol=0, atol=0)

    def test_save_load_weights(self):
        model = _Regression(seed=1)
        model.fit(_linear_data(32), epochs=2, batch_size=8, learning_rate=1e-2)
        with TemporaryDirectory() as tmp:
            path = Path(tmp).joinpath('reg')
            model.save(path)
            other = _Regression(seed=9).load_weights(path)
        for k, w in model.store.get_weights().items():
            assert_allclose(other.store.get_weights()[k], w)


if __name__ == '__main__':
    unittest.main()
