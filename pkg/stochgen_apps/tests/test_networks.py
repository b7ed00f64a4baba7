import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
from numpy.testing import assert_allclose, assert_array_equal

from ..ai.autograd import Tensor, gradient_check
from ..ai.layers import markov_state_embedding
from ..ai.generator import StateGeneratorType, MarkovChainGenerator, default_generator_type, \
    init_state_generator, load_state_generator
from ..ai.seq2seq import MarkovTransformer, forward, train, infer_autoregressive, reconstruct_with_true_states, \
    load_model
from ..ai.state_generator import StateGenerator, stategen_forward, stategen_train, split_state_windows
from ..config import TimeKind
from ..databases.series import TimeSeriesMatrix, TimeStampVector, MarkovStateSequence
from ..exceptions import ShapeMismatch, UnknownState
from ..preprocess.dataset_generation import build_window_dataset
from .utils import tiny_hp, random_series, cyclic_states, hourly_stamps


def _cycle_series(n, m=2, period=8):
    t = np.arange(n)
    data = np.stack([np.sin(2 * np.pi * (t + j) / period) for j in range(m)])
    states = MarkovStateSequence((t % period) // 2, period // 2)
    return TimeSeriesMatrix(data), states


class TestStateGenerator(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.hp = tiny_hp(focal_gamma=0., learning_rate=1e-2, max_epochs=30, batch_size=32, patience=100)
        cls.states = cyclic_states(400, 4)
        cls.model = StateGenerator(4, cls.hp, seed=0)
        cls.model, cls.history = stategen_train(cls.model, cls.states)

    def test_learns_cycle(self):
        self.assertLess(self.history['loss'][-1], self.history['loss'][0])
        for hist in ([0, 1], [1, 2], [2, 3], [3, 0]):
            with self.subTest(history=hist):
                probs = stategen_forward(self.model, hist)
                self.assertAlmostEqual(probs.sum(), 1.)
                self.assertEqual(probs.argmax(), (hist[-1] + 1) % 4)
                self.assertGreater(probs.max(), .9)

    def test_generate(self):
        gen = self.model.generate([0, 1], None, 12, seed=5)
        self.assertIsInstance(gen, MarkovStateSequence)
        self.assertEqual(len(gen), 12)
        self.assertGreater(np.mean(gen.states == (np.arange(2, 14) % 4)), .8)
        batch = self.model.generate(np.array([[0, 1], [2, 3], [1, 2]]), None, 6, seed=5)
        self.assertEqual([len(s) for s in batch], [6, 6, 6])
        again = self.model.generate(np.array([[0, 1], [2, 3], [1, 2]]), None, 6, seed=5)
        for a, b in zip(batch, again):
            assert_array_equal(a.states, b.states)

    def test_errors(self):
        with self.assertRaises(ShapeMismatch):
            self.model.generate([0, 1, 2], None, 3)
        with self.assertRaises(UnknownState):
            self.model.probabilities(np.array([[0, 7]]))

    def test_split_windows(self):
        states = cyclic_states(100, 4, boundaries=(0, 50))
        train_ds, val_ds = split_state_windows(states, TimeStampVector.unitless(100), 2, .8)
        self.assertEqual(len(train_ds), 2 * (40 - 2))
        self.assertEqual(len(val_ds), 2 * (10 - 2))
        assert_array_equal(train_ds.target, (train_ds.history[:, -1] + 1) % 4)

    def test_calendar_stamps(self):
        model = StateGenerator(3, tiny_hp(), time_kind=TimeKind.CALENDAR, year_range=(2001, 2002), seed=0)
        stamps = hourly_stamps(2 + 5).values
        gen = model.generate([0, 2], stamps, 5, seed=0)
        self.assertEqual(len(gen), 5)
        with self.assertRaises(ShapeMismatch):
            model.generate([0, 2], stamps[:4], 5)

    def test_save_and_load(self):
        with TemporaryDirectory() as tmp:
            self.model.save(tmp)
            loaded = load_state_generator(tmp)
        self.assertIsInstance(loaded, StateGenerator)
        assert_allclose(stategen_forward(loaded, [2, 3]), stategen_forward(self.model, [2, 3]))


class TestMarkovTransformer(unittest.TestCase):

    def setUp(self):
        self.hp = tiny_hp()
        self.series = random_series(2, 40, seed=1)
        self.states = cyclic_states(40, 4)
        self.ds = build_window_dataset(self.series, self.states, self.hp.q_enc_in, self.hp.q_out)
        self.model = MarkovTransformer(2, 4, self.hp, seed=0)

    def test_forward_shape(self):
        ind = np.arange(5)
        pred = self.model.forward(self.ds.enc_x[ind], self.ds.enc_y[ind], self.ds.enc_t[ind],
                                  self.ds.out_y[ind], self.ds.out_t[ind])
        self.assertEqual(pred.shape, (5, self.hp.q_out, 2))
        self.assertEqual(forward(self.model, self.ds[0]).shape, (2, self.hp.q_out))
        self.assertEqual(self.model.predict(self.ds).shape, (len(self.ds), 2, self.hp.q_out))

    def test_forward_errors(self):
        with self.assertRaises(ShapeMismatch):
            self.model.forward(self.ds.enc_x[:2, :, 1:], self.ds.enc_y[:2, 1:], self.ds.enc_t[:2, 1:],
                               self.ds.out_y[:2], self.ds.out_t[:2])
        with self.assertRaises(ShapeMismatch):
            MarkovTransformer(3, 4, self.hp).forward(self.ds.enc_x[:2], self.ds.enc_y[:2], self.ds.enc_t[:2],
                                                     self.ds.out_y[:2], self.ds.out_t[:2])

    def test_unknown_state(self):
        table = Tensor(np.arange(12.).reshape(3, 4))
        assert_allclose(markov_state_embedding(np.array([0, 2]), table).data, table.data[[0, 2]])
        x, t = self.ds.enc_x[:1].swapaxes(1, 2), self.ds.enc_t[:1]
        for bad in (3, -1):
            with self.subTest(layer_state=bad):
                with self.assertRaises(UnknownState):
                    markov_state_embedding(np.array([0, bad]), table)
        for bad in (4, -1):
            with self.subTest(model_state=bad):
                y = self.ds.enc_y[:1].copy()
                y[0, -1] = bad
                with self.assertRaises(UnknownState):
                    self.model.embed(x, y, t)

    def test_gradient(self):
        model = self.model
        params = [model.projection.w, model.enc_embedding.value_kernel, model.encoder[0].attn.w_q,
                  model.decoder[0].cross_attn.w_k, model.dec_embedding.state.table, model.decoder[0].norm3.gain]
        ind = np.arange(4)
        err = gradient_check(lambda *_: model.batch_loss(self.ds, ind), params, 1e-5)
        self.assertLess(err, 1e-4)

    def test_overfits_small_dataset(self):
        series, states = _cycle_series(80)
        hp = tiny_hp(learning_rate=1e-2, max_epochs=40, patience=100)
        ds = build_window_dataset(series, states, hp.q_enc_in, hp.q_out)
        model = MarkovTransformer(2, 4, hp, seed=0)
        before = model.evaluate(ds)
        model, history = train(model, ds, None, max_steps=None)
        self.assertLess(model.evaluate(ds), .3 * before)
        self.assertEqual(len(history['loss']), 40)

    def test_infer_autoregressive(self):
        hp, model = self.hp, self.model
        q = hp.q_enc_in
        init_x, init_y = self.series.data[:, :q], self.states.states[:q]
        init_t = self.series.stamps.values[:q]
        fut_y, fut_t = self.states.states[q:q + 7], self.series.stamps.values[q:q + 7]
        out = infer_autoregressive(model, init_x, init_y, init_t, fut_y, fut_t)
        self.assertEqual(out.shape, (2, 7))
        self.assertTrue(np.all(np.isfinite(out)))
        first = forward(model, self.ds[0])
        assert_allclose(out[:, :hp.q_out], first, atol=1e-12)

        batched = infer_autoregressive(model, np.stack([init_x, init_x + 1.]), np.stack([init_y, init_y]),
                                       np.stack([init_t, init_t]), np.stack([fut_y, fut_y]),
                                       np.stack([fut_t, fut_t]), batch_size=1)
        self.assertEqual(batched.shape, (2, 2, 7))
        assert_allclose(batched[0], out, atol=1e-12)

        with self.assertRaises(ShapeMismatch):
            infer_autoregressive(model, init_x[:, 1:], init_y[1:], init_t[1:], fut_y, fut_t)
        with self.assertRaises(ShapeMismatch):
            infer_autoregressive(model, init_x, init_y, init_t, fut_y, fut_t[:-1])

    def test_calendar_inference_pads_stamps(self):
        hp = self.hp
        stamps = hourly_stamps(40)
        series = TimeSeriesMatrix(self.series.data, stamps=stamps)
        model = MarkovTransformer(2, 4, hp, TimeKind.CALENDAR, year_range=(2001, 2001), seed=0)
        q = hp.q_enc_in
        out = infer_autoregressive(model, series.data[:, :q], self.states.states[:q], stamps.values[:q],
                                   self.states.states[q:q + 5], stamps.values[q:q + 5])
        self.assertEqual(out.shape, (2, 5))

    def test_reconstruct_with_true_states(self):
        pred, target, err = reconstruct_with_true_states(self.model, self.series, self.states)
        self.assertEqual(pred.shape, (2, 40 - self.hp.q_enc_in))
        assert_allclose(target, self.series.data[:, self.hp.q_enc_in:])
        self.assertAlmostEqual(err, np.mean(np.abs(pred - target)))

    def test_checkpoint(self):
        with TemporaryDirectory() as tmp:
            path = Path(tmp).joinpath('seq2seq')
            self.model.save(path)
            loaded = load_model(path)
        self.assertEqual(loaded.config(), self.model.config())
        assert_allclose(loaded.predict(self.ds), self.model.predict(self.ds))


class TestGeneratorFactory(unittest.TestCase):

    def test_default_type(self):
        self.assertIs(default_generator_type(1), StateGeneratorType.MARKOV_CHAIN)
        self.assertIs(default_generator_type(4), StateGeneratorType.DEEP)

    def test_markov_chain_generator(self):
        gen = init_state_generator(StateGeneratorType.MARKOV_CHAIN, 4)
        self.assertIsInstance(gen, MarkovChainGenerator)
        gen.fit(cyclic_states(50, 4))
        assert_array_equal(gen.generate([3, 1], None, 6, seed=0).states, [2, 3, 0, 1, 2, 3])
        batch = gen.generate(np.array([[0], [2]]), None, 3, seed=0)
        assert_array_equal(batch[1].states, [3, 0, 1])
        with TemporaryDirectory() as tmp:
            gen.save(tmp)
            loaded = load_state_generator(tmp)
        self.assertIsInstance(loaded, MarkovChainGenerator)
        assert_allclose(loaded.tm.probs, gen.tm.probs)

    def test_factory(self):
        hp = tiny_hp()
        self.assertIsInstance(init_state_generator(StateGeneratorType.DEEP, 4, hp), StateGenerator)
        with self.assertRaises(AssertionError):
            init_state_generator(StateGeneratorType.DEEP, 4)
        user = MarkovChainGenerator(3)
        self.assertIs(init_state_generator(StateGeneratorType.USER_DEFINED, 3, generator=user), user)
        with self.assertRaises(AssertionError):
            init_state_generator(StateGeneratorType.USER_DEFINED, 3)


if __name__ == '__main__':
    unittest.main()
