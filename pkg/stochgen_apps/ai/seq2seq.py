"""Encoder-decoder transformer that maps Markov state sequences to multivariate values."""
import logging

import numpy as np

from .autograd import Tensor, no_grad
from .interface import BaseNet
from .layers import DataEmbedding, EncoderBlock, DecoderBlock, Linear
from .losses import l1_loss
from ..config import HyperParams, TimeKind
from ..databases.series import TimeStampVector
from ..exceptions import ShapeMismatch
from ..handlers.checkpoint import load_checkpoint
from ..preprocess.dataset_generation import window_time_features

logger = logging.getLogger(__name__)


class MarkovTransformer(BaseNet):
    """Transformer with value, Markov state and time embeddings.

    The encoder reads ``q_enc_in`` steps. The decoder reads the last
    ``q_dec_in`` encoder steps followed by ``q_out`` zero columns, together
    with the known future states, and the last ``q_out`` outputs are the
    prediction.

    Parameters
    ----------
    m : int
        Number of locations.
    n_states : int
        Size of the Markov state space.
    hp : HyperParams
    time_kind : TimeKind
    year_range : tuple of int, optional
        Year span used to standardize calendar stamps.
    """

    def __init__(self, m, n_states, hp, time_kind=TimeKind.UNITLESS, year_range=None, seed=None):
        super().__init__(hp.seed if seed is None else seed)
        self.m = int(m)
        self.n_states = int(n_states)
        self.hp = hp
        self.time_kind = TimeKind(time_kind)
        self.year_range = None if year_range is None else tuple(int(y) for y in year_range)
        calendar = self.time_kind is TimeKind.CALENDAR
        rng = self.rng
        self.enc_embedding = DataEmbedding(m, n_states, hp.d_model, hp.kernel_size, rng, calendar)
        self.dec_embedding = DataEmbedding(m, n_states, hp.d_model, hp.kernel_size, rng, calendar)
        self.encoder = [EncoderBlock(hp.d_model, hp.d_ff, hp.n_head, hp.dropout_rate, rng)
                        for _ in range(hp.n_enc)]
        self.decoder = [DecoderBlock(hp.d_model, hp.d_ff, hp.n_head, hp.dropout_rate, rng)
                        for _ in range(hp.n_dec)]
        self.projection = Linear(hp.d_model, m, rng)
        self._init_store()

    def config(self):
        return dict(m=self.m, n_states=self.n_states, hp=self.hp.to_dict(),
                    time_kind=self.time_kind.value, year_range=self.year_range)

    @classmethod
    def from_config(cls, config):
        return cls(config['m'], config['n_states'], HyperParams.from_dict(config['hp']),
                   TimeKind(config['time_kind']), config.get('year_range'))

    def _features(self, stamps):
        return window_time_features(stamps, self.time_kind, self.year_range)

    def embed(self, x, y, t, decoder=False):
        """Sum of the three embeddings.

        Parameters
        ----------
        x : ndarray or Tensor, shape (B, q, m)
        y : ndarray, shape (B, q)
        t : ndarray, shape (B, q) or (B, q, 4)

        Returns
        -------
        Tensor, shape (B, q, d_model)
        """
        x = x if isinstance(x, Tensor) else Tensor(x)
        if x.shape[:2] != np.shape(y)[:2] or np.shape(t)[:2] != np.shape(y)[:2]:
            raise ShapeMismatch(f'Inconsistent widths: values {x.shape}, states {np.shape(y)}, '
                                f'stamps {np.shape(t)}.')
        if x.shape[-1] != self.m:
            raise ShapeMismatch(f'Expected {self.m} locations, got {x.shape[-1]}.')
        layer = self.dec_embedding if decoder else self.enc_embedding
        return layer(x, np.asarray(y), self._features(t))

    def forward(self, enc_x, enc_y, enc_t, out_y, out_t):
        """Prediction for a batch of windows.

        ``enc_x`` has shape (B, m, q_enc_in); returns a Tensor of shape (B, q_out, m).
        """
        hp = self.hp
        enc_x = np.swapaxes(np.asarray(enc_x, dtype=np.float64), 1, 2)
        enc_y, enc_t = np.asarray(enc_y), np.asarray(enc_t)
        out_y, out_t = np.asarray(out_y), np.asarray(out_t)
        if enc_x.shape[1] != hp.q_enc_in or out_y.shape[1] != hp.q_out:
            raise ShapeMismatch(f'Window widths {enc_x.shape[1]}/{out_y.shape[1]} do not match '
                                f'q_enc_in={hp.q_enc_in}, q_out={hp.q_out}.')
        z_enc = self.embed(enc_x, enc_y, enc_t)
        for block in self.encoder:
            z_enc = block(z_enc)

        bsz, q_dec = len(enc_x), hp.q_dec_in
        dec_x = np.concatenate([enc_x[:, -q_dec:], np.zeros((bsz, hp.q_out, self.m))], axis=1)
        dec_y = np.concatenate([enc_y[:, -q_dec:], out_y], axis=1)
        dec_t = np.concatenate([enc_t[:, -q_dec:], out_t], axis=1)
        z_dec = self.embed(dec_x, dec_y, dec_t, decoder=True)
        for block in self.decoder:
            z_dec = block(z_dec, z_enc)
        return self.projection(z_dec)[:, -hp.q_out:, :]

    def batch_loss(self, dataset, ind):
        pred = self.forward(dataset.enc_x[ind], dataset.enc_y[ind], dataset.enc_t[ind],
                            dataset.out_y[ind], dataset.out_t[ind])
        return l1_loss(pred, np.swapaxes(dataset.target_x[ind], 1, 2))

    def predict(self, dataset, batch_size=512):
        """Predictions with shape (N, m, q_out)."""
        self.eval()
        out = []
        with no_grad():
            for ind in dataset.batches(batch_size):
                pred = self.forward(dataset.enc_x[ind], dataset.enc_y[ind], dataset.enc_t[ind],
                                    dataset.out_y[ind], dataset.out_t[ind])
                out.append(np.swapaxes(pred.data, 1, 2))
        return np.concatenate(out, axis=0)


def forward(model, window):
    """Single :class:`WindowPair` prediction, shape (m, q_out)."""
    with no_grad():
        pred = model.forward(window.enc_x[None], window.enc_y[None], window.enc_t[None],
                             window.out_y[None], window.out_t[None])
    return pred.data[0].T


def train(model, train_windows, val_windows, hp=None, max_steps=None):
    """Fit on window datasets with the L1 loss, returns the loss history."""
    hp = model.hp if hp is None else hp
    history = model.fit(train_windows, val_windows, epochs=hp.max_epochs, batch_size=hp.batch_size,
                        learning_rate=hp.learning_rate, lr_drops=hp.lr_drops, patience=hp.patience,
                        max_steps=max_steps)
    return model, history


def _extend_stamp_values(values, n, time_kind):
    """Append ``n`` stamps continuing the grid of each row of ``values`` (R, L[, 4])."""
    if n <= 0:
        return values
    out = []
    for row in values:
        tsv = TimeStampVector(row, time_kind, check=False)
        out.append(np.concatenate([row, tsv.extend(n).values], axis=0))
    return np.stack(out)


def infer_autoregressive(model, init_x, init_y, init_t, future_y, future_t, batch_size=512):
    """Generate values for known future states block by block.

    Every iteration predicts ``q_out`` columns from the latest ``q_enc_in``
    columns of (initial values followed by predictions). A trailing partial
    block is predicted in full and truncated.

    Parameters
    ----------
    init_x : ndarray, shape (m, q_enc_in) or (R, m, q_enc_in)
    init_y : ndarray, shape (q_enc_in,) or (R, q_enc_in)
    init_t : ndarray, stamps of the initial columns
    future_y : ndarray, shape (n_future,) or (R, n_future)
    future_t : ndarray, stamps of the future columns

    Returns
    -------
    ndarray
        Shape (m, n_future) or (R, m, n_future).
    """
    hp = model.hp
    single = np.ndim(init_x) == 2
    init_x, init_y, init_t, future_y, future_t = (
        np.asarray(a)[None] if single else np.asarray(a) for a in (init_x, init_y, init_t, future_y, future_t))
    n_real, m, q_enc = init_x.shape
    n_future = future_y.shape[1]
    if q_enc != hp.q_enc_in or init_y.shape[1] != q_enc or init_t.shape[1] != q_enc:
        raise ShapeMismatch(f'Initial block must be {hp.q_enc_in} columns wide.')
    if future_t.shape[1] != n_future:
        raise ShapeMismatch(f'{future_t.shape[1]} future stamps for {n_future} future states.')
    n_iter = int(np.ceil(n_future / hp.q_out))
    pad = n_iter * hp.q_out - n_future
    if pad:
        future_y = np.concatenate([future_y, np.repeat(future_y[:, -1:], pad, axis=1)], axis=1)
        future_t = _extend_stamp_values(future_t, pad, model.time_kind)

    values = np.concatenate([init_x, np.zeros((n_real, m, n_iter * hp.q_out))], axis=2)
    states = np.concatenate([init_y, future_y], axis=1)
    stamps = np.concatenate([init_t, future_t], axis=1)
    model.eval()
    with no_grad():
        for it in range(n_iter):
            lo = it * hp.q_out
            enc = slice(lo, lo + q_enc)
            out = slice(lo + q_enc, lo + q_enc + hp.q_out)
            for start in range(0, n_real, batch_size):
                b = slice(start, start + batch_size)
                pred = model.forward(values[b, :, enc], states[b, enc], stamps[b, enc],
                                     states[b, out], stamps[b, out])
                values[b, :, out] = np.swapaxes(pred.data, 1, 2)
    logger.info(f'Autoregressive inference: {n_real} realizations, {n_iter} iterations of {hp.q_out} steps.')
    result = values[:, :, q_enc:q_enc + n_future]
    return result[0] if single else result


def reconstruct_with_true_states(model, series, states, start=0, n_future=None):
    """Regenerate a stretch of an observed series from its own state labels.

    The first ``q_enc_in`` columns from ``start`` initialize the model.

    Returns
    -------
    prediction : ndarray, shape (m, n_future)
    target : ndarray, shape (m, n_future)
    l1_error : float
        Mean absolute difference of the two.
    """
    q = model.hp.q_enc_in
    if n_future is None:
        n_future = series.n - start - q
    assert n_future > 0 and start + q + n_future <= series.n, 'Series too short for the reconstruction.'
    init = slice(start, start + q)
    fut = slice(start + q, start + q + n_future)
    pred = infer_autoregressive(model, series.data[:, init], states.states[init], series.stamps.values[init],
                                states.states[fut], series.stamps.values[fut])
    target = series.data[:, fut]
    return pred, target, float(np.mean(np.abs(pred - target)))


def load_model(path):
    weights, meta = load_checkpoint(path)
    model = MarkovTransformer.from_config(meta['config'])
    model.store.set_weights(weights)
    model.eval()
    return model


__all__ = ['MarkovTransformer', 'forward', 'train', 'infer_autoregressive', 'reconstruct_with_true_states',
           'load_model']
