"""Decoder-only transformer for long-memory Markov state sequences."""
import logging

import numpy as np

from .autograd import add, softmax, no_grad
from .interface import BaseNet, StateGeneratorInterface
from .layers import StateEmbedding, TimeEmbedding, DecoderOnlyBlock, Linear
from .losses import focal_loss, class_weights_for_tail
from ..config import HyperParams, TimeKind
from ..databases.series import MarkovStateSequence, TimeStampVector
from ..exceptions import UnknownState, ShapeMismatch, NoWindows
from ..model_selection import TrainValidationSplit
from ..preprocess.dataset_generation import build_state_windows, window_time_features, StateWindowDataset
from ..utils import spawn_seeds

logger = logging.getLogger(__name__)


class StateGenerator(BaseNet, StateGeneratorInterface):
    """Predicts the next state from the previous ``p`` states.

    The input is the embedded history followed by a learned placeholder
    token (the extra last row of the embedding table). Causal
    self-attention blocks process it and the placeholder position is
    projected to state probabilities.
    """

    def __init__(self, n_states, hp, tail_states=None, time_kind=TimeKind.UNITLESS, year_range=None,
                 seed=None):
        super().__init__(hp.seed if seed is None else seed)
        self.n_states = int(n_states)
        self.order = hp.markov_order
        self.hp = hp
        self.time_kind = TimeKind(time_kind)
        self.year_range = None if year_range is None else tuple(int(y) for y in year_range)
        self.tail_states = np.zeros(n_states, dtype=bool) if tail_states is None \
            else np.asarray(tail_states, dtype=bool)
        rng = self.rng
        self.embedding = StateEmbedding(n_states + 1, hp.d_model, rng)
        self.time = TimeEmbedding(hp.d_model, rng, self.time_kind is TimeKind.CALENDAR)
        self.blocks = [DecoderOnlyBlock(hp.d_model, hp.d_ff, hp.n_head, hp.dropout_rate, rng)
                       for _ in range(hp.n_markov)]
        self.projection = Linear(hp.d_model, n_states, rng)
        self._init_store()

    @property
    def placeholder(self):
        return self.n_states

    @property
    def class_weights(self):
        return class_weights_for_tail(self.n_states, self.tail_states, self.hp.tail_class_weight)

    def config(self):
        return dict(n_states=self.n_states, order=self.order, hp=self.hp.to_dict(),
                    tail_states=self.tail_states.tolist(), time_kind=self.time_kind.value,
                    year_range=self.year_range)

    @classmethod
    def from_config(cls, config):
        return cls(config['n_states'], HyperParams.from_dict(config['hp']), config['tail_states'],
                   TimeKind(config['time_kind']), config.get('year_range'))

    def _stamps_or_default(self, stamps, bsz):
        if stamps is None:
            assert self.time_kind is TimeKind.UNITLESS, 'Calendar stamps are required.'
            return np.zeros((bsz, self.order + 1))
        return np.asarray(stamps)

    def probabilities(self, history, stamps=None):
        """Tensor of next-state probabilities, shape (B, n_states)."""
        history = np.asarray(history, dtype=np.int64)
        if history.ndim != 2 or history.shape[1] != self.order:
            raise ShapeMismatch(f'History must have shape (B, {self.order}), got {history.shape}.')
        if history.size and (history.min() < 0 or history.max() >= self.n_states):
            raise UnknownState(f'History holds states outside [0, {self.n_states}).')
        bsz = len(history)
        stamps = self._stamps_or_default(stamps, bsz)
        if stamps.shape[:2] != (bsz, self.order + 1):
            raise ShapeMismatch(f'Stamps must cover {self.order + 1} positions, got {stamps.shape}.')
        tokens = np.concatenate([history, np.full((bsz, 1), self.placeholder)], axis=1)
        features = window_time_features(stamps, self.time_kind, self.year_range)
        z = add(self.embedding(tokens), self.time(self.order + 1, features))
        for block in self.blocks:
            z = block(z)
        return softmax(self.projection(z[:, -1, :]), axis=-1)

    def batch_loss(self, dataset, ind):
        probs = self.probabilities(dataset.history[ind], dataset.stamps[ind])
        return focal_loss(probs, dataset.target[ind], self.hp.focal_gamma, self.class_weights)

    def fit(self, states, stamps=None, max_steps=None, **kwargs):
        """Train on state sequences; the validation part is cut from every realization by time.

        Returns the loss history.
        """
        hp = self.hp
        if stamps is None:
            stamps = TimeStampVector.unitless(len(states))
        train, val = split_state_windows(states, stamps, self.order, hp.stategen_eta)
        if val is None:
            logger.warning('Validation part is too short for state windows, training without early stopping.')
        return BaseNet.fit(self, train, val, epochs=hp.max_epochs, batch_size=hp.batch_size,
                           learning_rate=hp.learning_rate, lr_drops=hp.lr_drops, patience=hp.patience,
                           max_steps=max_steps, **kwargs)

    def generate(self, init_states, stamps, n_steps, seed=None):
        """Sample ``n_steps`` states after ``init_states``.

        ``init_states`` is (p,) or (R, p); ``stamps`` covers the ``p + n_steps``
        positions (or is None for unitless time). Every realization draws
        from its own seeded stream.
        """
        init = np.asarray(init_states, dtype=np.int64)
        single = init.ndim == 1
        init = init[None] if single else init
        if init.shape[1] != self.order:
            raise ShapeMismatch(f'Initial states must have length {self.order}, got {init.shape[1]}.')
        n_real = len(init)
        if stamps is not None:
            stamps = np.asarray(stamps)
            if stamps.ndim == (1 if self.time_kind is TimeKind.UNITLESS else 2):
                stamps = np.broadcast_to(stamps, (n_real, *stamps.shape))
            if stamps.shape[1] < self.order + n_steps:
                raise ShapeMismatch(f'Stamps must cover {self.order + n_steps} positions.')
        rngs = [np.random.default_rng(s) for s in spawn_seeds(seed, n_real)]
        seq = np.concatenate([init, np.zeros((n_real, n_steps), dtype=np.int64)], axis=1)
        self.eval()
        with no_grad():
            for step in range(n_steps):
                window = slice(step, step + self.order)
                st = None if stamps is None else stamps[:, step:step + self.order + 1]
                probs = self.probabilities(seq[:, window], st).data
                cum = np.cumsum(probs, axis=1)
                u = np.array([r.random() for r in rngs])
                nxt = np.minimum((cum <= u[:, None] * cum[:, -1:]).sum(axis=1), self.n_states - 1)
                seq[:, self.order + step] = nxt
        out = [MarkovStateSequence(row[self.order:], self.n_states) for row in seq]
        return out[0] if single else out


def split_state_windows(states, stamps, order, eta):
    """Training and validation state windows, cut by time inside every realization."""
    slices = states.realization_slices()
    splitter = TrainValidationSplit(eta)
    parts = ([], [])
    for r_sl, subs in zip(slices, splitter.split([s.stop - s.start for s in slices])):
        for sub, bucket in zip(subs, parts):
            sl = slice(r_sl.start + sub.start, r_sl.start + sub.stop)
            if sl.stop - sl.start > order:
                bucket.append(build_state_windows(states[sl], stamps[sl], order))
    if len(parts[0]) == 0:
        raise NoWindows(f'No training sequence is longer than the order {order}.')
    train_val = []
    for bucket in parts:
        if len(bucket) == 0:
            train_val.append(None)
            continue
        train_val.append(StateWindowDataset(np.concatenate([d.history for d in bucket]),
                                            np.concatenate([d.stamps for d in bucket]),
                                            np.concatenate([d.target for d in bucket]),
                                            bucket[0].time_kind))
    return tuple(train_val)


def stategen_forward(model, history, stamps=None):
    """Next-state probability vector for one history of length ``p``."""
    model.eval()
    with no_grad():
        st = None if stamps is None else np.asarray(stamps)[None]
        return model.probabilities(np.asarray(history)[None], st).data[0]


def stategen_train(model, seqs, hp=None, stamps=None, max_steps=None):
    if hp is not None:
        model.hp = hp
    return model, model.fit(seqs, stamps, max_steps=max_steps)


def stategen_generate(model, init, stamps, n_steps, seed=None):
    return model.generate(init, stamps, n_steps, seed)


__all__ = ['StateGenerator', 'stategen_forward', 'stategen_train', 'stategen_generate', 'split_state_windows']
