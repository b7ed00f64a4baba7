"""Count-based Markov chains on the discrete state space."""
import logging
from collections import namedtuple

import numpy as np
from scipy import linalg

from ..config import Criterion
from ..databases.series import MarkovStateSequence
from ..exceptions import NoTransitions, StateSpaceTooLarge, InvalidState

logger = logging.getLogger(__name__)

MAX_COUNT_CELLS = 10 ** 7

OrderSelection = namedtuple('OrderSelection', ['order', 'scores', 'log_likelihoods', 'n_params'])


def _as_sequences(seqs):
    if isinstance(seqs, MarkovStateSequence):
        return seqs.realizations()
    out = []
    for s in seqs:
        out.extend(s.realizations() if isinstance(s, MarkovStateSequence) else [s])
    return out


def state_frequencies(seqs, n_states=None):
    """Relative frequency of every state over all sequences."""
    seqs = _as_sequences(seqs)
    if n_states is None:
        n_states = seqs[0].n_states
    counts = np.zeros(n_states)
    for s in seqs:
        counts += np.bincount(s.states, minlength=n_states)
    total = counts.sum()
    return counts / total if total > 0 else counts


class TransitionMatrix:
    """Row-stochastic first-order transition matrix.

    Rows of states that were never left fall back to the empirical state
    frequencies.
    """

    def __init__(self, probs, counts=None, fallback=None):
        self.probs = np.asarray(probs, dtype=np.float64)
        self.counts = None if counts is None else np.asarray(counts)
        self.fallback = None if fallback is None else np.asarray(fallback, dtype=np.float64)
        assert np.allclose(self.probs.sum(axis=1), 1., atol=1e-12), 'Rows must sum to one.'
        self._cum = np.cumsum(self.probs, axis=1)
        self._cum[:, -1] = 1.

    @property
    def n_states(self):
        return len(self.probs)

    def stationary_distribution(self):
        """Left eigenvector of eigenvalue 1, normalized to a distribution."""
        w, v = linalg.eig(self.probs.T)
        vec = np.abs(np.real(v[:, np.argmin(np.abs(w - 1.))]))
        return vec / vec.sum()

    def to_dict(self):
        return dict(probs=self.probs.tolist(),
                    counts=None if self.counts is None else self.counts.tolist(),
                    fallback=None if self.fallback is None else self.fallback.tolist())

    @classmethod
    def from_dict(cls, d):
        return cls(d['probs'], d.get('counts'), d.get('fallback'))


def estimate_transition_matrix(seqs, n_states=None):
    """Maximum likelihood transition matrix from transition counts."""
    seqs = _as_sequences(seqs)
    if n_states is None:
        n_states = seqs[0].n_states
    counts = np.zeros((n_states, n_states), dtype=np.int64)
    n_trans = 0
    for s in seqs:
        y = s.states
        if len(y) < 2:
            continue
        np.add.at(counts, (y[:-1], y[1:]), 1)
        n_trans += len(y) - 1
    if n_trans == 0:
        raise NoTransitions('No sequence has at least two states.')
    freq = state_frequencies(seqs, n_states)
    row_sums = counts.sum(axis=1, keepdims=True)
    with np.errstate(invalid='ignore', divide='ignore'):
        probs = np.where(row_sums > 0, counts / np.maximum(row_sums, 1), freq[None, :])
    n_fallback = int((row_sums[:, 0] == 0).sum())
    if n_fallback:
        logger.warning(f'{n_fallback} states were never left, their rows use the state frequencies.')
    return TransitionMatrix(probs, counts, freq)


def _history_codes(y, order, n_states, start):
    """Integer code of the ``order`` states before every position from ``start`` on."""
    codes = np.zeros(len(y) - start, dtype=np.int64)
    for lag in range(order, 0, -1):
        codes = codes * n_states + y[start - lag:len(y) - lag]
    return codes


def _order_log_likelihood(seqs, order, n_states, start):
    hist, nxt = [], []
    for s in seqs:
        y = s.states
        if len(y) <= start:
            continue
        hist.append(_history_codes(y, order, n_states, start))
        nxt.append(y[start:])
    hist = np.concatenate(hist)
    nxt = np.concatenate(nxt)
    pair = hist * n_states + nxt
    uniq_pair, pair_inv, pair_counts = np.unique(pair, return_inverse=True, return_counts=True)
    _, hist_inv, hist_counts = np.unique(hist, return_inverse=True, return_counts=True)
    # every pair belongs to one history
    pair_hist_counts = np.zeros(len(uniq_pair))
    pair_hist_counts[pair_inv] = hist_counts[hist_inv]
    return float(np.sum(pair_counts * np.log(pair_counts / pair_hist_counts))), len(pair)


def select_order(seqs, p_max, criterion=Criterion.BIC, n_states=None):
    """Choose the chain order in ``1 .. p_max`` by AIC or BIC.

    All orders are scored on the same transitions (those after the first
    ``p_max`` states of every sequence). An order ``p`` chain has
    ``n**p * (n - 1)`` free parameters.
    """
    seqs = _as_sequences(seqs)
    criterion = Criterion(criterion)
    if n_states is None:
        n_states = seqs[0].n_states
    assert p_max >= 1, f'p_max must be >= 1, got {p_max}'
    if float(n_states) ** (p_max + 1) > MAX_COUNT_CELLS:
        raise StateSpaceTooLarge(f'{n_states}^{p_max + 1} count cells exceed {MAX_COUNT_CELLS}; '
                                 f'use the deep state generator for long memories.')
    if not any(len(s) > p_max for s in seqs):
        raise NoTransitions(f'No sequence is longer than p_max={p_max}.')

    scores, lls, ks = {}, {}, {}
    for p in range(1, p_max + 1):
        ll, n_obs = _order_log_likelihood(seqs, p, n_states, p_max)
        k = n_states ** p * (n_states - 1)
        penalty = 2 * k if criterion is Criterion.AIC else k * np.log(n_obs)
        scores[p] = -2 * ll + penalty
        lls[p] = ll
        ks[p] = k
    order = min(scores, key=lambda p: (scores[p], p))
    logger.info(f'Selected Markov order {order} by {criterion.name}.')
    return OrderSelection(order, scores, lls, ks)


def transition_log_likelihood(tm, seqs):
    """Log-likelihood of the observed first-order transitions under ``tm``."""
    total = 0.
    for s in _as_sequences(seqs):
        y = s.states
        if len(y) < 2:
            continue
        with np.errstate(divide='ignore'):
            total += float(np.sum(np.log(tm.probs[y[:-1], y[1:]])))
    return total


def simulate_chain(tm, init_state, n_steps, seed=None):
    """Sample ``n_steps`` states following ``init_state`` (which is not included)."""
    if not 0 <= init_state < tm.n_states:
        raise InvalidState(f'Initial state {init_state} is outside [0, {tm.n_states}).')
    if n_steps < 0:
        raise InvalidState(f'n_steps must be non-negative, got {n_steps}.')
    rng = np.random.default_rng(seed)
    u = rng.random(n_steps)
    out = np.empty(n_steps, dtype=np.int64)
    state = int(init_state)
    cum = tm._cum
    for i in range(n_steps):
        state = int(np.searchsorted(cum[state], u[i], side='right'))
        out[i] = state
    return MarkovStateSequence(out, tm.n_states)
