import os

import numpy as np

from ..config import HyperParams, Space
from ..databases.series import TimeSeriesMatrix, TimeStampVector, MarkovStateSequence, concat_realizations

LONG_TESTS = os.environ.get('STOCHGEN_LONG_TESTS', '0') == '1'


def tiny_hp(**kwargs):
    """Small network sizes for fast gradient and overfit tests."""
    pars = dict(q_enc_in=6, q_dec_in=3, q_out=3, n_tail=2, n_bulk=4, n_restarts=2,
                d_model=8, d_ff=16, n_head=2, n_enc=1, n_dec=1, n_markov=1, markov_order=2,
                dropout_rate=0., learning_rate=5e-3, lr_drops={}, max_epochs=3, batch_size=16,
                patience=3, seed=0)
    pars.update(kwargs)
    return HyperParams(**pars)


def random_series(m=2, n=50, n_real=1, space=Space.GAUSSIAN, seed=0):
    rng = np.random.default_rng(seed)
    reals = [TimeSeriesMatrix(rng.standard_normal((m, n)), space) for _ in range(n_real)]
    return reals[0] if n_real == 1 else concat_realizations(reals)


def cyclic_states(n, n_states, boundaries=None):
    return MarkovStateSequence(np.arange(n) % n_states, n_states, boundaries)


def hourly_stamps(n, start=(2001, 1, 1, 0)):
    return TimeStampVector.hourly(n, start)
