from collections import namedtuple

import numpy as np

from .config import SplitMode
from .databases.series import TimeSeriesMatrix, MarkovStateSequence, concat_realizations, \
    concat_state_sequences
from .exceptions import DegenerateSplit, ShapeMismatch

DataSplit = namedtuple('DataSplit', ['series', 'states'])


class TrainValidationSplit:
    """Split realizations into a training and a validation part.

    ``SplitMode.BY_TIME`` cuts every realization at ``floor(eta * n_r)``,
    ``SplitMode.BY_REALIZATION`` keeps the first ``floor(eta * R)``
    realizations for training.
    """

    def __init__(self, eta=.8, mode=SplitMode.BY_TIME):
        assert 0 < eta < 1, f'eta must be in (0, 1), got {eta}'
        self.eta = eta
        self.mode = SplitMode(mode)

    def split(self, n_list):
        """Yield ``(train, validation)`` slice pairs for every realization.

        Parameters
        ----------
        n_list : list of int
            Length of each realization.
        """
        if self.mode is SplitMode.BY_TIME:
            for n in n_list:
                cut = int(np.floor(self.eta * n))
                yield slice(0, cut), slice(cut, n)
        else:
            n_train = int(np.floor(self.eta * len(n_list)))
            for i, n in enumerate(n_list):
                if i < n_train:
                    yield slice(0, n), slice(0, 0)
                else:
                    yield slice(0, 0), slice(0, n)


def _collect(parts, empty_msg):
    parts = [p for p in parts if p is not None]
    if len(parts) == 0:
        raise DegenerateSplit(empty_msg)
    return parts


def split_train_validation(series, eta, mode=SplitMode.BY_TIME, states=None):
    """Split a series (and its aligned states) into training and validation data.

    Returns
    -------
    (DataSplit, DataSplit)
        Training and validation parts. ``states`` fields are None when no
        states were given.
    """
    if states is not None and len(states) != series.n:
        raise ShapeMismatch(f'{len(states)} states for a series of length {series.n}.')
    real_slices = series.realization_slices()
    splitter = TrainValidationSplit(eta, mode)
    train_x, val_x, train_y, val_y = [], [], [], []
    for r_sl, (tr, va) in zip(real_slices, splitter.split([s.stop - s.start for s in real_slices])):
        for sub, xs, ys in ((tr, train_x, train_y), (va, val_x, val_y)):
            if sub.stop - sub.start <= 0:
                continue
            cols = slice(r_sl.start + sub.start, r_sl.start + sub.stop)
            xs.append(series.columns(cols))
            if states is not None:
                ys.append(MarkovStateSequence(states.states[cols], states.n_states))

    train_x = _collect(train_x, 'Training part of the split is empty.')
    val_x = _collect(val_x, 'Validation part of the split is empty.')
    result = []
    for xs, ys in ((train_x, train_y), (val_x, val_y)):
        merged: TimeSeriesMatrix = concat_realizations(xs)
        result.append(DataSplit(merged, concat_state_sequences(ys) if states is not None else None))
    return tuple(result)
