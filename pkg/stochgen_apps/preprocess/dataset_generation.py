"""Sliding-window datasets for the seq2seq model and the state generator."""
import numpy as np

from ..config import TimeKind
from ..databases.series import TimeStampVector
from ..exceptions import SeriesTooShort, ShapeMismatch, NoWindows
from ..utils import window_data


def _window_stamps(stamps, length):
    if stamps.kind is TimeKind.UNITLESS:
        return window_data(stamps.values, length)
    # (n, 4) -> (n_windows, 4, length) -> (n_windows, length, 4)
    return np.swapaxes(window_data(stamps.values.T, length), 1, 2)


class WindowPair:
    """One training example, a view into a :class:`WindowDataset`.

    ``enc_x`` is m x q_enc_in, ``target_x`` is m x q_out.
    """

    __slots__ = ('enc_x', 'enc_y', 'enc_t', 'out_y', 'out_t', 'target_x')

    def __init__(self, enc_x, enc_y, enc_t, out_y, out_t, target_x):
        self.enc_x = enc_x
        self.enc_y = enc_y
        self.enc_t = enc_t
        self.out_y = out_y
        self.out_t = out_t
        self.target_x = target_x


class WindowDataset:
    """Batched window arrays.

    Attributes
    ----------
    enc_x : ndarray, shape (N, m, q_enc_in)
    enc_y : ndarray, shape (N, q_enc_in)
    enc_t : ndarray, shape (N, q_enc_in) or (N, q_enc_in, 4) for calendar stamps
    out_y : ndarray, shape (N, q_out)
    out_t : ndarray, shape (N, q_out) or (N, q_out, 4)
    target_x : ndarray, shape (N, m, q_out)
    """

    def __init__(self, enc_x, enc_y, enc_t, out_y, out_t, target_x, time_kind=TimeKind.UNITLESS):
        self.enc_x = enc_x
        self.enc_y = enc_y
        self.enc_t = enc_t
        self.out_y = out_y
        self.out_t = out_t
        self.target_x = target_x
        self.time_kind = time_kind

    def __len__(self):
        return len(self.enc_x)

    def __getitem__(self, i):
        return WindowPair(self.enc_x[i], self.enc_y[i], self.enc_t[i],
                          self.out_y[i], self.out_t[i], self.target_x[i])

    def subset(self, ind):
        return WindowDataset(self.enc_x[ind], self.enc_y[ind], self.enc_t[ind],
                             self.out_y[ind], self.out_t[ind], self.target_x[ind], self.time_kind)

    def batches(self, batch_size, shuffle=False, rng=None):
        yield from _batch_indices(len(self), batch_size, shuffle, rng)


class StateWindowDataset:
    """History of ``p`` states, the stamps of the ``p + 1`` positions and the next state."""

    def __init__(self, history, stamps, target, time_kind=TimeKind.UNITLESS):
        self.history = history
        self.stamps = stamps
        self.target = target
        self.time_kind = time_kind

    def __len__(self):
        return len(self.target)

    def subset(self, ind):
        return StateWindowDataset(self.history[ind], self.stamps[ind], self.target[ind], self.time_kind)

    def batches(self, batch_size, shuffle=False, rng=None):
        yield from _batch_indices(len(self), batch_size, shuffle, rng)


def _batch_indices(n, batch_size, shuffle, rng):
    if n == 0:
        raise NoWindows('Dataset holds no windows.')
    ind = np.arange(n)
    if shuffle:
        rng = np.random.default_rng(rng)
        rng.shuffle(ind)
    for start in range(0, n, batch_size):
        yield ind[start:start + batch_size]


def build_window_dataset(series, states, q_enc_in, q_out):
    """Cut aligned sliding windows of length ``q_enc_in + q_out`` with stride 1.

    Windows never cross realization boundaries, so a realization of length
    ``n_r`` gives ``n_r - q_enc_in - q_out + 1`` windows.

    Parameters
    ----------
    series : TimeSeriesMatrix
    states : MarkovStateSequence
        Aligned state labels, same length and boundaries as ``series``.
    q_enc_in : int
    q_out : int

    Returns
    -------
    WindowDataset
    """
    if len(states) != series.n:
        raise ShapeMismatch(f'{len(states)} states for a series of length {series.n}.')
    length = q_enc_in + q_out
    parts = []
    for sl in series.realization_slices():
        if sl.stop - sl.start < length:
            continue
        x = window_data(series.data[:, sl], length)
        y = window_data(states.states[sl], length)
        t = _window_stamps(series.stamps[sl], length)
        parts.append((x, y, t))
    if len(parts) == 0:
        raise SeriesTooShort(f'No realization is at least {length} steps long.')
    x, y, t = (np.concatenate(p, axis=0) for p in zip(*parts))
    return WindowDataset(enc_x=x[:, :, :q_enc_in], enc_y=y[:, :q_enc_in], enc_t=t[:, :q_enc_in],
                         out_y=y[:, q_enc_in:], out_t=t[:, q_enc_in:], target_x=x[:, :, q_enc_in:],
                         time_kind=series.stamps.kind)


def build_windows(series, states, hp):
    """List of :class:`WindowPair` for the given hyper-parameters."""
    return list(build_window_dataset(series, states, hp.q_enc_in, hp.q_out))


def build_state_windows(states, stamps, order):
    """Windows of ``order`` past states and the state that follows them.

    Parameters
    ----------
    states : MarkovStateSequence
    stamps : TimeStampVector
        Stamps aligned with ``states``.
    order : int

    Returns
    -------
    StateWindowDataset
    """
    if len(stamps) != len(states):
        raise ShapeMismatch(f'{len(stamps)} stamps for {len(states)} states.')
    length = order + 1
    parts = []
    for sl in states.realization_slices():
        if sl.stop - sl.start < length:
            continue
        y = window_data(states.states[sl], length)
        t = _window_stamps(stamps[sl], length)
        parts.append((y, t))
    if len(parts) == 0:
        raise SeriesTooShort(f'No state sequence is at least {length} steps long.')
    y, t = (np.concatenate(p, axis=0) for p in zip(*parts))
    return StateWindowDataset(history=y[:, :order], stamps=t, target=y[:, order], time_kind=stamps.kind)


def window_time_features(stamps, time_kind, year_range=None):
    """Calendar features of stamp windows, shape (..., q, 4), or None for unitless stamps."""
    if time_kind is TimeKind.UNITLESS:
        return None
    stamps = np.asarray(stamps)
    flat = TimeStampVector(stamps.reshape(-1, 4), TimeKind.CALENDAR, check=False)
    return flat.calendar_features(year_range).reshape(*stamps.shape[:-1], 4)
