"""Core containers: time stamps, multivariate series and Markov state sequences."""
import numpy as np
import pandas as pd

from ..config import Space, TimeKind
from ..exceptions import ShapeMismatch, InvalidState, EmptySeries

CALENDAR_UNITS = ('year', 'month', 'day', 'hour')
# fixed ranges of the calendar units, the year range comes from the data
_UNIT_RANGES = dict(month=(1, 12), day=(1, 31), hour=(0, 23))


def _calendar_to_hours(values):
    frame = pd.DataFrame(values, columns=list(CALENDAR_UNITS))
    times = pd.to_datetime(frame)
    return times.values.astype('datetime64[h]').astype(np.int64)


def _hours_to_calendar(hours):
    times = pd.DatetimeIndex(np.asarray(hours, dtype='int64').astype('datetime64[h]'))
    return np.stack([times.year, times.month, times.day, times.hour], axis=1).astype(np.int64)


class TimeStampVector:
    """Strictly increasing, uniformly spaced time stamps.

    Unitless stamps are a 1d float array. Calendar stamps are an integer
    array with columns (year, month, day, hour) on an hourly grid.
    """

    def __init__(self, values, kind=TimeKind.UNITLESS, check=True):
        self.kind = TimeKind(kind)
        if self.kind is TimeKind.UNITLESS:
            values = np.asarray(values, dtype=np.float64).reshape(-1)
        else:
            values = np.asarray(values, dtype=np.int64).reshape(-1, len(CALENDAR_UNITS))
        values.setflags(write=False)
        self.values = values
        if check:
            self._check()

    def _check(self):
        if len(self) < 2:
            return
        diffs = np.diff(self._numeric())
        if np.any(diffs <= 0):
            raise ShapeMismatch('Time stamps must be strictly increasing.')
        if not np.allclose(diffs, diffs[0], rtol=1e-9, atol=0):
            raise ShapeMismatch('Time stamps must be uniformly spaced.')

    def _numeric(self):
        if self.kind is TimeKind.UNITLESS:
            return self.values
        return _calendar_to_hours(self.values)

    @classmethod
    def unitless(cls, n, dt=1., t0=0.):
        return cls(t0 + dt * np.arange(n), TimeKind.UNITLESS, check=False)

    @classmethod
    def hourly(cls, n, start=(2000, 1, 1, 0)):
        h0 = _calendar_to_hours(np.asarray([start]))[0]
        return cls(_hours_to_calendar(h0 + np.arange(n)), TimeKind.CALENDAR, check=False)

    @property
    def step(self):
        if len(self) < 2:
            return 1.
        num = self._numeric()
        return float(num[1] - num[0])

    def extend(self, n):
        """Stamps continuing the uniform grid for ``n`` more steps."""
        if n <= 0:
            return self[:0]
        num = self._numeric()
        last = num[-1] if len(num) else 0
        new = last + self.step * np.arange(1, n + 1)
        if self.kind is TimeKind.UNITLESS:
            return TimeStampVector(new, self.kind, check=False)
        return TimeStampVector(_hours_to_calendar(new.astype(np.int64)), self.kind, check=False)

    def concat(self, other):
        assert self.kind is other.kind, 'Can not concatenate different time kinds.'
        return TimeStampVector(np.concatenate([self.values, other.values]), self.kind)

    def calendar_features(self, year_range=None):
        """Standardize calendar units affinely to [-0.5, 0.5].

        Returns
        -------
        ndarray
            Shape (n, 4) with columns (year, month, day, hour).
        """
        assert self.kind is TimeKind.CALENDAR, 'Calendar features need calendar stamps.'
        vals = self.values.astype(np.float64)
        if year_range is None:
            year_range = (vals[:, 0].min(), vals[:, 0].max()) if len(vals) else (0, 0)
        ranges = [year_range] + [_UNIT_RANGES[u] for u in CALENDAR_UNITS[1:]]
        feats = np.zeros_like(vals)
        for j, (lo, hi) in enumerate(ranges):
            if hi > lo:
                feats[:, j] = (vals[:, j] - lo) / (hi - lo) - .5
        return feats

    @property
    def hours(self):
        assert self.kind is TimeKind.CALENDAR, 'Hour of day needs calendar stamps.'
        return self.values[:, 3]

    def __len__(self):
        return len(self.values)

    def __getitem__(self, item):
        assert isinstance(item, slice), 'Only slices are supported.'
        return TimeStampVector(self.values[item], self.kind, check=False)

    def __eq__(self, other):
        return isinstance(other, TimeStampVector) and self.kind is other.kind and \
            self.values.shape == other.values.shape and np.array_equal(self.values, other.values)

    def __repr__(self):
        return f'TimeStampVector(kind={self.kind.value}, n={len(self)})'


class TimeSeriesMatrix:
    """Immutable m x n matrix of a multivariate series with its space tag.

    Parameters
    ----------
    data : array_like
        Values with shape (m locations, n time steps).
    space : Space
        Physical or Gaussian space.
    stamps : TimeStampVector, optional
        Defaults to unitless stamps 0, 1, ..., n-1.
    boundaries : sequence of int, optional
        Start column of each realization when several realizations are
        stacked side by side. Windows never cross these boundaries.
    """

    def __init__(self, data, space=Space.PHYSICAL, stamps=None, boundaries=None):
        data = np.array(data, dtype=np.float64, copy=True)
        if data.ndim == 1:
            data = data[np.newaxis, :]
        if data.ndim != 2:
            raise ShapeMismatch(f'Series data must be 2d, got shape {data.shape}.')
        data.setflags(write=False)
        self.data = data
        self.space = Space(space)
        if stamps is None:
            stamps = TimeStampVector.unitless(data.shape[1])
        if len(stamps) != data.shape[1]:
            raise ShapeMismatch(f'{len(stamps)} stamps for {data.shape[1]} columns.')
        self.stamps = stamps
        if boundaries is None:
            boundaries = (0,)
        boundaries = tuple(int(b) for b in boundaries)
        if data.shape[1] > 0:
            assert boundaries[0] == 0 and all(b0 < b1 for b0, b1 in zip(boundaries, boundaries[1:])) \
                and boundaries[-1] < data.shape[1], f'Invalid realization boundaries {boundaries}.'
        self.boundaries = boundaries

    @property
    def m(self):
        return self.data.shape[0]

    @property
    def n(self):
        return self.data.shape[1]

    @property
    def n_realizations(self):
        return len(self.boundaries)

    def realization_slices(self):
        ends = list(self.boundaries[1:]) + [self.n]
        return [slice(b, e) for b, e in zip(self.boundaries, ends)]

    def realizations(self):
        return [TimeSeriesMatrix(self.data[:, s], self.space, self.stamps[s])
                for s in self.realization_slices()]

    def with_data(self, data, space=None):
        """Same stamps and boundaries, new values."""
        return TimeSeriesMatrix(data, self.space if space is None else space,
                                self.stamps, self.boundaries)

    def columns(self, item):
        """Plain column slice, realization bookkeeping is dropped."""
        return TimeSeriesMatrix(self.data[:, item], self.space, self.stamps[item])

    def check_not_empty(self):
        if self.n == 0:
            raise EmptySeries('Series has no time steps.')

    def __repr__(self):
        return f'TimeSeriesMatrix(m={self.m}, n={self.n}, space={self.space.value}, ' \
               f'realizations={self.n_realizations})'


class MarkovStateSequence:
    """Discrete states in ``[0, n_states)`` with optional realization boundaries."""

    def __init__(self, states, n_states, boundaries=None):
        states = np.array(states, dtype=np.int64, copy=True).reshape(-1)
        if n_states < 1:
            raise InvalidState(f'n_states must be positive, got {n_states}.')
        if len(states) and (states.min() < 0 or states.max() >= n_states):
            raise InvalidState(f'States must lie in [0, {n_states}).')
        states.setflags(write=False)
        self.states = states
        self.n_states = int(n_states)
        self.boundaries = (0,) if boundaries is None else tuple(int(b) for b in boundaries)

    def realization_slices(self):
        ends = list(self.boundaries[1:]) + [len(self)]
        return [slice(b, e) for b, e in zip(self.boundaries, ends)]

    def realizations(self):
        return [MarkovStateSequence(self.states[s], self.n_states) for s in self.realization_slices()]

    def __len__(self):
        return len(self.states)

    def __getitem__(self, item):
        assert isinstance(item, slice), 'Only slices are supported.'
        return MarkovStateSequence(self.states[item], self.n_states)

    def __repr__(self):
        return f'MarkovStateSequence(n={len(self)}, n_states={self.n_states})'


def concat_realizations(realizations):
    """Stack realizations side by side into one series with boundaries.

    Stamps are kept as they are, so they are uniform within each realization only.
    """
    assert len(realizations) > 0, 'No realizations to concatenate.'
    first = realizations[0]
    for r in realizations:
        if r.m != first.m:
            raise ShapeMismatch(f'Row counts differ: {r.m} != {first.m}.')
        if r.space is not first.space:
            raise ShapeMismatch('Realizations live in different spaces.')
    boundaries, offset = [], 0
    for r in realizations:
        for b in r.boundaries:
            boundaries.append(offset + b)
        offset += r.n
    data = np.concatenate([r.data for r in realizations], axis=1)
    stamps = TimeStampVector(np.concatenate([r.stamps.values for r in realizations]),
                             first.stamps.kind, check=False)
    return TimeSeriesMatrix(data, first.space, stamps, boundaries)


def concat_state_sequences(sequences):
    assert len(sequences) > 0, 'No sequences to concatenate.'
    n_states = sequences[0].n_states
    boundaries, offset = [], 0
    for s in sequences:
        assert s.n_states == n_states, 'State spaces differ.'
        boundaries.extend(offset + b for b in s.boundaries)
        offset += len(s)
    return MarkovStateSequence(np.concatenate([s.states for s in sequences]), n_states, boundaries)
