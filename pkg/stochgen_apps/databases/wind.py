"""Preprocessing of hourly wind records."""
import logging

import numpy as np
from scipy.ndimage import uniform_filter1d

from .series import TimeSeriesMatrix, TimeStampVector
from ..config import Space, TimeKind
from ..exceptions import MisalignedStations, SeriesTooShort
from ..utils import save_to_json, load_from_json

logger = logging.getLogger(__name__)

MOVING_AVERAGE_WINDOW = 720
HOURS_PER_DAY = 24
N_SIM_WIND = 28 * HOURS_PER_DAY


class PreprocessRecord:
    """Components removed by :func:`wind_preprocess`.

    Attributes
    ----------
    hourly_means : ndarray, shape (m, 24)
    moving_average : ndarray, shape (m, n)
    stamps : TimeStampVector
    station_ids : list
    """

    def __init__(self, hourly_means, moving_average, stamps, station_ids=None):
        self.hourly_means = np.asarray(hourly_means, dtype=np.float64)
        self.moving_average = np.asarray(moving_average, dtype=np.float64)
        self.stamps = stamps
        self.station_ids = list(range(len(self.hourly_means))) if station_ids is None else list(station_ids)

    def trend_climatology(self, stamps):
        """Moving average averaged over years for each (month, day, hour) of ``stamps``."""
        keys = self.stamps.values[:, 1:]
        out = np.zeros((len(self.moving_average), len(stamps)))
        lookup = {}
        for j, key in enumerate(map(tuple, keys)):
            lookup.setdefault(key, []).append(j)
        for j, key in enumerate(map(tuple, stamps.values[:, 1:])):
            idx = lookup.get(key)
            if idx is None:
                # 29 February outside leap years of the record
                idx = lookup.get((key[0], key[1] - 1, key[2]), [])
            if idx:
                out[:, j] = self.moving_average[:, idx].mean(axis=1)
        return out

    def to_dict(self):
        return dict(hourly_means=self.hourly_means.tolist(), moving_average=self.moving_average.tolist(),
                    stamps=self.stamps.values.tolist(), station_ids=[str(s) for s in self.station_ids])

    @classmethod
    def from_dict(cls, d):
        return cls(d['hourly_means'], d['moving_average'],
                   TimeStampVector(d['stamps'], TimeKind.CALENDAR, check=False), d['station_ids'])

    def save(self, filename):
        save_to_json(filename, self.to_dict())

    @classmethod
    def load(cls, filename):
        return cls.from_dict(load_from_json(filename))


def hour_of_day_means(data, hours):
    """Mean of every hour of the day per row, shape (m, 24)."""
    means = np.zeros((data.shape[0], HOURS_PER_DAY))
    for h in range(HOURS_PER_DAY):
        mask = hours == h
        if mask.any():
            means[:, h] = data[:, mask].mean(axis=1)
    return means


def circular_moving_average(data, window=MOVING_AVERAGE_WINDOW):
    """Centered moving average along time with wrap-around padding.

    For an even ``window`` the average at step ``i`` covers steps
    ``i - window // 2`` to ``i + window // 2 - 1``, half a step before center.
    """
    return uniform_filter1d(data, size=window, axis=1, mode='wrap')


def wind_preprocess(raw, station_ids=None, window=MOVING_AVERAGE_WINDOW):
    """Zero-fill, remove the daily cycle and the slow trend.

    Parameters
    ----------
    raw : TimeSeriesMatrix
        Hourly physical-space record with calendar stamps, NaN for missing values.

    Returns
    -------
    series : TimeSeriesMatrix
        Detrended physical-space series.
    record : PreprocessRecord
    """
    if raw.stamps.kind is not TimeKind.CALENDAR:
        raise MisalignedStations('Wind records need calendar stamps.')
    if raw.n < window:
        raise SeriesTooShort(f'Record of {raw.n} hours is shorter than the moving-average window {window}.')
    data = np.nan_to_num(raw.data, nan=0.)
    n_missing = int(np.isnan(raw.data).sum())
    if n_missing:
        logger.info(f'{n_missing} missing wind speeds set to 0.')
    hours = raw.stamps.hours
    means = hour_of_day_means(data, hours)
    residual = data - means[:, hours]
    trend = circular_moving_average(residual, window)
    record = PreprocessRecord(means, trend, raw.stamps, station_ids)
    return TimeSeriesMatrix(residual - trend, Space.PHYSICAL, raw.stamps), record


def wind_postprocess_inverse(series, record):
    """Add back the daily cycle and the trend climatology for the stamps of ``series``."""
    hours = series.stamps.hours
    data = series.data + record.hourly_means[:, hours] + record.trend_climatology(series.stamps)
    return series.with_data(data, Space.PHYSICAL)


def monthly_blocks(series, n_sim=N_SIM_WIND):
    """Blocks of ``n_sim`` hours starting at the first hour of every month.

    Returns a list of TimeSeriesMatrix, months without ``n_sim`` hours left are skipped.
    """
    vals = series.stamps.values
    starts = np.flatnonzero((vals[:, 2] == 1) & (vals[:, 3] == 0))
    blocks = [series.columns(slice(s, s + n_sim)) for s in starts if s + n_sim <= series.n]
    if len(blocks) == 0:
        raise SeriesTooShort(f'No complete monthly block of {n_sim} hours.')
    return blocks
