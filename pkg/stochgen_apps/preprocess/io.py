"""CSV input and output of realizations and wind records."""
from pathlib import Path

import numpy as np
import pandas as pd

from ..config import Space, TimeKind
from ..databases.series import TimeSeriesMatrix, TimeStampVector, MarkovStateSequence, CALENDAR_UNITS
from ..exceptions import MisalignedStations, ShapeMismatch
from ..utils import atomic_write

STATE_COL = 'state'
WIND_COLUMNS = ['station_id', *CALENDAR_UNITS, 'wind_speed']


def value_columns(m):
    return [f'x{i + 1}' for i in range(m)]


def series_to_frame(series, states=None):
    if series.stamps.kind is TimeKind.UNITLESS:
        df = pd.DataFrame({'t': series.stamps.values})
    else:
        df = pd.DataFrame(series.stamps.values, columns=list(CALENDAR_UNITS))
    for col, row in zip(value_columns(series.m), series.data):
        df[col] = row
    if states is not None:
        if len(states) != series.n:
            raise ShapeMismatch(f'{len(states)} states for {series.n} columns.')
        df[STATE_COL] = states.states
    return df


def frame_to_series(df, space=Space.PHYSICAL, n_states=None):
    """Inverse of :func:`series_to_frame`; returns ``(series, states or None)``."""
    if 't' in df.columns:
        stamps = TimeStampVector(df['t'].to_numpy(), TimeKind.UNITLESS)
    elif all(u in df.columns for u in CALENDAR_UNITS):
        stamps = TimeStampVector(df[list(CALENDAR_UNITS)].to_numpy(), TimeKind.CALENDAR)
    else:
        raise ShapeMismatch(f'No time columns found in {list(df.columns)}.')
    x_cols = [c for c in df.columns if c.startswith('x') and c[1:].isdigit()]
    x_cols.sort(key=lambda c: int(c[1:]))
    series = TimeSeriesMatrix(df[x_cols].to_numpy().T, space, stamps)
    states = None
    if STATE_COL in df.columns:
        y = df[STATE_COL].to_numpy()
        states = MarkovStateSequence(y, n_states if n_states is not None else int(y.max()) + 1)
    return series, states


def write_realization_csv(filename, series, states=None):
    df = series_to_frame(series, states)
    atomic_write(filename, lambda f: df.to_csv(f, index=False, float_format='%.17g'))


def read_realization_csv(filename, space=Space.PHYSICAL, n_states=None):
    return frame_to_series(pd.read_csv(filename), space, n_states)


def save_realizations(folder, realizations, prefix='realization', states=None):
    """One CSV per realization, ``<prefix>_<index>.csv``."""
    folder = Path(folder)
    files = []
    for i, real in enumerate(realizations):
        fn = folder.joinpath(f'{prefix}_{i:05d}.csv')
        write_realization_csv(fn, real, None if states is None else states[i])
        files.append(fn)
    return files


def load_realizations(folder, prefix='realization', space=Space.PHYSICAL, n_states=None):
    files = sorted(Path(folder).glob(f'{prefix}_*.csv'))
    assert len(files) > 0, f'No {prefix}_*.csv files in {folder}.'
    loaded = [read_realization_csv(fn, space, n_states) for fn in files]
    return [s for s, _ in loaded], [y for _, y in loaded]


def read_wind_csv(filename):
    """Read a long-format hourly wind record.

    Columns: ``station_id, year, month, day, hour, wind_speed``. Missing hours
    become NaN on a complete hourly grid.

    Returns
    -------
    series : TimeSeriesMatrix
        Physical space, one row per station in sorted station order.
    station_ids : list
    """
    df = pd.read_csv(filename)
    missing = [c for c in WIND_COLUMNS if c not in df.columns]
    assert len(missing) == 0, f'Wind CSV misses columns {missing}.'
    df['time'] = pd.to_datetime(df[list(CALENDAR_UNITS)])
    if df.duplicated(['station_id', 'time']).any():
        raise MisalignedStations('Duplicated time stamps within a station.')
    if (df['time'].dt.minute != 0).any():
        raise MisalignedStations('Stamps are not on the hourly grid.')
    spans = df.groupby('station_id')['time'].agg(['min', 'max'])
    if spans['min'].nunique() != 1 or spans['max'].nunique() != 1:
        raise MisalignedStations('Stations cover different periods.')

    table = df.pivot(index='time', columns='station_id', values='wind_speed')
    grid = pd.date_range(table.index.min(), table.index.max(), freq='h')
    table = table.reindex(grid)
    stamps = np.stack([grid.year, grid.month, grid.day, grid.hour], axis=1)
    series = TimeSeriesMatrix(table.to_numpy().T, Space.PHYSICAL,
                              TimeStampVector(stamps, TimeKind.CALENDAR, check=False))
    return series, list(table.columns)


def write_wind_csv(filename, series, station_ids=None):
    if station_ids is None:
        station_ids = list(range(series.m))
    frames = []
    for sid, row in zip(station_ids, series.data):
        df = pd.DataFrame(series.stamps.values, columns=list(CALENDAR_UNITS))
        df.insert(0, 'station_id', sid)
        df['wind_speed'] = row
        frames.append(df)
    df = pd.concat(frames, ignore_index=True)
    atomic_write(filename, lambda f: df.to_csv(f, index=False, float_format='%.17g'))
