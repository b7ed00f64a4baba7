import unittest
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
import pandas as pd
from numpy.testing import assert_allclose, assert_array_equal

from ..config import Space
from ..databases.series import TimeSeriesMatrix, TimeStampVector
from ..databases.wind import wind_preprocess, wind_postprocess_inverse, monthly_blocks, PreprocessRecord, \
    hour_of_day_means, circular_moving_average, N_SIM_WIND
from ..exceptions import MisalignedStations, SeriesTooShort
from ..preprocess.io import read_wind_csv, write_wind_csv
from .utils import hourly_stamps

WINDOW = 48


class TestWindPreprocess(unittest.TestCase):

    def setUp(self):
        self.stamps = hourly_stamps(240, (2001, 3, 1, 0))
        self.rng = np.random.default_rng(0)

    def test_constant_record(self):
        raw = TimeSeriesMatrix(np.full((2, 240), 7.), stamps=self.stamps)
        series, record = wind_preprocess(raw, window=WINDOW)
        assert_allclose(series.data, 0., atol=1e-12)
        assert_allclose(record.hourly_means, 7.)

    def test_daily_cycle_removed(self):
        cycle = 3. + np.sin(2 * np.pi * np.arange(240) / 24)
        raw = TimeSeriesMatrix(np.stack([cycle, 2 * cycle]), stamps=self.stamps)
        series, _ = wind_preprocess(raw, window=WINDOW)
        self.assertLess(np.max(np.abs(series.data)), 1e-10)

    def test_inverse(self):
        raw = TimeSeriesMatrix(self.rng.gamma(2., size=(3, 240)), stamps=self.stamps)
        series, record = wind_preprocess(raw, station_ids=['a', 'b', 'c'], window=WINDOW)
        self.assertIs(series.space, Space.PHYSICAL)
        assert_allclose(wind_postprocess_inverse(series, record).data, raw.data, atol=1e-10)
        with TemporaryDirectory() as tmp:
            fn = Path(tmp).joinpath('record.json')
            record.save(fn)
            loaded = PreprocessRecord.load(fn)
        self.assertEqual(loaded.station_ids, ['a', 'b', 'c'])
        assert_allclose(loaded.moving_average, record.moving_average)
        self.assertEqual(loaded.stamps, record.stamps)

    def test_missing_values_are_zero_filled(self):
        data = self.rng.gamma(2., size=(2, 240))
        data[0, 17] = np.nan
        series, _ = wind_preprocess(TimeSeriesMatrix(data, stamps=self.stamps), window=WINDOW)
        self.assertTrue(np.all(np.isfinite(series.data)))
        filled = np.nan_to_num(data)
        assert_allclose(hour_of_day_means(filled, self.stamps.hours)[0, 17],
                        filled[0, 17::24].mean())

    def test_errors(self):
        with self.assertRaises(MisalignedStations):
            wind_preprocess(TimeSeriesMatrix(np.ones((1, 240))), window=WINDOW)
        with self.assertRaises(SeriesTooShort):
            wind_preprocess(TimeSeriesMatrix(np.ones((1, 24)), stamps=self.stamps[:24]), window=WINDOW)

    def test_moving_average_wraps(self):
        data = np.zeros((1, 10))
        data[0, 0] = 3.
        assert_allclose(circular_moving_average(data, 3)[0], [1., 1.] + [0.] * 7 + [1.])

    def test_even_window_alignment(self):
        data = np.zeros((1, 10))
        data[0, 5] = 4.
        expected = np.zeros(10)
        expected[4:8] = 1.
        assert_allclose(circular_moving_average(data, 4)[0], expected, atol=1e-12)

    def test_leap_day_climatology(self):
        stamps = hourly_stamps(72, (2001, 2, 27, 0))
        record = PreprocessRecord(np.zeros((1, 24)), np.arange(72.)[None], stamps)
        leap = TimeStampVector.hourly(24, (2004, 2, 29, 0))
        assert_allclose(record.trend_climatology(leap)[0], np.arange(24., 48.))


class TestMonthlyBlocks(unittest.TestCase):

    def test_blocks(self):
        stamps = hourly_stamps(60 * 24, (2001, 1, 1, 0))
        series = TimeSeriesMatrix(np.zeros((2, len(stamps))), stamps=stamps)
        blocks = monthly_blocks(series)
        self.assertEqual(len(blocks), 2)
        self.assertEqual(blocks[1].n, N_SIM_WIND)
        assert_array_equal(blocks[1].stamps.values[0], [2001, 2, 1, 0])
        with self.assertRaises(SeriesTooShort):
            monthly_blocks(series, n_sim=40 * 24)


class TestWindCsv(unittest.TestCase):

    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.path = Path(self.tmp.name)
        stamps = hourly_stamps(48, (2001, 5, 1, 0))
        self.series = TimeSeriesMatrix(np.random.default_rng(1).gamma(2., size=(2, 48)), stamps=stamps)

    def tearDown(self):
        self.tmp.cleanup()

    def test_round_trip(self):
        fn = self.path.joinpath('wind.csv')
        write_wind_csv(fn, self.series, ['north', 'south'])
        series, ids = read_wind_csv(fn)
        self.assertEqual(ids, ['north', 'south'])
        assert_allclose(series.data, self.series.data)
        self.assertEqual(series.stamps, self.series.stamps)

    def test_missing_hour(self):
        fn = self.path.joinpath('wind.csv')
        write_wind_csv(fn, self.series)
        df = pd.read_csv(fn)
        df = df.drop(index=df.index[(df['station_id'] == 0) & (df['hour'] == 5) & (df['day'] == 1)])
        df.to_csv(fn, index=False)
        series, _ = read_wind_csv(fn)
        self.assertEqual(series.n, 48)
        self.assertTrue(np.isnan(series.data[0, 5]))
        self.assertEqual(int(np.isnan(series.data).sum()), 1)

    def test_misaligned(self):
        fn = self.path.joinpath('wind.csv')
        write_wind_csv(fn, self.series)
        df = pd.read_csv(fn)
        pd.concat([df, df.iloc[:1]]).to_csv(fn, index=False)
        with self.assertRaises(MisalignedStations):
            read_wind_csv(fn)
        df[~((df['station_id'] == 1) & (df['day'] == 2))].to_csv(fn, index=False)
        with self.assertRaises(MisalignedStations):
            read_wind_csv(fn)


if __name__ == '__main__':
    unittest.main()
