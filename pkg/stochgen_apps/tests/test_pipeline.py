import io
import unittest
from contextlib import redirect_stdout
from pathlib import Path
from tempfile import TemporaryDirectory

import numpy as np
import pandas as pd
from numpy.testing import assert_allclose, assert_array_equal

from ..__main__ import main
from ..ai.generator import StateGeneratorType
from ..config import ExperimentKind, SplitMode
from ..databases.series import TimeSeriesMatrix
from ..handlers.hdf5 import RealizationStore
from ..offline_analyses import PipelineConfig, Workspace, run_pipeline, run_stage, summarize_report, STAGES
from ..preprocess.io import write_wind_csv
from ..profiles import get_profile, PROFILES
from ..utils import load_from_json
from ..validations import validate_generator_order_pair, validate_experiment_split_pair
from .utils import LONG_TESTS, hourly_stamps


def _dry_config(out_dir, **kwargs):
    flat = get_profile('dry_run')
    flat.update(out_dir=str(out_dir), profile='dry_run', **kwargs)
    return PipelineConfig.from_flat_dict(flat)


def _final_data(out_dir):
    store = RealizationStore(Path(out_dir).joinpath('synthetic', 'final.h5'))
    data = store.get_data()
    store.close()
    return data


class TestPipelineConfig(unittest.TestCase):

    def test_profiles(self):
        for name in PROFILES:
            with self.subTest(name):
                config = PipelineConfig.from_flat_dict(get_profile(name))
                self.assertIs(config.experiment, ExperimentKind.SDE_BENCH)
                self.assertGreater(config.n_sim, config.hp.q_max)
        with self.assertRaises(AssertionError):
            get_profile('huge')

    def test_flat_keys(self):
        config = PipelineConfig.from_flat_dict(dict(get_profile('dry_run'), seed=7, sde_theta=20., n_head=4,
                                                    d_model=8))
        self.assertEqual((config.seed, config.hp.seed), (7, 7))
        self.assertEqual(config.sde.theta, 20.)
        self.assertEqual(config.hp.n_head, 4)
        self.assertEqual(config.n_sim, 32)
        self.assertIs(config.generator_type, StateGeneratorType.DEEP)
        self.assertIs(config.split_mode, SplitMode.BY_REALIZATION)
        with self.assertRaises(KeyError):
            PipelineConfig.from_flat_dict(dict(no_such_key=1))

    def test_derived_defaults(self):
        config = PipelineConfig.from_flat_dict(dict(get_profile('dry_run'), markov_order=1, n_sim=None))
        self.assertIs(config.generator_type, StateGeneratorType.MARKOV_CHAIN)
        self.assertEqual(config.n_sim, 64)
        wind = PipelineConfig.from_flat_dict(dict(experiment='wind_csv', split_mode='by_realization'))
        self.assertIs(wind.split_mode, SplitMode.BY_TIME)
        self.assertEqual(wind.n_sim, 672)
        self.assertIsNone(wind.exceed_grid)

    def test_dict_round_trip(self):
        config = _dry_config('somewhere', generator_type='DEEP', init_mode='random')
        again = PipelineConfig.from_dict(config.to_dict())
        self.assertEqual(again.to_dict(), config.to_dict())

    def test_invalid(self):
        with self.assertRaises(ValueError):
            PipelineConfig.from_flat_dict(dict(get_profile('dry_run'), generator_type='MARKOV_CHAIN'))
        with self.assertRaises(AssertionError):
            PipelineConfig.from_flat_dict(dict(get_profile('dry_run'), n_sim=8))
        with self.assertRaises(AssertionError):
            PipelineConfig.from_flat_dict(dict(get_profile('dry_run'), init_mode='last'))
        with self.assertRaises(ValueError):
            PipelineConfig.from_flat_dict(dict(get_profile('dry_run'), sde_n_realizations=1))
        single = PipelineConfig.from_flat_dict(dict(get_profile('dry_run'), sde_n_realizations=1,
                                                    split_mode='by_time'))
        self.assertIs(single.split_mode, SplitMode.BY_TIME)


class TestValidations(unittest.TestCase):

    def test_generator_order(self):
        self.assertEqual(validate_generator_order_pair(StateGeneratorType.MARKOV_CHAIN, 1),
                         (StateGeneratorType.MARKOV_CHAIN, 1))
        with self.assertRaises(ValueError):
            validate_generator_order_pair(StateGeneratorType.MARKOV_CHAIN, 3)
        with self.assertRaises(ValueError):
            validate_generator_order_pair(StateGeneratorType.DEEP, 0)

    def test_experiment_split(self):
        self.assertEqual(validate_experiment_split_pair(ExperimentKind.WIND_CSV, SplitMode.BY_REALIZATION),
                         (ExperimentKind.WIND_CSV, SplitMode.BY_TIME))
        self.assertEqual(validate_experiment_split_pair(ExperimentKind.SDE_BENCH, SplitMode.BY_REALIZATION, 10),
                         (ExperimentKind.SDE_BENCH, SplitMode.BY_REALIZATION))
        with self.assertRaises(ValueError):
            validate_experiment_split_pair(ExperimentKind.SDE_BENCH, SplitMode.BY_REALIZATION, 1)


class TestSdePipeline(unittest.TestCase):
    """Tiny end-to-end run of the benchmark experiment."""

    @classmethod
    def setUpClass(cls):
        cls._tmp = TemporaryDirectory()
        cls.out = Path(cls._tmp.name).joinpath('run_a')
        cls.report = run_pipeline(_dry_config(cls.out))

    @classmethod
    def tearDownClass(cls):
        cls._tmp.cleanup()

    def test_artifacts(self):
        ws = Workspace(self.out)
        for parts in (('config.json',), ('marginals.json',), ('sde_oracles.json',),
                      ('states', 'cluster_model.json'), ('stategen', 'manifest.json'),
                      ('seq2seq', 'manifest.json'), ('seq2seq', 'history.json'),
                      ('synthetic', 'deep.h5'), ('synthetic', 'stamps.npy'),
                      ('baseline', 'translation.h5'), ('report', 'summary.csv'), ('report', 'report.json'),
                      ('report', 'exceedance.csv'), ('report', 'losses.csv')):
            with self.subTest(parts):
                self.assertTrue(ws.path(*parts).exists())
        for stage in ('sde-gen', 'fit-states', 'train-stategen', 'train-seq2seq', 'simulate', 'baseline',
                      'evaluate'):
            manifest = load_from_json(ws.path('manifests', f'{stage}.json'))
            self.assertEqual(manifest['seed'], 0)
            self.assertIn('numpy', manifest['versions'])
        self.assertEqual(ws.load_config().to_dict(), _dry_config(self.out).to_dict())

    def test_report(self):
        report = self.report
        self.assertEqual(report['n_synthetic_realizations'], 20)
        self.assertEqual(report['n_synthetic_columns'], 20 * 32)
        errors = report['correlation']['rel_errors']
        self.assertLess(errors['corrected'], 1e-8)
        self.assertLess(errors['final_gaussian'], .25)
        self.assertIn('target_vs_analytic', errors)
        self.assertEqual(len(report['ks_pvalues_final_gaussian']), 2)
        self.assertEqual(set(report['return_period_l1_errors']), {'synthetic', 'translation'})
        self.assertEqual(report['n_metric_samples']['synthetic'], 20 * 32)
        self.assertEqual(np.shape(report['autocorrelation']['analytic']), (2, 11))
        summary = pd.read_csv(Path(self.out).joinpath('report', 'summary.csv'), sep=';')
        self.assertIn('corr_rel_error_corrected', summary['metric'].tolist())
        self.assertEqual(summary['profile'].unique().tolist(), ['dry_run'])

    def test_synthetic_store(self):
        ws = Workspace(self.out)
        store = RealizationStore(ws.path('synthetic', 'deep.h5'))
        self.assertEqual(store.get_data().shape, (20, 2, 32))
        states = store.get_states()
        self.assertEqual(states.shape, (20, 32))
        self.assertLess(states.max(), int(store.get_meta('n_states')))
        store.close()
        final = _final_data(self.out)
        self.assertTrue(np.all(final > 0))

    def test_deterministic(self):
        out_b = Path(self._tmp.name).joinpath('run_b')
        report_b = run_pipeline(_dry_config(out_b))
        assert_array_equal(_final_data(out_b), _final_data(self.out))
        self.assertEqual(report_b['correlation'], self.report['correlation'])
        self.assertEqual(summarize_report(Workspace(out_b)).splitlines()[1:],
                         summarize_report(Workspace(self.out)).splitlines()[1:])


class TestCommandLine(unittest.TestCase):

    def setUp(self):
        self._tmp = TemporaryDirectory()
        self.out = self._tmp.name

    def tearDown(self):
        self._tmp.cleanup()

    def test_stage_by_stage(self):
        common = ['--profile', 'dry_run', '--out', self.out, '--seed', '3']
        for stage in STAGES:
            if stage in ('preprocess', 'report'):
                continue
            with self.subTest(stage):
                self.assertEqual(main([stage] + common), 0)
        buf = io.StringIO()
        with redirect_stdout(buf):
            self.assertEqual(main(['report'] + common), 0)
        self.assertIn('correlation error corrected', buf.getvalue())
        self.assertEqual(_final_data(self.out).shape, (20, 2, 32))
        self.assertEqual(load_from_json(Path(self.out).joinpath('report', 'report.json'))['seed'], 3)
        self.assertEqual(run_stage('report', _dry_config(self.out)), buf.getvalue().rstrip('\n'))

    def test_errors(self):
        self.assertEqual(main(['simulate', '--profile', 'dry_run', '--out', self.out]), 1)
        cfg = Path(self.out).joinpath('bad.json')
        cfg.write_text('{"no_such_key": 1}')
        self.assertEqual(main(['run', '--profile', 'dry_run', '--config', str(cfg), '--out', self.out]), 1)
        with self.assertRaises(SystemExit):
            main(['not-a-stage'])


@unittest.skipUnless(LONG_TESTS, 'Set STOCHGEN_LONG_TESTS=1 to run the wind experiment end to end.')
class TestWindPipeline(unittest.TestCase):

    def test_run(self):
        rng = np.random.default_rng(0)
        stamps = hourly_stamps(59 * 24, (2001, 1, 1, 0))
        hours = stamps.hours
        data = rng.gamma(2., size=(2, len(stamps))) * (1.5 + np.sin(2 * np.pi * hours / 24))
        with TemporaryDirectory() as tmp:
            fn = Path(tmp).joinpath('wind.csv')
            write_wind_csv(fn, TimeSeriesMatrix(data, stamps=stamps), ['s1', 's2'])
            flat = dict(get_profile('dry_run'), experiment='wind_csv', wind_csv=str(fn),
                        out_dir=str(Path(tmp).joinpath('out')), exceed_grid=None)
            config = PipelineConfig.from_flat_dict(flat)
            self.assertIs(config.split_mode, SplitMode.BY_TIME)
            report = run_pipeline(config)
            self.assertEqual(report['n_synthetic_realizations'], 2)
            self.assertLess(report['correlation']['rel_errors']['corrected'], 1e-8)
            self.assertTrue(Path(tmp).joinpath('out', 'wind_record.json').exists())
            assert_allclose(report['n_metric_samples']['target'], 2)


if __name__ == '__main__':
    unittest.main()
