"""End-to-end model construction, simulation and evaluation.

Every stage reads its inputs from and writes its outputs to a :class:`Workspace`
folder, so the stages can run one by one from the command line or all at
once with :func:`run_pipeline`.
"""
import logging
from pathlib import Path

import numpy as np
import pandas as pd

from . import __version__
from .ai.generator import StateGeneratorType, default_generator_type, init_state_generator, \
    load_state_generator
from .ai.seq2seq import MarkovTransformer, train as train_model, load_model, infer_autoregressive
from .baseline import fit_translation, simulate_translation
from .config import ExperimentKind, HyperParams, SplitMode, Space, TimeKind
from .databases.sde import SdeParams, SdeOracles, sde_realizations
from .databases.series import TimeSeriesMatrix, TimeStampVector, MarkovStateSequence, concat_realizations, \
    concat_state_sequences
from .databases.wind import wind_preprocess, wind_postprocess_inverse, monthly_blocks, PreprocessRecord, \
    N_SIM_WIND
from .exceptions import PipelineStageError, CovarianceTooLarge, StochGenError
from .handlers.hdf5 import RealizationStore
from .handlers.pandas_res import ResultHandler
from .metrics import frobenius_rel_error, autocorr_curve, density_l1_error, exceedance_curve, \
    exceedance_counts, return_period_l1_error, sde_metric_S, wind_metric_S, state_frequency_scatter, \
    ks_standard_gaussian
from .model_selection import split_train_validation
from .postprocess.correlation import spatial_correlation, correlation_correct
from .postprocess.reshuffle import reshuffle
from .preprocess.dataset_generation import build_window_dataset
from .preprocess.io import save_realizations, load_realizations, read_wind_csv
from .preprocess.marginals import MarginalSet, to_gaussian, from_gaussian
from .states.clustering import fit_state_space, TailRegionSpec, ClusterModel
from .utils import save_to_json, load_from_json, stage_seed, config_hash, spawn_seeds, atomic_write
from .validations import validate_generator_order_pair, validate_experiment_split_pair

logger = logging.getLogger(__name__)

STAGES = ('sde-gen', 'preprocess', 'fit-states', 'train-stategen', 'train-seq2seq', 'simulate', 'baseline',
          'evaluate', 'report')
SDE_KEY_PREFIX = 'sde_'


class PipelineConfig:
    """Settings of one experiment.

    Parameters
    ----------
    experiment : ExperimentKind
    hp : HyperParams
    sde : SdeParams
        Used by the SDE benchmark only.
    wind_csv : str
        Long-format hourly wind file, used by the wind experiment only.
    out_dir : str
    seed : int
        Master seed, every stage derives its own seed from it.
    n_sim : int
        Length of a synthetic realization, including the initial block.
    n_per_init : int
        Synthetic realizations started from each initial block.
    n_init : int, optional
        Number of initial blocks, all available blocks by default.
    init_mode : str
        ``'first'`` takes the first columns of a realization, ``'random'`` a random subsequence.
    """

    def __init__(self, experiment=ExperimentKind.SDE_BENCH, hp=None, sde=None, wind_csv=None, out_dir='out',
                 seed=0, n_sim=None, n_per_init=5, n_init=None, init_mode='first', baseline=True,
                 tau_max=50, split_mode=None, generator_type=None, exceed_grid=None, density_grid=None,
                 min_tail_samples=50, cholesky_transpose_variant=False, n_jobs=1, profile='desk'):
        self.experiment = ExperimentKind(experiment)
        self.hp = HyperParams() if hp is None else hp
        self.sde = SdeParams() if sde is None else sde
        self.wind_csv = wind_csv
        self.out_dir = str(out_dir)
        self.seed = int(seed)
        is_sde = self.experiment is ExperimentKind.SDE_BENCH
        self.n_sim = int(n_sim if n_sim is not None else (self.sde.n_steps if is_sde else N_SIM_WIND))
        self.n_per_init = int(n_per_init)
        self.n_init = None if n_init is None else int(n_init)
        assert init_mode in ('first', 'random'), f'Unknown init_mode {init_mode}'
        self.init_mode = init_mode
        self.baseline = bool(baseline)
        self.tau_max = int(tau_max)
        self.split_mode = SplitMode(split_mode) if split_mode is not None else \
            (SplitMode.BY_REALIZATION if is_sde else SplitMode.BY_TIME)
        self.generator_type = StateGeneratorType[generator_type] if isinstance(generator_type, str) \
            else (generator_type or default_generator_type(self.hp.markov_order))
        validate_generator_order_pair(self.generator_type, self.hp.markov_order)
        self.experiment, self.split_mode = validate_experiment_split_pair(
            self.experiment, self.split_mode, self.sde.n_realizations if is_sde else None)
        self.exceed_grid = tuple(exceed_grid) if exceed_grid is not None else ((0., 25., 251) if is_sde else None)
        self.density_grid = tuple(density_grid) if density_grid is not None else \
            ((0., 10., 201) if is_sde else None)
        self.min_tail_samples = int(min_tail_samples)
        self.cholesky_transpose_variant = bool(cholesky_transpose_variant)
        self.n_jobs = int(n_jobs)
        self.profile = profile
        assert self.n_sim > self.hp.q_max, f'n_sim={self.n_sim} must exceed q_max={self.hp.q_max}'

    def to_dict(self):
        d = dict(vars(self))
        d.update(experiment=self.experiment.value, hp=self.hp.to_dict(), sde=self.sde.to_dict(),
                 split_mode=self.split_mode.value, generator_type=self.generator_type.name,
                 exceed_grid=None if self.exceed_grid is None else list(self.exceed_grid),
                 density_grid=None if self.density_grid is None else list(self.density_grid))
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d['hp'] = HyperParams.from_dict(d['hp']) if isinstance(d.get('hp'), dict) else d.get('hp')
        d['sde'] = SdeParams.from_dict(d['sde']) if isinstance(d.get('sde'), dict) else d.get('sde')
        return cls(**d)

    @classmethod
    def from_flat_dict(cls, d, base=None):
        """Build from flat keys: HyperParams names, ``sde_``-prefixed SdeParams names and pipeline names."""
        base = cls() if base is None else base
        hp = base.hp.to_dict()
        sde = base.sde.to_dict()
        rest = {k: v for k, v in base.to_dict().items() if k not in ('hp', 'sde')}
        # derived defaults follow the experiment unless set explicitly
        for key in ('n_sim', 'split_mode', 'generator_type', 'exceed_grid', 'density_grid'):
            rest[key] = None
        for key, val in d.items():
            if key == 'seed':
                hp[key] = rest[key] = val
            elif key.startswith(SDE_KEY_PREFIX) and key[len(SDE_KEY_PREFIX):] in sde:
                sde[key[len(SDE_KEY_PREFIX):]] = val
            elif key in hp:
                hp[key] = val
            elif key in rest:
                rest[key] = val
            else:
                raise KeyError(f'Unknown config key {key!r}.')
        rest['hp'] = HyperParams.from_dict(hp)
        rest['sde'] = SdeParams.from_dict(sde)
        return cls(**rest)

    @property
    def is_sde(self):
        return self.experiment is ExperimentKind.SDE_BENCH


class Workspace:
    """Artifact layout of one experiment folder."""

    def __init__(self, out_dir):
        self.root = Path(out_dir)
        self.root.mkdir(parents=True, exist_ok=True)

    def path(self, *parts):
        return self.root.joinpath(*parts)

    def save_config(self, config):
        save_to_json(self.path('config.json'), config.to_dict())

    def load_config(self):
        return PipelineConfig.from_dict(load_from_json(self.path('config.json')))

    def save_observed(self, realizations, marginals, record=None):
        save_realizations(self.path('observed'), realizations)
        save_to_json(self.path('marginals.json'), marginals.to_dict())
        if record is not None:
            record.save(self.path('wind_record.json'))

    def load_observed(self):
        realizations, _ = load_realizations(self.path('observed'))
        marginals = MarginalSet.from_dict(load_from_json(self.path('marginals.json')))
        record = PreprocessRecord.load(self.path('wind_record.json')) \
            if self.path('wind_record.json').exists() else None
        return realizations, marginals, record

    def save_states(self, model, states):
        save_to_json(self.path('states', 'cluster_model.json'), model.to_dict())
        frame = pd.DataFrame(dict(state=states.states))
        frame.to_csv(self.path('states', 'observed_states.csv'), index=False)
        save_to_json(self.path('states', 'boundaries.json'), dict(boundaries=list(states.boundaries)))

    def load_states(self):
        model = ClusterModel.from_dict(load_from_json(self.path('states', 'cluster_model.json')))
        y = pd.read_csv(self.path('states', 'observed_states.csv'))['state'].to_numpy()
        bounds = load_from_json(self.path('states', 'boundaries.json'))['boundaries']
        return model, MarkovStateSequence(y, model.n_clusters, bounds)


def _version_info():
    import scipy
    import sklearn
    return dict(stochgen_apps=__version__, numpy=np.__version__, scipy=scipy.__version__,
                scikit_learn=sklearn.__version__, pandas=pd.__version__)


def write_manifest(ws, config, stage, extra=None):
    manifest = dict(stage=stage, config_hash=config_hash(config.to_dict()), seed=config.seed,
                    stage_seed=stage_seed(config.seed, stage), versions=_version_info())
    manifest.update(extra or {})
    save_to_json(ws.path('manifests', f'{stage}.json'), manifest)


# stages

def generate_sde_data(config, ws):
    """Simulate the observed benchmark realizations."""
    params = config.sde.replace(seed=stage_seed(config.seed, 'sde-gen'))
    realizations = sde_realizations(params)
    marginals = SdeOracles(params).v_marginals()
    ws.save_observed(realizations, marginals)
    save_to_json(ws.path('sde_oracles.json'), SdeOracles(params).to_dict(config.tau_max))
    write_manifest(ws, config, 'sde-gen', dict(n_realizations=len(realizations)))
    logger.info(f'Generated {len(realizations)} benchmark realizations of {params.n_steps} steps.')
    return realizations, marginals


def preprocess_wind_data(config, ws):
    """Read and detrend the wind record, fit empirical marginals."""
    assert config.wind_csv is not None, 'wind_csv must be defined for the wind experiment!'
    raw, station_ids = read_wind_csv(config.wind_csv)
    series, record = wind_preprocess(raw, station_ids)
    marginals = MarginalSet.fit_empirical(series)
    ws.save_observed([series], marginals, record)
    write_manifest(ws, config, 'preprocess', dict(n_stations=series.m, n_hours=series.n))
    return [series], marginals, record


def observed_gaussian(realizations, marginals):
    return to_gaussian(concat_realizations(realizations), marginals)


def fit_states_stage(config, ws, realizations, marginals):
    hp = config.hp
    gauss = observed_gaussian(realizations, marginals)
    model = fit_state_space(gauss, TailRegionSpec(hp.tail_level), hp.n_tail, hp.n_bulk, hp.n_restarts,
                            seed=stage_seed(config.seed, 'fit-states'), n_jobs=config.n_jobs)
    states = model.assign(gauss)
    ws.save_states(model, states)
    write_manifest(ws, config, 'fit-states', dict(n_clusters=model.n_clusters, inertia=model.inertia))
    return model, states


def _year_range(series):
    if series.stamps.kind is not TimeKind.CALENDAR:
        return None
    years = series.stamps.values[:, 0]
    return int(years.min()), int(years.max())


def train_stategen_stage(config, ws, cluster_model, states, stamps, year_range=None):
    generator = init_state_generator(config.generator_type, cluster_model.n_clusters, config.hp,
                                     tail_states=cluster_model.tail_states, time_kind=stamps.kind,
                                     year_range=year_range, seed=stage_seed(config.seed, 'train-stategen'))
    history = generator.fit(states, stamps)
    generator.save(ws.path('stategen'))
    save_to_json(ws.path('stategen', 'history.json'), history)
    write_manifest(ws, config, 'train-stategen', dict(generator=config.generator_type.name))
    return generator, history


def train_seq2seq_stage(config, ws, gauss, states, max_steps=None):
    hp = config.hp
    train, val = split_train_validation(gauss, hp.eta, config.split_mode, states)
    train_ds = build_window_dataset(train.series, train.states, hp.q_enc_in, hp.q_out)
    val_ds = build_window_dataset(val.series, val.states, hp.q_enc_in, hp.q_out)
    logger.info(f'{len(train_ds)} training and {len(val_ds)} validation windows.')
    model = MarkovTransformer(gauss.m, states.n_states, hp, gauss.stamps.kind, _year_range(gauss),
                              seed=stage_seed(config.seed, 'train-seq2seq'))
    model, history = train_model(model, train_ds, val_ds, hp, max_steps=max_steps)
    model.save(ws.path('seq2seq'))
    save_to_json(ws.path('seq2seq', 'history.json'), history)
    write_manifest(ws, config, 'train-seq2seq', dict(n_train=len(train_ds), n_val=len(val_ds),
                                                     n_params=model.store.n_params()))
    return model, history


def initial_blocks(config, gauss, states):
    """Observed blocks of ``q_max`` columns that start the synthetic realizations."""
    q_max = config.hp.q_max
    rng = np.random.default_rng(stage_seed(config.seed, 'init-blocks'))
    if config.is_sde:
        candidates = [(gauss.columns(sl), states.states[sl])
                      for sl in gauss.realization_slices() if sl.stop - sl.start >= q_max]
    else:
        starts = []
        vals = gauss.stamps.values
        for s in np.flatnonzero((vals[:, 2] == 1) & (vals[:, 3] == 0)):
            if s + config.n_sim <= gauss.n:
                starts.append(s)
        candidates = [(gauss.columns(slice(s, s + config.n_sim)), states.states[s:s + config.n_sim])
                      for s in starts]
    assert len(candidates) > 0, 'No observed block is long enough to initialize the simulation.'
    if config.n_init is not None:
        candidates = candidates[:config.n_init]
    blocks = []
    for series, y in candidates:
        start = 0 if config.init_mode == 'first' else int(rng.integers(0, series.n - q_max + 1))
        blocks.append((series.columns(slice(start, start + q_max)), y[start:start + q_max]))
    return blocks


def simulate_stage(config, ws, model, generator, gauss, states, marginals):
    """Generate synthetic realizations and post-process them.

    Returns
    -------
    dict
        ``deep``, ``corrected``, ``final_gaussian`` and ``final`` series plus the
        generated ``states``.
    """
    hp = config.hp
    q_max, p = hp.q_max, generator.order
    n_future = config.n_sim - q_max
    blocks = initial_blocks(config, gauss, states)
    blocks = [b for b in blocks for _ in range(config.n_per_init)]
    n_real = len(blocks)
    init_x = np.stack([s.data for s, _ in blocks])
    init_y = np.stack([y for _, y in blocks])
    init_t = np.stack([s.stamps.values for s, _ in blocks])
    future_t = np.stack([s.stamps.extend(n_future).values for s, _ in blocks])

    seed = stage_seed(config.seed, 'simulate')
    seed_states, seed_reshuffle = spawn_seeds(seed, 2)
    gen_stamps = np.concatenate([init_t[:, q_max - p:], future_t], axis=1)
    generated = generator.generate(init_y[:, q_max - p:], gen_stamps, n_future, seed_states)
    future_y = np.stack([g.states for g in generated])
    logger.info(f'Generated state sequences for {n_real} realizations.')

    q = hp.q_enc_in
    values = infer_autoregressive(model, init_x[:, :, q_max - q:], init_y[:, q_max - q:], init_t[:, q_max - q:],
                                  future_y, future_t)
    reals = []
    for r in range(n_real):
        stamps = blocks[r][0].stamps.values
        all_stamps = TimeStampVector(np.concatenate([stamps, future_t[r]]), gauss.stamps.kind, check=False)
        reals.append(TimeSeriesMatrix(np.concatenate([init_x[r], values[r]], axis=1), Space.GAUSSIAN, all_stamps))
    deep = concat_realizations(reals)
    syn_states = concat_state_sequences([MarkovStateSequence(np.concatenate([init_y[r], future_y[r]]),
                                                             states.n_states) for r in range(n_real)])

    c_target = spatial_correlation(gauss)
    corrected = correlation_correct(deep, c_target, config.cholesky_transpose_variant)
    final_gaussian = reshuffle(corrected, MarginalSet.standard_gaussian(gauss.m), seed_reshuffle, config.n_jobs)
    final = from_gaussian(final_gaussian, marginals)

    for name, series in (('deep', deep), ('corrected', corrected), ('final_gaussian', final_gaussian),
                         ('final', final)):
        store = RealizationStore(ws.path('synthetic', f'{name}.h5'),
                                 dict(space=series.space, seed=config.seed, n_sim=config.n_sim,
                                      n_states=states.n_states, config_hash=config_hash(config.to_dict())))
        store.add_realizations(series.data.reshape(series.m, n_real, config.n_sim).transpose(1, 0, 2),
                               syn_states.states.reshape(n_real, config.n_sim) if name == 'deep' else None)
        store.close()
    np.save(ws.path('synthetic', 'stamps.npy'), np.stack([reals[r].stamps.values for r in range(n_real)]))
    write_manifest(ws, config, 'simulate', dict(n_realizations=n_real, n_future=n_future))
    return dict(deep=deep, corrected=corrected, final_gaussian=final_gaussian, final=final, states=syn_states)


def load_synthetic(ws, time_kind):
    stamps = np.load(ws.path('synthetic', 'stamps.npy'))
    out = {}
    for name, space in (('deep', Space.GAUSSIAN), ('corrected', Space.GAUSSIAN),
                        ('final_gaussian', Space.GAUSSIAN), ('final', Space.PHYSICAL)):
        store = RealizationStore(ws.path('synthetic', f'{name}.h5'))
        data = store.get_data()
        if name == 'deep':
            y = store.get_states()
            n_states = int(store.get_meta('n_states'))
        store.close()
        reals = [TimeSeriesMatrix(x, space, TimeStampVector(t, time_kind, check=False))
                 for x, t in zip(data, stamps)]
        out[name] = concat_realizations(reals)
    out['states'] = concat_state_sequences([MarkovStateSequence(row, n_states) for row in y])
    return out


def baseline_stage(config, ws, gauss, marginals, n_realizations):
    """Translation-process realizations, or None when the dense covariance is too large."""
    try:
        model = fit_translation(gauss, config.tau_max, marginals)
        result = simulate_translation(model, config.n_sim, n_realizations,
                                      seed=stage_seed(config.seed, 'baseline'))
    except CovarianceTooLarge as err:
        logger.warning(f'Translation baseline skipped: {err}')
        return None
    store = RealizationStore(ws.path('baseline', 'translation.h5'),
                             dict(baseline='translation', seed=config.seed, n_sim=config.n_sim))
    store.add_realizations(result.data.reshape(result.m, n_realizations, config.n_sim).transpose(1, 0, 2))
    store.close()
    save_to_json(ws.path('baseline', 'translation_model.json'), model.to_dict())
    write_manifest(ws, config, 'baseline', dict(n_realizations=n_realizations))
    return result


def load_baseline(ws):
    fn = ws.path('baseline', 'translation.h5')
    if not fn.exists():
        return None
    store = RealizationStore(fn)
    data = store.get_data()
    store.close()
    return concat_realizations([TimeSeriesMatrix(x, Space.PHYSICAL) for x in data])


def _grid(spec, samples_list):
    if spec is not None:
        lo, hi, n = spec
        return np.linspace(lo, hi, int(n))
    lo = min(float(np.min(s)) for s in samples_list)
    hi = max(float(np.max(s)) for s in samples_list)
    return np.linspace(lo, hi, 201)


def _restamp(series, like):
    """Realizations of ``series`` carrying the stamps of the realizations of ``like``."""
    return concat_realizations([TimeSeriesMatrix(r.data, r.space, l.stamps)
                                for r, l in zip(series.realizations(), like.realizations())])


def _metric_s(config, series, record=None):
    if config.is_sde:
        return sde_metric_S(series)
    if record is not None:
        series = wind_postprocess_inverse(series, record)
    return wind_metric_S(series)


def evaluate_stage(config, ws, observed, marginals, gauss, obs_states, synthetic, baseline=None, record=None,
                   histories=None):
    """Compute the evaluation report and write one CSV per result set."""
    report = dict(seed=config.seed, config_hash=config_hash(config.to_dict()),
                  n_observed_columns=gauss.n, n_synthetic_columns=synthetic['final'].n,
                  n_synthetic_realizations=synthetic['final'].n_realizations)
    summary = ResultHandler(dict(experiment=config.experiment, seed=config.seed, profile=config.profile),
                            ['metric', 'value'], to_beginning=('metric',))

    # spatial correlation
    c_target = spatial_correlation(gauss)
    mats = dict(target=c_target)
    for name in ('deep', 'corrected', 'final_gaussian'):
        mats[name] = spatial_correlation(synthetic[name])
    corr_err = {name: frobenius_rel_error(c_target, c) for name, c in mats.items() if name != 'target'}
    if config.is_sde:
        c_analytic = SdeOracles(config.sde).correlation_matrix(gauss.m)
        corr_err['target_vs_analytic'] = frobenius_rel_error(c_analytic, c_target)
    report['correlation'] = dict(matrices={k: v.tolist() for k, v in mats.items()}, rel_errors=corr_err)
    rows = [dict(matrix=k, i=i, k=j, value=float(v[i, j])) for k, v in mats.items()
            for i in range(v.shape[0]) for j in range(v.shape[1])]
    _save_csv(ws.path('report', 'correlation_matrices.csv'), rows)
    for k, v in corr_err.items():
        summary.add(dict(metric=f'corr_rel_error_{k}', value=v))

    # autocorrelation
    tau_max = min(config.tau_max, config.n_sim - 1)
    ac_rows = []
    curves = dict(target=autocorr_curve(gauss, tau_max), synthetic=autocorr_curve(synthetic['final_gaussian'],
                                                                                    tau_max))
    if config.is_sde:
        curves['analytic'] = np.tile(SdeOracles(config.sde).autocorr(np.arange(tau_max + 1) * config.sde.dt),
                                     (gauss.m, 1))
    for name, curve in curves.items():
        for i, row in enumerate(curve):
            ac_rows.extend(dict(curve=name, location=i, lag=tau, value=float(v)) for tau, v in enumerate(row))
    _save_csv(ws.path('report', 'autocorrelation.csv'), ac_rows)
    report['autocorrelation'] = {k: v.tolist() for k, v in curves.items()}

    # marginal densities
    deep_phys = from_gaussian(synthetic['deep'], marginals)
    obs_phys = concat_realizations(observed)
    grid = _grid(config.density_grid, [obs_phys.data])
    dens_rows, dens_err = [], dict(deep=[], final=[])
    for i, mdl in enumerate(marginals):
        ref = mdl.pdf(grid)
        for name, series in (('deep', deep_phys), ('final', synthetic['final'])):
            dens_err[name].append(density_l1_error(series.data[i], ref, grid))
        dens_rows.extend(dict(location=i, x=float(x), reference=float(r)) for x, r in zip(grid, ref))
    _save_csv(ws.path('report', 'densities.csv'), dens_rows)
    report['density_l1_errors'] = dens_err
    for name, errs in dens_err.items():
        summary.add(dict(metric=f'density_l1_error_{name}', value=float(np.mean(errs))))

    # state frequencies
    f_obs, f_gen, r = state_frequency_scatter(obs_states, synthetic['states'])
    _save_csv(ws.path('report', 'state_frequencies.csv'),
              [dict(state=k, observed=float(a), generated=float(b)) for k, (a, b) in enumerate(zip(f_obs, f_gen))])
    report['state_frequency_pearson'] = r
    summary.add(dict(metric='state_frequency_pearson', value=r))

    # downstream metric
    if config.is_sde:
        s_target = sde_metric_S(obs_phys)
    else:
        raw_blocks = [b for b in monthly_blocks(obs_phys, config.n_sim)]
        s_target = np.array([_metric_s(config, b, record)[0] for b in raw_blocks])
    s_sets = dict(target=s_target, synthetic=_metric_s(config, synthetic['final'], record))
    if baseline is not None:
        if not config.is_sde:
            baseline = _restamp(baseline, synthetic['final'])
        s_sets['translation'] = _metric_s(config, baseline, record)
    s_grid = _grid(config.exceed_grid, list(s_sets.values()))
    curves = {k: exceedance_curve(v, s_grid) for k, v in s_sets.items()}
    counts = {k: exceedance_counts(v, s_grid) for k, v in s_sets.items()}
    _save_csv(ws.path('report', 'exceedance.csv'),
              [dict(s=float(s), **{k: float(c[j]) for k, c in curves.items()}) for j, s in enumerate(s_grid)])
    rp_err = {}
    for name in s_sets:
        if name == 'target':
            continue
        mask = (counts['target'] >= config.min_tail_samples) & (counts[name] >= config.min_tail_samples)
        try:
            rp_err[name] = return_period_l1_error(curves['target'], curves[name], s_grid, mask)
        except StochGenError as err:
            logger.warning(f'Return period error of {name} not available: {err}')
            rp_err[name] = None
        summary.add(dict(metric=f'return_period_l1_error_{name}', value=rp_err[name]))
    report['return_period_l1_errors'] = rp_err
    report['n_metric_samples'] = {k: int(len(v)) for k, v in s_sets.items()}

    # marginal check of the final Gaussian-space output
    report['ks_pvalues_final_gaussian'] = [ks_standard_gaussian(row) for row in synthetic['final_gaussian'].data]

    # sample trajectories
    traj_rows = []
    for name, series in (('observed', obs_phys), ('synthetic', synthetic['final'])):
        first = series.realization_slices()[0]
        for i, row in enumerate(series.data[:, first]):
            traj_rows.extend(dict(source=name, location=i, step=j, value=float(v)) for j, v in enumerate(row))
    _save_csv(ws.path('report', 'trajectories.csv'), traj_rows)

    if histories:
        loss_rows = []
        for model_name, hist in histories.items():
            for ep, (tr, va) in enumerate(zip(hist['loss'], hist['val_loss'])):
                loss_rows.append(dict(model=model_name, epoch=ep + 1, loss=tr, val_loss=va))
        _save_csv(ws.path('report', 'losses.csv'), loss_rows)

    summary.save(ws.path('report', 'summary.csv'))
    save_to_json(ws.path('report', 'report.json'), report)
    write_manifest(ws, config, 'evaluate')
    return report


def _save_csv(filename, rows):
    frame = pd.DataFrame(rows)
    atomic_write(filename, lambda f: frame.to_csv(f, index=False, float_format='%.12g'))


def summarize_report(ws):
    """Short text summary of a written report."""
    report = load_from_json(ws.path('report', 'report.json'))
    lines = [f'seed={report["seed"]} config={report["config_hash"]}',
             f'synthetic realizations: {report["n_synthetic_realizations"]}']
    for k, v in report['correlation']['rel_errors'].items():
        lines.append(f'correlation error {k}: {v:.4f}')
    for k, v in report['density_l1_errors'].items():
        lines.append(f'density L1 error {k}: {np.mean(v):.4f}')
    lines.append(f'state frequency Pearson r: {report["state_frequency_pearson"]:.4f}')
    for k, v in report['return_period_l1_errors'].items():
        lines.append(f'return period L1 error {k}: ' + ('n/a' if v is None else f'{v:.4f}'))
    return '\n'.join(lines)


def _run_stage(name, fn, *args, **kwargs):
    logger.info(f'Stage {name} started.')
    try:
        return fn(*args, **kwargs)
    except Exception as err:
        raise PipelineStageError(name, err) from err


def run_pipeline(config, max_steps=None):
    """Construct the models, simulate and evaluate.

    Parameters
    ----------
    config : PipelineConfig
    max_steps : int, optional
        Cap on optimizer steps per network, for smoke runs.

    Returns
    -------
    dict
        The evaluation report.
    """
    ws = Workspace(config.out_dir)
    ws.save_config(config)
    if config.is_sde:
        observed, marginals = _run_stage('sde-gen', generate_sde_data, config, ws)
        record = None
    else:
        observed, marginals, record = _run_stage('preprocess', preprocess_wind_data, config, ws)

    cluster_model, states = _run_stage('fit-states', fit_states_stage, config, ws, observed, marginals)
    gauss = observed_gaussian(observed, marginals)
    generator, sg_history = _run_stage('train-stategen', train_stategen_stage, config, ws, cluster_model, states,
                                       gauss.stamps, _year_range(gauss))
    model, history = _run_stage('train-seq2seq', train_seq2seq_stage, config, ws, gauss, states, max_steps)
    synthetic = _run_stage('simulate', simulate_stage, config, ws, model, generator, gauss, states, marginals)
    baseline = None
    if config.baseline:
        baseline = _run_stage('baseline', baseline_stage, config, ws, gauss, marginals,
                              synthetic['final'].n_realizations)
    histories = dict(seq2seq=history)
    if isinstance(sg_history, dict) and 'loss' in sg_history:
        histories['stategen'] = sg_history
    return _run_stage('evaluate', evaluate_stage, config, ws, observed, marginals, gauss, states, synthetic,
                      baseline, record, histories)


def run_stage(stage, config, max_steps=None):
    """Run a single stage from the artifacts already in the workspace."""
    ws = Workspace(config.out_dir)
    if stage == 'sde-gen':
        ws.save_config(config)
        return _run_stage(stage, generate_sde_data, config, ws)
    if stage == 'preprocess':
        ws.save_config(config)
        return _run_stage(stage, preprocess_wind_data, config, ws)
    if stage == 'report':
        return summarize_report(ws)

    observed, marginals, record = ws.load_observed()
    if stage == 'fit-states':
        return _run_stage(stage, fit_states_stage, config, ws, observed, marginals)
    gauss = observed_gaussian(observed, marginals)
    cluster_model, states = ws.load_states()
    if stage == 'train-stategen':
        return _run_stage(stage, train_stategen_stage, config, ws, cluster_model, states, gauss.stamps,
                          _year_range(gauss))
    if stage == 'train-seq2seq':
        return _run_stage(stage, train_seq2seq_stage, config, ws, gauss, states, max_steps)
    if stage == 'simulate':
        return _run_stage(stage, simulate_stage, config, ws, load_model(ws.path('seq2seq')),
                          load_state_generator(ws.path('stategen')), gauss, states, marginals)
    synthetic = load_synthetic(ws, gauss.stamps.kind)
    if stage == 'baseline':
        return _run_stage(stage, baseline_stage, config, ws, gauss, marginals, synthetic['final'].n_realizations)
    if stage == 'evaluate':
        histories = {}
        for name in ('seq2seq', 'stategen'):
            fn = ws.path(name, 'history.json')
            if fn.exists():
                hist = load_from_json(fn)
                if 'loss' in hist:
                    histories[name] = hist
        return _run_stage(stage, evaluate_stage, config, ws, observed, marginals, gauss, states, synthetic,
                          load_baseline(ws), record, histories)
    raise NotImplementedError(f'Stage {stage} is not implemented.')
