from .ai.generator import StateGeneratorType
from .config import ExperimentKind, SplitMode


def validate_generator_order_pair(generator_type, order):
    if generator_type is StateGeneratorType.MARKOV_CHAIN and order != 1:
        raise ValueError(f'A transition matrix models first-order chains only, got order {order}.')
    elif generator_type is StateGeneratorType.DEEP and order < 1:
        raise ValueError(f'Markov order must be positive, got {order}.')
    return generator_type, order


def validate_experiment_split_pair(experiment, split_mode, n_realizations=None):
    """A realization-wise split needs at least two realizations."""
    if split_mode is SplitMode.BY_REALIZATION and n_realizations is not None and n_realizations < 2:
        raise ValueError(f'{experiment.name} has {n_realizations} realization, '
                         f'use {SplitMode.BY_TIME.name} splitting.')
    if experiment is ExperimentKind.WIND_CSV and split_mode is SplitMode.BY_REALIZATION:
        split_mode = SplitMode.BY_TIME
    return experiment, split_mode
