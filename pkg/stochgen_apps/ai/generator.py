from enum import Enum, auto
from pathlib import Path

import numpy as np

from .interface import StateGeneratorInterface
from .state_generator import StateGenerator
from ..config import TimeKind
from ..handlers.checkpoint import load_checkpoint, MANIFEST
from ..states.markov import estimate_transition_matrix, simulate_chain, TransitionMatrix
from ..utils import spawn_seeds, save_to_json, load_from_json

MARKOV_CHAIN_FILE = 'transition_matrix.json'


class StateGeneratorType(Enum):
    USER_DEFINED = auto()
    MARKOV_CHAIN = auto()
    DEEP = auto()


def default_generator_type(order):
    """First-order chains are counted, longer memories need the neural generator."""
    return StateGeneratorType.MARKOV_CHAIN if order == 1 else StateGeneratorType.DEEP


class MarkovChainGenerator(StateGeneratorInterface):
    """First-order transition matrix behind the state generator interface."""

    order = 1

    def __init__(self, n_states, tm=None):
        self.n_states = int(n_states)
        self.tm = tm

    def fit(self, states, stamps=None, **kwargs):
        self.tm = estimate_transition_matrix(states, self.n_states)
        return dict(n_transitions=int(self.tm.counts.sum()))

    def generate(self, init_states, stamps, n_steps, seed=None):
        assert self.tm is not None, 'The transition matrix is not estimated yet.'
        init = np.asarray(init_states, dtype=np.int64)
        if init.ndim == 1:
            return simulate_chain(self.tm, int(init[-1]), n_steps, seed)
        return [simulate_chain(self.tm, int(row[-1]), n_steps, s)
                for row, s in zip(init, spawn_seeds(seed, len(init)))]

    def save(self, path):
        save_to_json(Path(path).joinpath(MARKOV_CHAIN_FILE), self.tm.to_dict())

    @classmethod
    def load(cls, path):
        tm = TransitionMatrix.from_dict(load_from_json(Path(path).joinpath(MARKOV_CHAIN_FILE)))
        return cls(tm.n_states, tm)


def init_state_generator(generator_type, n_states, hp=None, *, tail_states=None,
                         time_kind=TimeKind.UNITLESS, year_range=None, generator=None, seed=None):
    if generator_type is StateGeneratorType.MARKOV_CHAIN:
        generator = MarkovChainGenerator(n_states)
    elif generator_type is StateGeneratorType.DEEP:
        assert hp is not None, 'The neural state generator needs hyper-parameters.'
        generator = StateGenerator(n_states, hp, tail_states, time_kind, year_range, seed)
    elif generator_type is StateGeneratorType.USER_DEFINED:
        assert isinstance(generator, StateGeneratorInterface), 'generator must be defined!'
    else:
        raise NotImplementedError('State generator {} is not implemented.'.format(generator_type.name))
    return generator


def load_state_generator(path):
    path = Path(path)
    if path.joinpath(MARKOV_CHAIN_FILE).exists():
        return MarkovChainGenerator.load(path)
    assert path.joinpath(MANIFEST).exists(), f'No state generator found in {path}.'
    weights, meta = load_checkpoint(path)
    model = StateGenerator.from_config(meta['config'])
    model.store.set_weights(weights)
    model.eval()
    return model
