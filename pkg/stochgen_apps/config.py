from enum import Enum

from .exceptions import ShapeMismatch


class Space(Enum):
    PHYSICAL = 'physical'
    GAUSSIAN = 'gaussian'


class TimeKind(Enum):
    UNITLESS = 'unitless'
    CALENDAR = 'calendar'


class SplitMode(Enum):
    BY_TIME = 'by_time'
    BY_REALIZATION = 'by_realization'


class ExperimentKind(Enum):
    SDE_BENCH = 'sde_bench'
    WIND_CSV = 'wind_csv'


class Criterion(Enum):
    AIC = 'aic'
    BIC = 'bic'


# default learning rate drops: epoch -> new learning rate
DEFAULT_LR_DROPS = {6: 1e-5, 8: 5e-6, 10: 1e-6, 12: 5e-7}


class HyperParams:
    """Model and training hyper-parameters.

    Window lengths follow the encoder/decoder convention: the encoder sees
    ``q_enc_in`` steps, the decoder gets the last ``q_dec_in`` of them as a
    start token and predicts ``q_out`` steps.
    """

    def __init__(self, q_enc_in=40, q_dec_in=20, q_out=20,
                 n_tail=100, n_bulk=200, tail_level=.96, n_restarts=20,
                 d_model=64, d_ff=128, n_head=4, n_enc=2, n_dec=2,
                 n_markov=2, markov_order=10, kernel_size=3,
                 eta=.8, dropout_rate=.05,
                 learning_rate=1e-4, lr_drops=None,
                 max_epochs=20, batch_size=128, patience=3,
                 focal_gamma=2., tail_class_weight=1.3,
                 stategen_eta=None, seed=0):
        self.q_enc_in = int(q_enc_in)
        self.q_dec_in = int(q_dec_in)
        self.q_out = int(q_out)
        self.n_tail = int(n_tail)
        self.n_bulk = int(n_bulk)
        self.tail_level = float(tail_level)
        self.n_restarts = int(n_restarts)
        self.d_model = int(d_model)
        self.d_ff = int(d_ff)
        self.n_head = int(n_head)
        self.n_enc = int(n_enc)
        self.n_dec = int(n_dec)
        self.n_markov = int(n_markov)
        self.markov_order = int(markov_order)
        self.kernel_size = int(kernel_size)
        self.eta = float(eta)
        self.dropout_rate = float(dropout_rate)
        self.learning_rate = float(learning_rate)
        self.lr_drops = {int(k): float(v) for k, v in
                         (DEFAULT_LR_DROPS if lr_drops is None else lr_drops).items()}
        self.max_epochs = int(max_epochs)
        self.batch_size = int(batch_size)
        self.patience = int(patience)
        self.focal_gamma = float(focal_gamma)
        self.tail_class_weight = float(tail_class_weight)
        self.stategen_eta = self.eta if stategen_eta is None else float(stategen_eta)
        self.seed = int(seed)
        self.validate()

    @property
    def n_clusters(self):
        return self.n_tail + self.n_bulk

    @property
    def q_max(self):
        return max(self.markov_order, self.q_enc_in)

    def validate(self):
        if self.d_model % self.n_head != 0:
            raise ShapeMismatch(f'd_model={self.d_model} is not divisible by n_head={self.n_head}.')
        if not 0 < self.q_dec_in <= self.q_enc_in:
            raise ShapeMismatch(f'q_dec_in must be in [1, q_enc_in], got {self.q_dec_in}.')
        if self.q_out < 1:
            raise ShapeMismatch(f'q_out must be positive, got {self.q_out}.')
        if self.kernel_size % 2 != 1:
            raise ShapeMismatch(f'kernel_size must be odd, got {self.kernel_size}.')
        assert 0 < self.eta < 1, f'eta must be in (0, 1), got {self.eta}'
        assert 0 < self.stategen_eta < 1, f'stategen_eta must be in (0, 1), got {self.stategen_eta}'
        assert 0 <= self.dropout_rate < 1, f'dropout_rate must be in [0, 1), got {self.dropout_rate}'
        assert self.n_clusters > 0, 'At least one cluster is required.'
        assert self.markov_order >= 1, f'markov_order must be >= 1, got {self.markov_order}'

    def to_dict(self):
        d = dict(vars(self))
        d['lr_drops'] = {str(k): v for k, v in self.lr_drops.items()}
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get('lr_drops') is not None:
            d['lr_drops'] = {int(k): v for k, v in d['lr_drops'].items()}
        return cls(**d)

    def replace(self, **kwargs):
        d = self.to_dict()
        d.update(kwargs)
        return HyperParams.from_dict(d)

    def __repr__(self):
        return f'HyperParams({self.to_dict()})'
