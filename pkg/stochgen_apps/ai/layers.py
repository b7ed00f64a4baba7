"""Transformer building blocks on top of :mod:`stochgen_apps.ai.autograd`.

All activations are batch-first and time-major: (batch, time, features).
"""
from enum import Enum

import numpy as np

from .autograd import Tensor, add, matmul, mul, relu, softmax, layer_norm as _layer_norm, \
    embedding, circular_unfold, concat
from ..exceptions import UnknownState


class AttentionMode(Enum):
    SELF = 'self'
    CAUSAL_SELF = 'causal_self'
    CROSS = 'cross'


def xavier_uniform(rng, fan_in, fan_out, shape=None):
    limit = np.sqrt(6. / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out) if shape is None else shape)


def parameter(data, name=None):
    return Tensor(np.array(data, dtype=np.float64), requires_grad=True, name=name)


# functional forms

def linear(z, w, b=None):
    out = matmul(z, w)
    return out if b is None else add(out, b)


def conv1d_circular(x, kernel, kernel_size):
    """Circular 1d convolution over time.

    Parameters
    ----------
    x : Tensor
        Shape (B, q, m).
    kernel : Tensor
        Shape (kernel_size * m, d_model), rows ordered offset by offset.
    """
    return matmul(circular_unfold(x, kernel_size), kernel)


def layer_norm(z, gain, bias, eps=1e-5):
    return _layer_norm(z, gain, bias, eps)


def dropout(z, rate, training, rng):
    """Inverted dropout, identity outside training."""
    if not training or rate == 0:
        return z
    keep = (rng.random(z.shape) >= rate) / (1. - rate)
    return mul(z, keep)


def positional_embedding(q, d_model):
    """Sinusoidal position codes, shape (q, d_model)."""
    pos = np.arange(q)[:, np.newaxis]
    div_term = np.exp(np.arange(0, d_model, 2) * (-np.log(10000.) / d_model))
    pe = np.zeros((q, d_model))
    pe[:, 0::2] = np.sin(pos * div_term)
    pe[:, 1::2] = np.cos(pos * div_term[:d_model // 2])
    return pe


def time_feature_embedding(features, w):
    """Linear map of standardized calendar features (..., q, 4) to (..., q, d_model)."""
    return matmul(Tensor(features), w)


def markov_state_embedding(states, table):
    states = np.asarray(states, dtype=np.int64)
    if states.size and (states.min() < 0 or states.max() >= table.shape[0]):
        raise UnknownState(f'States must lie in [0, {table.shape[0]}).')
    return embedding(table, states)


def causal_mask(q, k=None):
    k = q if k is None else k
    mask = np.zeros((q, k))
    mask[np.triu_indices(q, 1, k)] = -np.inf
    return mask


def multi_head_attention(z_q, z_kv, params, n_head, causal=False):
    """Scaled dot-product attention with ``n_head`` heads.

    ``params`` maps ``w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o`` to tensors.
    Position ``i`` of ``z_q`` attends to every position of ``z_kv``, or to
    positions ``<= i`` when ``causal`` is set.
    """
    bsz, q_len, d_model = z_q.shape
    k_len = z_kv.shape[1]
    d_head = d_model // n_head

    def heads(z, w, b, length):
        return linear(z, params[w], params[b]).reshape(bsz, length, n_head, d_head).transpose(0, 2, 1, 3)

    q_h = heads(z_q, 'w_q', 'b_q', q_len)
    k_h = heads(z_kv, 'w_k', 'b_k', k_len)
    v_h = heads(z_kv, 'w_v', 'b_v', k_len)
    scores = mul(matmul(q_h, k_h.transpose(0, 1, 3, 2)), 1. / np.sqrt(d_head))
    if causal:
        scores = add(scores, causal_mask(q_len, k_len))
    attn = softmax(scores, axis=-1)
    out = matmul(attn, v_h).transpose(0, 2, 1, 3).reshape(bsz, q_len, d_model)
    return linear(out, params['w_o'], params['b_o'])


def self_attention(z, params, n_head, causal=False):
    return multi_head_attention(z, z, params, n_head, causal)


def cross_attention(z_dec, z_enc, params, n_head):
    return multi_head_attention(z_dec, z_enc, params, n_head)


def feed_forward(z, params):
    return linear(relu(linear(z, params['w_1'], params['b_1'])), params['w_2'], params['b_2'])


# layers

class Layer:
    """Base of every trainable component.

    Parameters are the ``Tensor`` attributes with ``requires_grad``; sub-layers
    are attributes of type :class:`Layer` or lists of layers.
    """

    def __init__(self):
        self.training = True

    def named_parameters(self, prefix=''):
        for key, val in vars(self).items():
            if isinstance(val, Tensor) and val.requires_grad:
                yield prefix + key, val
            elif isinstance(val, Layer):
                yield from val.named_parameters(f'{prefix}{key}.')
            elif isinstance(val, list) and len(val) and isinstance(val[0], Layer):
                for i, layer in enumerate(val):
                    yield from layer.named_parameters(f'{prefix}{key}.{i}.')

    def sublayers(self):
        for val in vars(self).values():
            if isinstance(val, Layer):
                yield val
            elif isinstance(val, list):
                yield from (v for v in val if isinstance(v, Layer))

    def train(self, mode=True):
        self.training = mode
        for layer in self.sublayers():
            layer.train(mode)
        return self

    def eval(self):
        return self.train(False)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)


class Linear(Layer):

    def __init__(self, d_in, d_out, rng, bias=True, zero_init=False):
        super().__init__()
        w = np.zeros((d_in, d_out)) if zero_init else xavier_uniform(rng, d_in, d_out)
        self.w = parameter(w)
        self.b = parameter(np.zeros(d_out)) if bias else None

    def forward(self, z):
        return linear(z, self.w, self.b)


class LayerNorm(Layer):

    def __init__(self, d_model, eps=1e-5):
        super().__init__()
        self.gain = parameter(np.ones(d_model))
        self.bias = parameter(np.zeros(d_model))
        self.eps = eps

    def forward(self, z):
        return layer_norm(z, self.gain, self.bias, self.eps)


class Dropout(Layer):

    def __init__(self, rate, rng):
        super().__init__()
        self.rate = rate
        self.rng = rng

    def forward(self, z):
        return dropout(z, self.rate, self.training, self.rng)


class MultiHeadAttention(Layer):

    def __init__(self, d_model, n_head, rng, mode=AttentionMode.SELF):
        super().__init__()
        assert d_model % n_head == 0, f'd_model={d_model} is not divisible by n_head={n_head}'
        self.n_head = n_head
        self.mode = AttentionMode(mode)
        for name in ('q', 'k', 'v', 'o'):
            setattr(self, f'w_{name}', parameter(xavier_uniform(rng, d_model, d_model)))
            setattr(self, f'b_{name}', parameter(np.zeros(d_model)))

    @property
    def params(self):
        return {k: v for k, v in vars(self).items() if isinstance(v, Tensor)}

    def forward(self, z, z_kv=None):
        if self.mode is AttentionMode.CROSS:
            assert z_kv is not None, 'Cross attention needs the encoder output.'
            return cross_attention(z, z_kv, self.params, self.n_head)
        return self_attention(z, self.params, self.n_head, causal=self.mode is AttentionMode.CAUSAL_SELF)


class FeedForward(Layer):

    def __init__(self, d_model, d_ff, rng):
        super().__init__()
        self.w_1 = parameter(xavier_uniform(rng, d_model, d_ff))
        self.b_1 = parameter(np.zeros(d_ff))
        self.w_2 = parameter(xavier_uniform(rng, d_ff, d_model))
        self.b_2 = parameter(np.zeros(d_model))

    def forward(self, z):
        return feed_forward(z, vars(self))


class EncoderBlock(Layer):
    """Post-norm block: self-attention then feed-forward, each with a residual."""

    def __init__(self, d_model, d_ff, n_head, dropout_rate, rng):
        super().__init__()
        self.attn = MultiHeadAttention(d_model, n_head, rng, AttentionMode.SELF)
        self.ffn = FeedForward(d_model, d_ff, rng)
        self.norm1 = LayerNorm(d_model)
        self.norm2 = LayerNorm(d_model)
        self.drop = Dropout(dropout_rate, rng)

    def forward(self, z):
        z = self.norm1(add(z, self.drop(self.attn(z))))
        return self.norm2(add(z, self.drop(self.ffn(z))))


class DecoderBlock(Layer):
    """Causal self-attention, cross-attention to the encoder, feed-forward."""

    def __init__(self, d_model, d_ff, n_head, dropout_rate, rng):
        super().__init__()
        self.self_attn = MultiHeadAttention(d_model, n_head, rng, AttentionMode.CAUSAL_SELF)
        self.cross_attn = MultiHeadAttention(d_model, n_head, rng, AttentionMode.CROSS)
        self.ffn = FeedForward(d_model, d_ff, rng)
        self.norm1 = LayerNorm(d_model)
        self.norm2 = LayerNorm(d_model)
        self.norm3 = LayerNorm(d_model)
        self.drop = Dropout(dropout_rate, rng)

    def forward(self, z, z_enc):
        z = self.norm1(add(z, self.drop(self.self_attn(z))))
        z = self.norm2(add(z, self.drop(self.cross_attn(z, z_enc))))
        return self.norm3(add(z, self.drop(self.ffn(z))))


class DecoderOnlyBlock(Layer):
    """Causal self-attention and feed-forward, no encoder."""

    def __init__(self, d_model, d_ff, n_head, dropout_rate, rng):
        super().__init__()
        self.self_attn = MultiHeadAttention(d_model, n_head, rng, AttentionMode.CAUSAL_SELF)
        self.ffn = FeedForward(d_model, d_ff, rng)
        self.norm1 = LayerNorm(d_model)
        self.norm2 = LayerNorm(d_model)
        self.drop = Dropout(dropout_rate, rng)

    def forward(self, z):
        z = self.norm1(add(z, self.drop(self.self_attn(z))))
        return self.norm2(add(z, self.drop(self.ffn(z))))


class StateEmbedding(Layer):

    def __init__(self, n_states, d_model, rng):
        super().__init__()
        self.table = parameter(rng.normal(0., .02, size=(n_states, d_model)))

    def forward(self, states):
        return markov_state_embedding(states, self.table)


class TimeEmbedding(Layer):
    """Sinusoidal positions for unitless stamps, a linear calendar map otherwise."""

    def __init__(self, d_model, rng, calendar=False):
        super().__init__()
        self.d_model = d_model
        self.calendar = calendar
        self.w = parameter(xavier_uniform(rng, 4, d_model)) if calendar else None

    def forward(self, q, features=None):
        if self.calendar:
            assert features is not None, 'Calendar stamps need time features.'
            return time_feature_embedding(features, self.w)
        return Tensor(positional_embedding(q, self.d_model))


class DataEmbedding(Layer):
    """Value, Markov state and time embeddings summed into one (B, q, d_model) tensor."""

    def __init__(self, m, n_states, d_model, kernel_size, rng, calendar=False):
        super().__init__()
        self.kernel_size = kernel_size
        self.value_kernel = parameter(xavier_uniform(rng, kernel_size * m, d_model))
        self.state = StateEmbedding(n_states, d_model, rng)
        self.time = TimeEmbedding(d_model, rng, calendar)

    def forward(self, x, states, features=None):
        z = conv1d_circular(x, self.value_kernel, self.kernel_size)
        z = add(z, self.state(states))
        return add(z, self.time(x.shape[1], features))


__all__ = ['AttentionMode', 'Layer', 'Linear', 'LayerNorm', 'Dropout', 'MultiHeadAttention', 'FeedForward',
           'EncoderBlock', 'DecoderBlock', 'DecoderOnlyBlock', 'StateEmbedding', 'TimeEmbedding',
           'DataEmbedding', 'linear', 'conv1d_circular', 'layer_norm', 'dropout', 'positional_embedding',
           'time_feature_embedding', 'markov_state_embedding', 'self_attention', 'cross_attention',
           'feed_forward', 'causal_mask', 'concat', 'parameter']
