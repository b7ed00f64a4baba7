"""Reverse-mode automatic differentiation on numpy arrays.

A :class:`Tensor` records the tensors it was computed from and a closure
mapping the upstream gradient to the gradients of those parents.
:func:`backward` walks the recorded graph in reverse topological order.
"""
from contextlib import contextmanager

import numpy as np

from ..exceptions import GraphCycle, NonScalarLoss

_grad_enabled = True


@contextmanager
def no_grad():
    """Build no graph inside the block, used for inference."""
    global _grad_enabled
    prev = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = prev


class Tensor:
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, name=None, _parents=(), _backward_fn=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad = None
        self.name = name
        self._parents = _parents
        self._backward_fn = _backward_fn

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    def zero_grad(self):
        self.grad = None

    def numpy(self):
        return self.data

    def __repr__(self):
        name = f', name={self.name}' if self.name else ''
        return f'Tensor(shape={self.shape}{name}, requires_grad={self.requires_grad})'

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return add(self, neg(as_tensor(other)))

    def __rsub__(self, other):
        return add(as_tensor(other), neg(self))

    def __neg__(self):
        return neg(self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Tensor):
            return div(self, other)
        return mul(self, 1. / other)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, item):
        return getitem(self, item)

    def sum(self, axis=None, keepdims=False):
        return tensor_sum(self, axis, keepdims)

    def mean(self, axis=None, keepdims=False):
        return tensor_mean(self, axis, keepdims)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return reshape(self, shape)

    def transpose(self, *axes):
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return transpose(self, axes)


def as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _make(data, parents, backward_fn):
    needs_grad = _grad_enabled and any(p.requires_grad for p in parents)
    if not needs_grad:
        return Tensor(data)
    return Tensor(data, requires_grad=True, _parents=parents, _backward_fn=backward_fn)


def unbroadcast(grad, shape):
    """Sum ``grad`` down to ``shape`` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for i, dim in enumerate(shape):
        if dim == 1 and grad.shape[i] != 1:
            grad = grad.sum(axis=i, keepdims=True)
    return grad


def add(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data + b.data, (a, b),
                 lambda g: (unbroadcast(g, a.shape), unbroadcast(g, b.shape)))


def neg(a):
    return _make(-a.data, (a,), lambda g: (-g,))


def mul(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data * b.data, (a, b),
                 lambda g: (unbroadcast(g * b.data, a.shape), unbroadcast(g * a.data, b.shape)))


def div(a, b):
    a, b = as_tensor(a), as_tensor(b)
    return _make(a.data / b.data, (a, b),
                 lambda g: (unbroadcast(g / b.data, a.shape),
                            unbroadcast(-g * a.data / b.data ** 2, b.shape)))


def matmul(a, b):
    a, b = as_tensor(a), as_tensor(b)

    def backward_fn(g):
        ga = g @ np.swapaxes(b.data, -1, -2)
        gb = np.swapaxes(a.data, -1, -2) @ g
        return unbroadcast(ga, a.shape), unbroadcast(gb, b.shape)

    return _make(a.data @ b.data, (a, b), backward_fn)


def tensor_sum(a, axis=None, keepdims=False):
    def backward_fn(g):
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        return np.broadcast_to(g, a.shape).copy(),

    return _make(a.data.sum(axis=axis, keepdims=keepdims), (a,), backward_fn)


def tensor_mean(a, axis=None, keepdims=False):
    count = a.data.size if axis is None else np.prod([a.shape[i] for i in np.atleast_1d(axis)])
    return mul(tensor_sum(a, axis, keepdims), 1. / count)


def reshape(a, shape):
    return _make(a.data.reshape(shape), (a,), lambda g: (g.reshape(a.shape),))


def transpose(a, axes):
    inv = np.argsort(axes)
    return _make(np.transpose(a.data, axes), (a,), lambda g: (np.transpose(g, inv),))


def getitem(a, item):
    def backward_fn(g):
        ga = np.zeros_like(a.data)
        np.add.at(ga, item, g)
        return ga,

    return _make(a.data[item], (a,), backward_fn)


def concat(tensors, axis=-1):
    tensors = [as_tensor(t) for t in tensors]
    sizes = [t.shape[axis] for t in tensors]
    splits = np.cumsum(sizes)[:-1]
    return _make(np.concatenate([t.data for t in tensors], axis=axis), tuple(tensors),
                 lambda g: tuple(np.split(g, splits, axis=axis)))


def relu(a):
    mask = a.data > 0
    return _make(a.data * mask, (a,), lambda g: (g * mask,))


def exp(a):
    out = np.exp(a.data)
    return _make(out, (a,), lambda g: (g * out,))


def log(a):
    return _make(np.log(a.data), (a,), lambda g: (g / a.data,))


def softmax(a, axis=-1):
    shifted = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    s = e / e.sum(axis=axis, keepdims=True)

    def backward_fn(g):
        return s * (g - (g * s).sum(axis=axis, keepdims=True)),

    return _make(s, (a,), backward_fn)


def layer_norm(a, gain, bias, eps=1e-5):
    """Normalize over the last axis, then scale and shift."""
    mu = a.data.mean(axis=-1, keepdims=True)
    inv_std = 1. / np.sqrt(a.data.var(axis=-1, keepdims=True) + eps)
    x_hat = (a.data - mu) * inv_std

    def backward_fn(g):
        g_hat = g * gain.data
        ga = inv_std * (g_hat - g_hat.mean(axis=-1, keepdims=True)
                        - x_hat * (g_hat * x_hat).mean(axis=-1, keepdims=True))
        return ga, unbroadcast(g * x_hat, gain.shape), unbroadcast(g, bias.shape)

    return _make(x_hat * gain.data + bias.data, (a, gain, bias), backward_fn)


def embedding(table, idx):
    """Rows of ``table`` picked by the integer array ``idx``."""
    idx = np.asarray(idx, dtype=np.int64)

    def backward_fn(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx, g)
        return gt,

    return _make(table.data[idx], (table,), backward_fn)


def circular_unfold(a, kernel_size):
    """Stack circular neighbours along the last axis.

    ``a`` has shape (B, q, m); the result has shape (B, q, kernel_size * m)
    with block ``o`` holding ``a[:, (j + o - kernel_size // 2) % q]``.
    """
    offsets = np.arange(kernel_size) - kernel_size // 2
    m = a.shape[-1]

    def backward_fn(g):
        ga = np.zeros_like(a.data)
        for i, o in enumerate(offsets):
            ga += np.roll(g[..., i * m:(i + 1) * m], o, axis=-2)
        return ga,

    data = np.concatenate([np.roll(a.data, -o, axis=-2) for o in offsets], axis=-1)
    return _make(data, (a,), backward_fn)


def _topological_order(root):
    order, state = [], {}
    stack = [(root, False)]
    while stack:
        node, processed = stack.pop()
        key = id(node)
        if processed:
            state[key] = 2
            order.append(node)
            continue
        st = state.get(key, 0)
        if st == 2:
            continue
        if st == 1:
            raise GraphCycle('The computation graph contains a cycle.')
        state[key] = 1
        stack.append((node, True))
        for p in node._parents:
            pst = state.get(id(p), 0)
            if pst == 1:
                raise GraphCycle('The computation graph contains a cycle.')
            if pst == 0:
                stack.append((p, False))
    return order


def backward(loss):
    """Accumulate d(loss)/d(leaf) into ``leaf.grad`` for every leaf that requires it."""
    if loss.data.size != 1:
        raise NonScalarLoss(f'Loss must be a scalar, got shape {loss.shape}.')
    if not loss.requires_grad:
        return
    grads = {id(loss): np.ones_like(loss.data)}
    for node in reversed(_topological_order(loss)):
        g = grads.pop(id(node), None)
        if g is None:
            continue
        if node._backward_fn is None:
            node.grad = g if node.grad is None else node.grad + g
            continue
        for p, pg in zip(node._parents, node._backward_fn(g)):
            if pg is None or not p.requires_grad:
                continue
            assert pg.shape == p.shape, f'Gradient shape {pg.shape} does not match {p.shape}.'
            key = id(p)
            grads[key] = grads[key] + pg if key in grads else pg


def gradient_check(fn, inputs, eps=1e-6):
    """Largest relative difference between autograd and central differences.

    Parameters
    ----------
    fn : callable
        Maps the input tensors to a scalar tensor.
    inputs : list of Tensor
        Leaves with ``requires_grad=True``.

    Returns
    -------
    float
    """
    for t in inputs:
        t.data = np.ascontiguousarray(t.data)
        t.zero_grad()
    backward(fn(*inputs))
    worst = 0.
    for t in inputs:
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad
        numeric = np.zeros_like(t.data)
        flat = t.data.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + eps
            with no_grad():
                f_plus = float(fn(*inputs).data)
            flat[i] = orig - eps
            with no_grad():
                f_minus = float(fn(*inputs).data)
            flat[i] = orig
            numeric.reshape(-1)[i] = (f_plus - f_minus) / (2 * eps)
        scale = max(np.abs(numeric).max(), np.abs(analytic).max(), 1e-8)
        worst = max(worst, float(np.abs(analytic - numeric).max() / scale))
    return worst
