import numpy as np

from .autograd import Tensor, as_tensor, _make
from ..exceptions import DegenerateProbability, ShapeMismatch


def _check_shapes(pred, target):
    if pred.shape != np.shape(target):
        raise ShapeMismatch(f'Prediction shape {pred.shape} differs from target shape {np.shape(target)}.')


def l1_loss(pred, target):
    """Mean absolute error."""
    target = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=np.float64)
    _check_shapes(pred, target)
    diff = pred.data - target
    n = diff.size
    return _make(np.abs(diff).mean(), (pred,), lambda g: (g * np.sign(diff) / n,))


def l2_loss(pred, target):
    """Mean squared error."""
    target = np.asarray(target.data if isinstance(target, Tensor) else target, dtype=np.float64)
    _check_shapes(pred, target)
    diff = pred.data - target
    n = diff.size
    return _make((diff ** 2).mean(), (pred,), lambda g: (g * 2. * diff / n,))


def focal_loss(probs, targets, gamma=2., class_weights=None):
    """Weighted focal loss averaged over the batch.

    ``-w_c (1 - p_c)^gamma log p_c`` for the target class ``c`` of every row.

    Parameters
    ----------
    probs : Tensor
        Class probabilities, shape (B, n_classes).
    targets : ndarray
        Integer classes, shape (B,).
    gamma : float
    class_weights : ndarray, optional
        Shape (n_classes,). Defaults to ones.
    """
    probs = as_tensor(probs)
    targets = np.asarray(targets, dtype=np.int64)
    bsz, n_classes = probs.shape
    if targets.shape != (bsz,):
        raise ShapeMismatch(f'Expected {bsz} targets, got shape {targets.shape}.')
    weights = np.ones(n_classes) if class_weights is None else np.asarray(class_weights, dtype=np.float64)
    rows = np.arange(bsz)
    p = probs.data[rows, targets]
    if np.any(p <= 0):
        raise DegenerateProbability('Target class probability is zero.')
    w = weights[targets]
    one_minus = 1. - p
    log_p = np.log(p)
    loss = -(w * one_minus ** gamma * log_p).mean()

    def backward_fn(g):
        # d/dp of -(1-p)^gamma log p
        if gamma == 0:
            dp = -1. / p
        else:
            dp = gamma * one_minus ** (gamma - 1) * log_p - one_minus ** gamma / p
        grad = np.zeros_like(probs.data)
        grad[rows, targets] = g * w * dp / bsz
        return grad,

    return _make(loss, (probs,), backward_fn)


def class_weights_for_tail(n_states, tail_states, tail_weight):
    """Weight ``tail_weight`` for tail states and 1 for bulk states."""
    weights = np.ones(n_states)
    weights[np.asarray(tail_states, dtype=bool)] = tail_weight
    return weights
