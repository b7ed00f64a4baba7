import numpy as np


class ParamStore:
    """Named model parameters with their Adam moment buffers."""

    def __init__(self, named_params):
        self.params = dict(named_params)
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.t = 0

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def get_weights(self):
        return {k: p.data.copy() for k, p in self.params.items()}

    def set_weights(self, weights):
        for k, p in self.params.items():
            assert weights[k].shape == p.data.shape, f'Shape mismatch for {k}.'
            p.data = np.array(weights[k], dtype=np.float64)

    def n_params(self):
        return int(sum(p.data.size for p in self.params.values()))

    def __len__(self):
        return len(self.params)

    def __iter__(self):
        return iter(self.params.items())


class Adam:
    """Adam with bias-corrected moments, the learning rate may change between steps."""

    def __init__(self, store, lr=1e-3, beta1=.9, beta2=.999, eps=1e-8):
        self.store = store
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self):
        store = self.store
        store.t += 1
        bc1 = 1. - self.beta1 ** store.t
        bc2 = 1. - self.beta2 ** store.t
        step_size = self.lr / bc1
        for k, p in store.params.items():
            if p.grad is None:
                continue
            g = p.grad
            store.m[k] *= self.beta1
            store.m[k] += (1. - self.beta1) * g
            store.v[k] *= self.beta2
            store.v[k] += (1. - self.beta2) * (g * g)
            denom = np.sqrt(store.v[k] / bc2) + self.eps
            p.data = p.data - step_size * store.m[k] / denom


def adam_step(store, lr, beta1=.9, beta2=.999, eps=1e-8):
    Adam(store, lr, beta1, beta2, eps).step()
