import logging
from abc import ABC, abstractmethod

import numpy as np

from .autograd import backward, no_grad
from .layers import Layer
from .optimizer import ParamStore, Adam
from ..exceptions import NonFiniteResult
from ..handlers.checkpoint import save_checkpoint, load_checkpoint

logger = logging.getLogger(__name__)


class StateGeneratorInterface(ABC):
    """Common surface of the count-based and the neural state generators."""

    @abstractmethod
    def fit(self, states, stamps=None, **kwargs):
        raise NotImplementedError

    @abstractmethod
    def generate(self, init_states, stamps, n_steps, seed=None):
        raise NotImplementedError


class Callback:

    def __init__(self):
        self.model = None

    def set_model(self, model):
        self.model = model

    def on_train_begin(self, logs=None):
        pass

    def on_epoch_begin(self, epoch, logs=None):
        pass

    def on_epoch_end(self, epoch, logs=None):
        pass

    def on_train_end(self, logs=None):
        pass


class LearningRateSchedule(Callback):
    """Piecewise constant learning rate.

    ``drops`` maps a 1-based epoch number to the learning rate used from that
    epoch on.
    """

    def __init__(self, initial_lr, drops=None):
        super().__init__()
        self.initial_lr = initial_lr
        self.drops = dict(drops or {})

    def lr_at(self, epoch):
        lr = self.initial_lr
        for ep in sorted(self.drops):
            if epoch + 1 >= ep:
                lr = self.drops[ep]
        return lr

    def on_epoch_begin(self, epoch, logs=None):
        self.model.optimizer.lr = self.lr_at(epoch)


class EarlyStopping(Callback):

    def __init__(self, monitor='val_loss', patience=3, min_delta=0.):
        super().__init__()
        self.monitor = monitor
        self.patience = patience
        self.min_delta = min_delta
        self.best = np.inf
        self.wait = 0
        self.stopped_epoch = None

    def on_train_begin(self, logs=None):
        self.best = np.inf
        self.wait = 0
        self.stopped_epoch = None

    def on_epoch_end(self, epoch, logs=None):
        current = (logs or {}).get(self.monitor)
        if current is None:
            logger.warning(f'Early stopping conditioned on metric {self.monitor} which is not available.')
            return
        if current < self.best - self.min_delta:
            self.best = current
            self.wait = 0
            return
        self.wait += 1
        if self.wait >= self.patience:
            self.stopped_epoch = epoch
            self.model.stop_training = True
            logger.info(f'Early stopping at epoch {epoch + 1}, best {self.monitor}={self.best:.6g}')


class SaveAndRestoreBestModel(Callback):
    """Keep the weights of the epoch with the lowest monitored loss and restore them at the end."""

    def __init__(self, monitor='val_loss'):
        super().__init__()
        self.monitor = monitor
        self.best_weights = None
        self.best_loss = np.inf
        self.epoch = 0

    def on_train_begin(self, logs=None):
        self.best_weights = None
        self.best_loss = np.inf

    def on_epoch_end(self, epoch, logs=None):
        current = (logs or {}).get(self.monitor)
        if current is not None and current < self.best_loss:
            self.epoch = epoch
            self.best_loss = current
            self.best_weights = self.model.store.get_weights()

    def on_train_end(self, logs=None):
        if self.best_weights is None:
            return
        logger.info(f'Restored model at epoch {self.epoch + 1} with {self.monitor}={self.best_loss:.6g}')
        self.model.store.set_weights(self.best_weights)


class BaseNet(Layer):
    """Trainable network with a mini-batch Adam loop and checkpointing.

    Subclasses build their layers in ``__init__`` and call :meth:`_init_store`,
    then implement :meth:`batch_loss`.
    """

    def __init__(self, seed=None):
        super().__init__()
        self.rng = np.random.default_rng(seed)
        self.store = None
        self.optimizer = None
        self.stop_training = False

    def _init_store(self):
        self.store = ParamStore(self.named_parameters())

    def batch_loss(self, dataset, ind):
        raise NotImplementedError("Loss function is not implemented")

    def config(self):
        return {}

    def evaluate(self, dataset, batch_size=512):
        """Batch-size weighted mean loss in inference mode."""
        was_training = self.training
        self.eval()
        total, count = 0., 0
        with no_grad():
            for ind in dataset.batches(batch_size):
                total += float(self.batch_loss(dataset, ind).data) * len(ind)
                count += len(ind)
        self.train(was_training)
        return total / count

    def fit(self, train, validation=None, *, epochs=20, batch_size=128, learning_rate=1e-4,
            lr_drops=None, patience=3, shuffle=True, max_steps=None, callbacks=None):
        """Train with Adam, returns the history dict of per-epoch losses."""
        callbacks = list(callbacks or [])
        callbacks.insert(0, LearningRateSchedule(learning_rate, lr_drops))
        if validation is not None:
            callbacks.extend((SaveAndRestoreBestModel(), EarlyStopping(patience=patience)))
        self.optimizer = Adam(self.store, learning_rate)
        self.stop_training = False
        history = dict(loss=[], val_loss=[], lr=[])
        for cb in callbacks:
            cb.set_model(self)
            cb.on_train_begin()

        n_steps = 0
        for epoch in range(epochs):
            for cb in callbacks:
                cb.on_epoch_begin(epoch)
            self.train()
            total, count = 0., 0
            for ind in train.batches(batch_size, shuffle, self.rng):
                self.store.zero_grad()
                loss = self.batch_loss(train, ind)
                if not np.isfinite(loss.data):
                    raise NonFiniteResult(f'Training loss became {float(loss.data)} at epoch {epoch + 1}.')
                backward(loss)
                self.optimizer.step()
                total += float(loss.data) * len(ind)
                count += len(ind)
                n_steps += 1
                if max_steps is not None and n_steps >= max_steps:
                    break
            logs = dict(loss=total / count)
            if validation is not None:
                logs['val_loss'] = self.evaluate(validation, batch_size)
            history['loss'].append(logs['loss'])
            history['val_loss'].append(logs.get('val_loss'))
            history['lr'].append(self.optimizer.lr)
            logger.info(f'{type(self).__name__} epoch {epoch + 1}/{epochs}: ' +
                        ', '.join(f'{k}={v:.6g}' for k, v in logs.items()))
            for cb in callbacks:
                cb.on_epoch_end(epoch, logs)
            if self.stop_training or (max_steps is not None and n_steps >= max_steps):
                break
        for cb in callbacks:
            cb.on_train_end()
        self.eval()
        return history

    def save(self, path):
        save_checkpoint(path, self.store.get_weights(), dict(model=type(self).__name__, config=self.config()))

    def load_weights(self, path):
        weights, _ = load_checkpoint(path)
        self.store.set_weights(weights)
        return self
