from enum import Enum
from pathlib import Path

import h5py
import numpy as np


class RealizationStore:
    """HDF5 container for many synthetic realizations of equal shape.

    Realizations are appended along the first axis of dataset ``x``
    (shape (R, m, n)), optional state labels go to ``y`` (shape (R, n)).
    Run parameters are stored as file attributes, readable with :meth:`get_meta`.
    """

    def __init__(self, filename, run_params=None):
        if run_params is None:
            run_params = {}
        self.filename = Path(filename)
        self.filename.parent.mkdir(parents=True, exist_ok=True)

        self.mode = None
        self.file = None
        self.dset_x = None
        self.dset_y = None
        self.run_params = self._validate_params(run_params)

    @staticmethod
    def _validate_params(params):
        validated = {}
        for key, val in params.items():
            if isinstance(val, Enum):
                validated[key] = val.value
            elif isinstance(val, (bool, np.bool_)):
                validated[key] = int(val)
            elif isinstance(val, (int, float, str)):
                validated[key] = val
            elif isinstance(val, (list, tuple)):
                validated[key] = np.asarray(val)
            elif val is None:
                validated[key] = np.nan
            else:
                raise ValueError(f'Can not save meta data with type {type(val)}.')
        return validated

    def _open(self, mode):
        self.mode = mode
        self.file = h5py.File(str(self.filename), self.mode, libver='latest')

    @staticmethod
    def _append(dset, data):
        start = dset.shape[0]
        dset.resize((start + data.shape[0], *data.shape[1:]))
        dset[start:, ...] = data

    def add_realizations(self, data, states=None):
        """Append realizations.

        Parameters
        ----------
        data : ndarray
            Shape (R, m, n).
        states : ndarray, optional
            Shape (R, n).
        """
        data = np.asarray(data, dtype=np.float64)
        if self.mode is None:
            self._open('w')
            self.dset_x = self.file.create_dataset('x', data=data, maxshape=(None, *data.shape[1:]),
                                                   compression='lzf', chunks=(1, *data.shape[1:]))
            if states is not None:
                states = np.asarray(states, dtype=np.int64)
                self.dset_y = self.file.create_dataset('y', data=states, maxshape=(None, *states.shape[1:]),
                                                       compression='lzf', chunks=(1, *states.shape[1:]))
        elif self.mode == 'r':
            raise IOError('Can not write file in read mode. Close it first.')
        else:
            self._append(self.dset_x, data)
            if self.dset_y is not None:
                assert states is not None, 'State labels were stored before, they are required.'
                self._append(self.dset_y, np.asarray(states, dtype=np.int64))

    def close(self):
        if self.mode == 'w':
            for key, val in self.run_params.items():
                self.file.attrs.create(key, val)
        self.mode = None
        if self.file is not None:
            self.file.close()
            self.file = None
            self.dset_x = None
            self.dset_y = None

    def _ensure_read(self):
        if self.mode is None:
            self._open('r')
        elif self.mode == 'w':
            raise IOError('Can not read from file in write mode. Close it first.')

    def get_data(self, ind=slice(None)):
        self._ensure_read()
        if isinstance(ind, np.ndarray) and ind.dtype == 'bool':
            ind = np.arange(len(ind))[ind]
        return self.file['x'][ind]

    def get_states(self, ind=slice(None)):
        self._ensure_read()
        if 'y' not in self.file:
            return None
        return self.file['y'][ind]

    def get_meta(self, key):
        self._ensure_read()
        return self.file.attrs[key]

    def __len__(self):
        self._ensure_read()
        return self.file['x'].shape[0]

    def __del__(self):
        self.close()
