from pathlib import Path

import numpy as np
import pandas as pd

from ..utils import atomic_write


class ResultHandler:
    """Collects result rows that share a set of fixed parameters and writes them to CSV."""

    def __init__(self, fix_params, changing_params, to_beginning=(), filename=None):
        self._fix = {k: (v.value if hasattr(v, 'value') else v) for k, v in fix_params.items()}
        self._changing = list(changing_params)
        self.res = pd.DataFrame(columns=list(self._fix) + self._changing)
        self.filename = filename

        # reorder columns:
        cols = list(self.res.columns)
        for c in to_beginning:
            cols.remove(c)
        self.res = self.res[list(to_beginning) + cols]

    def add(self, res_dict):
        assert len(self._changing) == len(res_dict), f'Expected {len(self._changing)} results. ' \
                                                     f'Got {len(res_dict)} instead.'
        assert all(k in self._changing for k in res_dict), 'Name of parameters are not match with ' \
                                                           'changing_params.'
        frame = pd.DataFrame({k: np.atleast_1d(v) for k, v in res_dict.items()})
        for key, val in self._fix.items():
            frame[key] = val
        frame = frame[list(self.res.columns)]
        self.res = frame if len(self.res) == 0 else pd.concat([self.res, frame], ignore_index=True)

    def save(self, filename=None, sep=';', index=False):
        assert filename is not None or self.filename is not None, 'filename must be defined!'
        if isinstance(filename, (str, Path)):
            self.filename = filename
        res = self.res
        atomic_write(self.filename, lambda f: res.to_csv(f, sep=sep, index=index))

    def __len__(self):
        return len(self.res)
