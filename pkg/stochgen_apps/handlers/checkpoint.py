"""Model checkpoints: a JSON manifest plus one little-endian float64 blob per parameter."""
from pathlib import Path

import numpy as np

from ..utils import save_to_json, load_from_json, atomic_write

MANIFEST = 'manifest.json'
FORMAT_VERSION = 1


def _blob_name(name):
    return name.replace('/', '_') + '.bin'


def save_checkpoint(path, weights, meta=None):
    """Write ``weights`` (name -> ndarray) and ``meta`` into the folder ``path``."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    entries = {}
    for name, arr in weights.items():
        arr = np.ascontiguousarray(arr, dtype='<f8')
        blob = _blob_name(name)
        atomic_write(path.joinpath(blob), lambda f, a=arr: f.write(a.tobytes()), mode='wb')
        entries[name] = dict(file=blob, shape=list(arr.shape))
    save_to_json(path.joinpath(MANIFEST), dict(version=FORMAT_VERSION, params=entries, meta=meta or {}))


def load_checkpoint(path):
    """Returns ``(weights, meta)``."""
    path = Path(path)
    manifest = load_from_json(path.joinpath(MANIFEST))
    assert manifest['version'] == FORMAT_VERSION, f'Unsupported checkpoint version {manifest["version"]}.'
    weights = {}
    for name, entry in manifest['params'].items():
        data = np.fromfile(str(path.joinpath(entry['file'])), dtype='<f8')
        weights[name] = data.reshape(entry['shape']).astype(np.float64)
    return weights, manifest['meta']
