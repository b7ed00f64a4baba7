from .checkpoint import save_checkpoint, load_checkpoint
from .hdf5 import RealizationStore
from .pandas_res import ResultHandler
