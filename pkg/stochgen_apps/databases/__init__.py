from .sde import SdeParams, SdeOracles, milstein_simulate, sde_realizations
from .series import TimeStampVector, TimeSeriesMatrix, MarkovStateSequence, concat_realizations
from .wind import wind_preprocess, wind_postprocess_inverse, PreprocessRecord
