import datetime
import hashlib
import json
import logging
import os
import tempfile
from json import dump as json_dump, load as json_load
from pathlib import Path

import numpy as np
from psutil import cpu_count

LOGGER_NAME = 'stochgen_apps'
LOG_FORMAT = '%(asctime)s : %(name)s %(levelname)s: %(message)s'


def window_data(data, window_length, window_step=1):
    """Windower method which windows a given signal in to a given window size.

    Returns a read-only strided view, nothing is copied.

    Parameters
    ----------
    data : ndarray
        Data to be windowed. Shape: (..., time)
    window_length : int
        Number of time steps in one window.
    window_step : int
        Step of sliding window in time steps.

    Returns
    -------
    ndarray
        Windowed data with shape (n_windows, ..., window_length)
    """
    data = np.asarray(data)
    if window_step <= 0:
        raise ValueError(f'window_step parameter must be positive. '
                         f'Got {window_step} instead.')
    n_windows = (data.shape[-1] - window_length) // window_step + 1
    assert n_windows > 0, f'Can not create {n_windows} windows.'
    new_shape = (n_windows, *data.shape[:-1], window_length)
    new_strides = (window_step * data.strides[-1], *data.strides)
    return np.lib.stride_tricks.as_strided(data, shape=new_shape, strides=new_strides,
                                           writeable=False)


def get_n_jobs(n_jobs):
    """Resolve joblib style ``n_jobs``: -1 means every physical core."""
    if n_jobs is None:
        return 1
    if n_jobs < 0:
        return max(cpu_count(logical=False) or 1, 1)
    return n_jobs


def spawn_seeds(seed, n):
    """Derive ``n`` independent child seeds from a master seed."""
    children = np.random.SeedSequence(seed).spawn(n)
    return [int(c.generate_state(1)[0]) for c in children]


def stage_seed(seed, stage):
    """Stable seed for a named pipeline stage."""
    key = int.from_bytes(hashlib.sha256(stage.encode()).digest()[:4], 'little')
    return int(np.random.SeedSequence([seed, key]).generate_state(1)[0])


def atomic_write(filename, write_fn, mode='w'):
    """Write through a temporary file in the same folder, then rename."""
    filename = Path(filename)
    filename.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(filename.parent), prefix=filename.name + '.', suffix='.tmp')
    try:
        with os.fdopen(fd, mode) as f:
            write_fn(f)
        os.replace(tmp, filename)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)


def load_from_json(filename):
    with open(str(filename)) as json_file:
        data_dict = json_load(json_file)
    return data_dict


def save_to_json(filename, data_dict):
    atomic_write(filename, lambda f: json_dump(data_dict, f, indent='\t', sort_keys=True))


def config_hash(config_dict):
    text = json.dumps(config_dict, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def setup_logger(logger_name=LOGGER_NAME, log_to_stream=True, log_file=None, log_dir='log/',
                 verbose=True):
    """Logger creation function.

    This function creates a logger, which has a separated log file, where it will append the logs.

    Parameters
    ----------
    logger_name : str
        Name of logger.
    log_to_stream : bool
        Log info to the stream.
    log_file : str
        This string will be added to the filename. By default, the filename contains
        the creation time and the .log extension
    log_dir : str
        The path where to save the .log files.
    verbose : bool
        The level of log. If true: info

    Returns
    -------
    logging.Logger
    """
    level = logging.INFO if verbose else logging.WARNING
    logger = logging.getLogger(logger_name)
    formatter = logging.Formatter(LOG_FORMAT)
    logger.setLevel(level)

    if log_file is not None:
        Path(log_dir).mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(
            str(Path(log_dir).joinpath('{}_{}.log'.format(
                log_file, datetime.datetime.now().strftime('%Y-%m-%d_%H-%M')))), mode='a')
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    if log_to_stream and not any(isinstance(h, logging.StreamHandler) and
                                 not isinstance(h, logging.FileHandler)
                                 for h in logger.handlers):
        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(formatter)
        logger.addHandler(stream_handler)
    return logger
