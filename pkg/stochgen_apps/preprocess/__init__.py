from .dataset_generation import build_window_dataset, build_windows, build_state_windows
from .marginals import MarginalSet, MarginalModel, to_gaussian, from_gaussian
