from .correlation import correlation_correct, spatial_correlation
from .reshuffle import reshuffle
