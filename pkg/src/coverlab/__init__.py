"""Cover times, hitting times and quasi-stationary bounds for random walks."""

__version__ = "0.1.0"
