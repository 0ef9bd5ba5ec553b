"""Input validation helpers shared by the estimators."""

import numpy as np
from sklearn.utils import check_array

from .config import ExperimentConfig
from .exceptions import PreconditionError


def check_positions(X, allow_empty=True):
    """Return screen positions as a finite 1-D float array.

    Accepts a sequence, a 1-D array, or an ``(n, 1)`` column.
    """
    X = np.asarray(X, dtype=float)
    if X.size == 0:
        if not allow_empty:
            raise PreconditionError("X", "no positions given")
        return np.zeros(0)
    if X.ndim == 2 and X.shape[1] == 1:
        X = X[:, 0]
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim != 1:
        raise PreconditionError("X", f"expected 1-D positions or an (n, 1) column, got shape {X.shape}")
    return X


def check_config(config):
    if not isinstance(config, ExperimentConfig):
        raise PreconditionError("config", f"expected ExperimentConfig, got {type(config).__name__}")
    return config
