"""Input-validation helpers shared by the estimator, engine, and CLI."""

import math

import numpy as np


def as_float_vector(y, name="y"):
    """Coerce to a 1-D float64 array of finite values with at least one entry."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise ValueError(f"{name} must contain at least one value")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


def check_positive_scalar(x, name):
    x = float(x)
    if not (math.isfinite(x) and x > 0):
        raise ValueError(f"{name} must be a positive finite value")
    return x


def check_fraction(x, name):
    x = float(x)
    if not (0.0 <= x <= 1.0):
        raise ValueError(f"{name} must lie in [0, 1]")
    return x
