"""Input validation helpers shared by every module."""

import math

import numpy as np


def check_series(x, name, width=None, allow_empty=False):
    """Return ``x`` as a finite float64 array of shape (n,) or (n, width)."""
    arr = np.asarray(x, dtype=np.float64)
    if width is None:
        if arr.ndim != 1:
            raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    else:
        if arr.ndim == 1 and width == arr.shape[0] and arr.shape[0] != 0:
            arr = arr.reshape(1, width)
        if arr.ndim != 2 or arr.shape[1] != width:
            raise ValueError(f"{name} must have shape (n, {width}), got {arr.shape}")
    if not allow_empty and arr.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_bool_series(x, name, allow_empty=False):
    arr = np.asarray(x)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if not allow_empty and arr.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    if arr.dtype != bool:
        if arr.size and not np.all((arr == 0) | (arr == 1)):
            raise ValueError(f"{name} must be boolean")
        arr = arr.astype(bool)
    return arr


def check_aligned(n, **series):
    for name, s in series.items():
        if s is not None and len(s) != n:
            raise ValueError(f"{name} has length {len(s)}, expected {n}")


def check_finite_scalar(value, name, low=None, high=None, low_inclusive=True):
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"{name} must be a number, got {value!r}") from None
    if not math.isfinite(v):
        raise ValueError(f"{name} must be finite, got {value!r}")
    if low is not None:
        if (v < low) if low_inclusive else (v <= low):
            op = ">=" if low_inclusive else ">"
            raise ValueError(f"{name} must be {op} {low}, got {v}")
    if high is not None and v > high:
        raise ValueError(f"{name} must be <= {high}, got {v}")
    return v


def frozen_copy(x, dtype=None):
    """Copy to a read-only array so dataclasses holding it stay immutable."""
    if x is None:
        return None
    arr = np.array(x, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr
