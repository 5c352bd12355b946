"""Input validation helpers shared by the estimators and functional API."""

from numbers import Integral

import numpy as np


def as_samples(x, *, name="x", allow_empty=True):
    """Return the complex sample vector held by `x`.

    `x` may be a :class:`~fdsic.signal.ComplexSignal` or anything numpy can
    turn into a 1-D array.
    """
    samples = getattr(x, "samples", x)
    arr = np.asarray(samples)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not allow_empty and arr.size == 0:
        raise ValueError(f"{name} is empty")
    arr = arr.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf samples")
    return arr


def as_tx_matrix(X, *, name="X"):
    """Coerce transmit data to shape ``(n_samples, n_tx)`` complex.

    A 1-D input is treated as a single transmit stream.
    """
    X = np.asarray(getattr(X, "samples", X))
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got shape {X.shape}")
    X = X.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(X)):
        raise ValueError(f"{name} contains NaN or Inf samples")
    return X


def check_int(value, name, *, min_value=None):
    if not isinstance(value, Integral) or isinstance(value, bool):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if min_value is not None and value < min_value:
        raise ValueError(f"{name} must be >= {min_value}, got {value}")
    return int(value)


def check_window(n_available, memory_len, n_obs, *, name="n_obs"):
    """Validate an observation window and return ``(M, N)``.

    ``n_obs=None`` uses every available sample.
    """
    memory_len = check_int(memory_len, "memory_len", min_value=1)
    if n_obs is None:
        n_obs = n_available
    n_obs = check_int(n_obs, name, min_value=1)
    if n_obs > n_available:
        raise ValueError(f"{name}={n_obs} exceeds available samples ({n_available})")
    if memory_len > n_obs:
        raise ValueError(f"memory_len={memory_len} exceeds {name}={n_obs}")
    return memory_len, n_obs

