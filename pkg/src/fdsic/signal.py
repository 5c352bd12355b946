"""Complex-baseband containers, power units and least-squares primitives.

Power convention used throughout the package: the mean of ``|x|**2`` is the
power in watts delivered into the reference impedance. A complex tone of
amplitude ``A`` therefore carries ``A**2`` watts.
"""

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._validation import as_samples

#: Reported by :func:`power_dbm` for an all-zero signal.
DBM_FLOOR = -np.inf

#: Condition number above which diagonal loading is applied.
LOADING_THRESHOLD = 1e12
#: Condition number above which a system is treated as rank deficient.
SINGULAR_THRESHOLD = 1e15


class ConditioningError(np.linalg.LinAlgError):
    """A least-squares system is too ill-conditioned to be solved."""

    def __init__(self, message, condition_number=None):
        super().__init__(message)
        self.condition_number = condition_number


@dataclass(frozen=True)
class ComplexSignal:
    """Finite block of complex baseband samples at a fixed sample rate."""

    samples: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        arr = np.array(as_samples(self.samples, name="samples"), dtype=np.complex128)
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)
        if not self.sample_rate_hz > 0:
            raise ValueError(f"sample_rate_hz must be positive, got {self.sample_rate_hz}")

    def __len__(self):
        return self.samples.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.samples, dtype=dtype)

    @property
    def duration_s(self):
        return self.samples.size / self.sample_rate_hz

    def power_dbm(self):
        return power_dbm(self)

    def scale(self, gain):
        """Return a copy with every sample multiplied by `gain`."""
        return ComplexSignal(self.samples * gain, self.sample_rate_hz)

    def with_samples(self, samples):
        return ComplexSignal(samples, self.sample_rate_hz)


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    watts = np.asarray(watts, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(watts) + 30.0


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


def linear_to_db(ratio):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(ratio, dtype=float))


def amplitude_for_dbm(dbm):
    """Amplitude scale that brings a unit-power signal to `dbm`."""
    return np.sqrt(dbm_to_watts(dbm))


def mean_power(x):
    x = as_samples(x, allow_empty=False)
    return float(np.mean(np.abs(x) ** 2))


def power_dbm(x):
    """Mean power of `x` in dBm; an all-zero signal yields ``-inf``."""
    p = mean_power(x)
    if p == 0.0:
        return DBM_FLOOR
    return float(watts_to_dbm(p))


def power_sum_dbm(*levels_dbm):
    """Incoherent (power) sum of levels given in dBm."""
    return float(watts_to_dbm(np.sum(dbm_to_watts(np.asarray(levels_dbm, dtype=float)))))


def build_convolution_matrix(x, memory_len, n_obs=None):
    """Covariance-windowed convolution matrix of `x`.

    Row ``r`` holds ``x[M-1+r], x[M-2+r], ..., x[r]`` so the matrix has
    ``N-M+1`` rows and ``M`` columns and ``X @ h`` gives samples ``M-1``
    through ``N-1`` of the linear convolution ``h * x``.

    Parameters
    ----------
    x : array_like or ComplexSignal
        Source samples.
    memory_len : int
        Number of columns ``M`` (FIR length).
    n_obs : int, optional
        Observation length ``N``. Defaults to ``len(x)``.

    Returns
    -------
    numpy.ndarray
        Complex matrix of shape ``(N - M + 1, M)``.
    """
    x = as_samples(x)
    if n_obs is None:
        n_obs = x.size
    if memory_len < 1:
        raise ValueError(f"memory_len must be >= 1, got {memory_len}")
    if n_obs > x.size:
        raise ValueError(f"n_obs={n_obs} exceeds signal length {x.size}")
    if memory_len > n_obs:
        raise ValueError(f"memory_len={memory_len} exceeds n_obs={n_obs}")
    windows = np.lib.stride_tricks.sliding_window_view(x[:n_obs], memory_len)
    return np.ascontiguousarray(windows[:, ::-1])


def least_squares(A, y, *, return_condition=False):
    """Solve ``min ||y - A h||**2`` by column-equilibrated QR.

    When the equilibrated condition number exceeds ``LOADING_THRESHOLD`` the
    normal equations are loaded with ``eps = 1e-12 * trace(A^H A) / cols``
    (solved through an augmented QR, never by forming ``A^H A``). Above
    ``SINGULAR_THRESHOLD`` a :class:`ConditioningError` is raised.
    """
    A = np.asarray(A)
    y = np.asarray(y)
    if A.ndim != 2:
        raise ValueError(f"A must be 2-D, got shape {A.shape}")
    rows, cols = A.shape
    if y.shape != (rows,):
        raise ValueError(f"y must have shape ({rows},), got {y.shape}")
    if rows < cols:
        raise ValueError(f"underdetermined system: {rows} rows < {cols} columns")
    dtype = np.result_type(A, y, np.float64)
    A = A.astype(dtype, copy=False)

    norms = np.linalg.norm(A, axis=0)
    dead = np.flatnonzero(norms == 0)
    if dead.size:
        raise ConditioningError(
            f"column(s) {dead.tolist()} identically zero; condition number is infinite",
            np.inf,
        )
    A_eq = A / norms
    Q, R = linalg.qr(A_eq, mode="economic")
    cond = np.linalg.cond(R)
    if not np.isfinite(cond) or cond > SINGULAR_THRESHOLD:
        raise ConditioningError(
            f"least-squares matrix is rank deficient (condition number {cond:.3e} "
            f"> {SINGULAR_THRESHOLD:.0e} after column equilibration)",
            cond,
        )
    if cond > LOADING_THRESHOLD:
        eps = 1e-12 * np.real(np.trace(A_eq.conj().T @ A_eq)) / cols
        A_aug = np.vstack([A_eq, np.sqrt(eps) * np.eye(cols, dtype=dtype)])
        y_aug = np.concatenate([y.astype(dtype, copy=False), np.zeros(cols, dtype=dtype)])
        Q, R = linalg.qr(A_aug, mode="economic")
        h_eq = linalg.solve_triangular(R, Q.conj().T @ y_aug)
    else:
        h_eq = linalg.solve_triangular(R, Q.conj().T @ y)
    h = h_eq / norms
    if return_condition:
        return h, float(cond)
    return h
