"""Two-stage digital self-interference cancellation.

Stage A fits a linear MIMO FIR from the known transmit streams to the
digitized receiver output, using a capture at reduced transmit power where
the receiver chain is effectively linear. The fitted channel, which absorbs
the chain gain, then regenerates the receiver-input SI for any capture.

Stage B regresses a capture at operating power onto the four-term basis
``[x, |x|**2, |x|**2*x, conj(x)**3]`` of that regenerated input. Payload
samples are cancelled by subtracting the fitted model. The AGC gain must stay
frozen between stage B and the payload.
"""

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_samples, as_tx_matrix, check_window
from .signal import build_convolution_matrix, least_squares, mean_power

N_TERMS = 4
TERM_NAMES = ("x", "|x|^2", "|x|^2 x", "conj(x)^3")


@dataclass(frozen=True)
class LinearChannelEstimate:
    """Per-transmitter FIR estimates for one receiver.

    ``taps[j]`` is the length-``memory_len`` response from transmitter ``j``;
    :attr:`stacked` orders them as ``[h_1; h_2; ...]``.
    """

    taps: np.ndarray
    memory_len: int
    n_obs: int

    @property
    def n_tx(self):
        return self.taps.shape[0]

    @property
    def stacked(self):
        return self.taps.reshape(-1)

    def to_dict(self):
        return {
            "memory_len": self.memory_len,
            "n_obs": self.n_obs,
            "taps": [[[z.real, z.imag] for z in row] for row in self.taps],
        }


@dataclass(frozen=True)
class NonlinearCoeffs:
    """Coefficients of ``x``, ``|x|^2``, ``|x|^2 x`` and ``conj(x)^3``."""

    a: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=np.complex128)
        if a.shape != (N_TERMS,):
            raise ValueError(f"expected {N_TERMS} coefficients, got shape {a.shape}")
        object.__setattr__(self, "a", a)

    def to_dict(self):
        return {name: [z.real, z.imag] for name, z in zip(TERM_NAMES, self.a)}


def export_estimates(path, linear=None, nonlinear=None):
    """Dump estimates as labeled JSON for debugging."""
    out = {}
    if linear is not None:
        out["linear_channel"] = linear.to_dict()
    if nonlinear is not None:
        out["nonlinear_coeffs"] = nonlinear.to_dict()
    with open(path, "w") as fh:
        json.dump(out, fh, indent=1)
        fh.write("\n")


def _tx_convolution_matrix(X, memory_len, n_obs):
    return np.hstack([build_convolution_matrix(X[:, j], memory_len, n_obs)
                      for j in range(X.shape[1])])


def estimate_linear_channel(y, tx, memory_len=5, n_obs=None):
    """Least-squares MIMO FIR from transmit streams to one receiver output.

    Parameters
    ----------
    y : array_like or ComplexSignal
        Receiver output of a low-power training capture.
    tx : TxFrame or array_like
        Known transmit streams, shape ``(n_tx, n_samples)`` at their
        transmitted scale (a 1-D array is a single stream).
    memory_len, n_obs : int
        Estimate length ``M`` and observation length ``N``.

    Raises
    ------
    ConditioningError
        If the stacked convolution matrix is rank deficient, e.g. two
        identical transmit streams.
    """
    X = as_tx_matrix(np.atleast_2d(getattr(tx, "samples", tx)).T)
    y = as_samples(y, name="y")
    if y.size != X.shape[0]:
        raise ValueError(f"y has {y.size} samples, tx has {X.shape[0]}")
    memory_len, n_obs = check_window(y.size, memory_len, n_obs)
    A = _tx_convolution_matrix(X, memory_len, n_obs)
    h = least_squares(A, y[memory_len - 1:n_obs])
    return LinearChannelEstimate(h.reshape(X.shape[1], memory_len), memory_len, n_obs)


def reconstruct_rx_input(tx, h):
    """Regenerate the receiver-input SI, ``sum_j h_j * x_j``, with zero state.

    The output carries the chain gain absorbed by `h`.
    """
    X = np.atleast_2d(np.asarray(getattr(tx, "samples", tx), dtype=np.complex128))
    if X.shape[0] != h.n_tx:
        raise ValueError(f"tx has {X.shape[0]} streams, estimate has {h.n_tx}")
    n = X.shape[1]
    out = np.zeros(n, dtype=np.complex128)
    for taps, x in zip(h.taps, X):
        out += np.convolve(x, taps)[:n]
    return out


def build_nonlinear_basis(x_in, memory_len=5, n_obs=None):
    """Columns ``x, |x|^2, |x|^2 x, conj(x)^3`` over samples ``M-1 .. N-1``."""
    x_in = as_samples(x_in, name="x_in")
    memory_len, n_obs = check_window(x_in.size, memory_len, n_obs)
    return _basis(x_in[memory_len - 1:n_obs])


def _basis(x):
    mag2 = np.abs(x) ** 2
    return np.column_stack([x, mag2, mag2 * x, np.conj(x) ** 3])


def estimate_nonlinear_coeffs(y, x_in, memory_len=5, n_obs=None, *, linear=False):
    """Least-squares fit of the four-term model to one receiver output.

    With ``linear=True`` only the first coefficient is fitted and the others
    are fixed to zero.

    Raises
    ------
    ConditioningError
        If the basis columns are collinear, e.g. for a constant-envelope
        input.
    """
    y = as_samples(y, name="y")
    x_in = as_samples(x_in, name="x_in")
    if y.size != x_in.size:
        raise ValueError(f"y has {y.size} samples, x_in has {x_in.size}")
    A = build_nonlinear_basis(x_in, memory_len, n_obs)
    memory_len, n_obs = check_window(x_in.size, memory_len, n_obs)
    target = y[memory_len - 1:n_obs]
    a = np.zeros(N_TERMS, dtype=np.complex128)
    if linear:
        a[:1] = least_squares(A[:, :1], target)
    else:
        a[:] = least_squares(A, target)
    return NonlinearCoeffs(a)


def regenerate_si(x_in, coeffs, *, linear=False):
    """SI model output for every sample of `x_in`."""
    x_in = as_samples(x_in, name="x_in")
    a = coeffs.a
    if linear:
        return a[0] * x_in
    return _basis(x_in) @ a


def digital_cancel(y, x_in, coeffs, *, linear=False):
    """Subtract the regenerated SI from `y`, sample aligned.

    ``linear=True`` subtracts only the ``a[0] * x`` path.
    """
    y = as_samples(y, name="y")
    x_in = as_samples(x_in, name="x_in")
    if y.size != x_in.size:
        raise ValueError(f"y has {y.size} samples, x_in has {x_in.size}")
    return y - regenerate_si(x_in, coeffs, linear=linear)


def measure_sinr(residual, soi_reference):
    """SINR in dB of `residual` against the known signal-of-interest component.

    Everything in ``residual - soi_reference`` counts as interference plus
    noise.
    """
    residual = as_samples(residual, name="residual", allow_empty=False)
    soi_reference = as_samples(soi_reference, name="soi_reference", allow_empty=False)
    if residual.size != soi_reference.size:
        raise ValueError("residual and soi_reference differ in length")
    p_soi = mean_power(soi_reference)
    p_rest = mean_power(residual - soi_reference)
    if p_rest == 0.0:
        return float("inf")
    return float(10.0 * np.log10(p_soi / p_rest))


class LinearSIChannelEstimator(BaseEstimator):
    """Linear MIMO FIR self-interference model.

    Parameters
    ----------
    memory_len : int, default=5
        FIR length per transmitter.
    n_obs : int or None, default=None
        Number of leading samples used for fitting; None uses all.

    Attributes
    ----------
    estimate_ : LinearChannelEstimate
    coef_ : ndarray, shape (n_tx, memory_len)
    n_features_in_ : int
        Number of transmit streams.

    Notes
    -----
    ``X`` has shape ``(n_samples, n_tx)``: one column per transmit stream.
    """

    def __init__(self, memory_len=5, n_obs=None):
        self.memory_len = memory_len
        self.n_obs = n_obs

    def fit(self, X, y):
        X = as_tx_matrix(X)
        self.estimate_ = estimate_linear_channel(y, X.T, self.memory_len, self.n_obs)
        self.coef_ = self.estimate_.taps
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Regenerated SI for transmit streams `X`."""
        check_is_fitted(self, "estimate_")
        X = as_tx_matrix(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} streams, estimator was fitted with {self.n_features_in_}")
        return reconstruct_rx_input(X.T, self.estimate_)

    def cancel(self, X, y):
        return as_samples(y, name="y") - self.predict(X)

    def score(self, X, y):
        """Achieved cancellation in dB over the fitted window."""
        return _cancellation_db(self, X, y)


class NonlinearSICanceller(BaseEstimator):
    """Nonlinear SI canceller driven by a prefitted linear channel estimate.

    Parameters
    ----------
    channel_estimator : LinearSIChannelEstimator
        Fitted on a low-power capture; it regenerates the receiver-chain input.
    n_obs : int or None, default=None
        Samples used for the coefficient fit; None uses all.
    linear : bool, default=False
        Fit and cancel only the linear term of the model.

    Attributes
    ----------
    coeffs_ : NonlinearCoeffs
    coef_ : ndarray, shape (4,)
    """

    def __init__(self, channel_estimator=None, n_obs=None, linear=False):
        self.channel_estimator = channel_estimator
        self.n_obs = n_obs
        self.linear = linear

    def _channel(self):
        if self.channel_estimator is None:
            raise ValueError("channel_estimator must be a fitted LinearSIChannelEstimator")
        check_is_fitted(self.channel_estimator, "estimate_")
        return self.channel_estimator

    def fit(self, X, y):
        ch = self._channel()
        x_in = ch.predict(X)
        self.coeffs_ = estimate_nonlinear_coeffs(y, x_in, ch.memory_len, self.n_obs, linear=self.linear)
        self.coef_ = self.coeffs_.a
        self.n_features_in_ = ch.n_features_in_
        return self

    def predict(self, X):
        check_is_fitted(self, "coeffs_")
        return regenerate_si(self._channel().predict(X), self.coeffs_, linear=self.linear)

    def cancel(self, X, y):
        check_is_fitted(self, "coeffs_")
        x_in = self._channel().predict(X)
        return digital_cancel(y, x_in, self.coeffs_, linear=self.linear)

    def score(self, X, y):
        return _cancellation_db(self, X, y)


def _cancellation_db(est, X, y):
    y = as_samples(y, name="y")
    start = est.channel_estimator.memory_len - 1 if hasattr(est, "channel_estimator") else est.memory_len - 1
    residual = est.cancel(X, y)[start:]
    return float(10.0 * np.log10(mean_power(y[start:]) / mean_power(residual)))
