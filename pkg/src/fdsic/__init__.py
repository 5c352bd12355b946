"""Waveform-level simulator for full-duplex MIMO self-interference cancellation."""

from .channel import SiChannel, SoiSource, apply_mimo_channel, generate_si_channel, rf_cancellation
from .config import ConfigError, SimConfig, config_hash, load, loads
from .estimation import (
    LinearChannelEstimate,
    LinearSIChannelEstimator,
    NonlinearCoeffs,
    NonlinearSICanceller,
    build_nonlinear_basis,
    digital_cancel,
    estimate_linear_channel,
    estimate_nonlinear_coeffs,
    measure_sinr,
    reconstruct_rx_input,
)
from .harness import SCENARIOS, SweepResult, run_link_budget, run_single, run_sweep
from .link_budget import LinkBudgetReport, cascaded_nf, component_power_sweep, noise_floor_dbm, sensitivity_dbm
from .rf_models import ReceiverChain, RxChainParams, StageParams
from .signal import ComplexSignal, ConditioningError, build_convolution_matrix, least_squares
from .waveform import OfdmParams, TxFrame, generate_frame

__version__ = "0.1.0"
