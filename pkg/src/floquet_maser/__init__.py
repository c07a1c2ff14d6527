"""Feedback Bloch simulation and Floquet sideband analysis of a driven 129Xe spin maser."""

from __future__ import annotations

__version__ = "0.1.0"

from .analytic import (TransientParams, damping_time_from_gain, effective_t2,
                       frequency_pulling, gain_from_damping_time, is_masing, peak_time,
                       transient_envelope)
from .bloch import SimResult, TimeSeries, integrate, read_series_csv
from .core import (DEFAULT_CONSTANTS, ConfigError, ExperimentConfig, PhysicalConstants,
                   PolarizationState, larmor_frequency, load_config, modulation_index,
                   save_config, validate_config)
from .fitting import FitResult, fit_exp_decay, fit_inverse_freq, fit_linear, fit_sech
from .floquet import SidebandModel, bessel_j, fm_oracle, sideband_spectrum, transition_amplitude
from .spectral import Peak, Spectrum, amplitude_spectrum, demodulate, find_peaks, fwhm, psd

__all__ = [
    "ConfigError", "DEFAULT_CONSTANTS", "ExperimentConfig", "FitResult", "Peak",
    "PhysicalConstants", "PolarizationState", "SidebandModel", "SimResult", "Spectrum",
    "TimeSeries", "TransientParams", "amplitude_spectrum", "bessel_j", "damping_time_from_gain",
    "demodulate", "effective_t2", "find_peaks", "fit_exp_decay", "fit_inverse_freq",
    "fit_linear", "fit_sech", "fm_oracle", "frequency_pulling", "fwhm", "gain_from_damping_time",
    "integrate", "is_masing", "larmor_frequency", "load_config", "modulation_index",
    "peak_time", "psd", "read_series_csv", "save_config", "sideband_spectrum",
    "transient_envelope", "transition_amplitude", "validate_config",
]
