"""Measurements on simulated records: envelopes, decay rates, line frequencies, sidebands."""

from __future__ import annotations

import math

import numpy as np

from .bloch import SimResult, TimeSeries
from .core import DEFAULT_CONSTANTS, larmor_frequency
from .fitting import fit_exp_decay
from .spectral import amplitude_spectrum, demodulate, phase_slope_frequency


def _signal(record) -> TimeSeries:
    if isinstance(record, SimResult):
        gain = record.meta["config"]["detector_gain"]
        return TimeSeries(record.detected.values / gain, record.detected.dt, record.detected.t0)
    return record


def carrier_frequency(record, start: float = 0.0, pad: int = 4) -> float:
    """Frequency of the strongest spectral line (Hann window, parabolic refinement)."""
    s = _signal(record).window(start)
    spec = amplitude_spectrum(s, "hann", pad=pad)
    v = spec.values
    v0 = v.copy()
    v0[: max(1, int(0.5 / spec.bin_hz))] = 0.0  # ignore DC and sub-0.5 Hz drift
    i = int(np.argmax(v0))
    if 0 < i < len(v) - 1:
        a, b, c = np.log(v[i - 1] + 1e-300), np.log(v[i] + 1e-300), np.log(v[i + 1] + 1e-300)
        d = 0.5 * (a - c) / (a - 2 * b + c) if a - 2 * b + c != 0 else 0.0
        return float(spec.freqs[i] + d * spec.bin_hz)
    return float(spec.freqs[i])


def envelope(record, ref_freq: float | None = None, lp_cutoff: float | None = None,
             start: float = 0.0, stop: float | None = None):
    """Demodulated transverse envelope and phase of a record.

    ``ref_freq`` defaults to the Larmor frequency of the run (SimResult) or
    the strongest line.
    """
    s = _signal(record).window(start, stop)
    if ref_freq is None:
        if isinstance(record, SimResult):
            ref_freq = larmor_frequency(record.meta["config"]["b0"], DEFAULT_CONSTANTS)
        else:
            ref_freq = carrier_frequency(s)
    if lp_cutoff is None:
        lp_cutoff = min(2.0, ref_freq / 4.0)
    return demodulate(s, ref_freq, lp_cutoff)


def decay_rate(record, start: float = 0.0, stop: float | None = None, floor: float = 0.02):
    """Exponential fit to the demodulated envelope; returns the FitResult.

    Only samples above ``floor`` times the envelope maximum are used, so the
    fit is not dominated by the noise-free zero tail.
    """
    env, _ = envelope(record, start=start, stop=stop)
    keep = np.nonzero(env.values >= floor * env.values.max())[0]
    env = TimeSeries(env.values[: keep[-1] + 1], env.dt, env.t0)
    return fit_exp_decay(env)


def stationary_drift(env: TimeSeries, fraction: float = 0.25) -> float:
    """Peak-to-peak variation of the envelope over its final ``fraction``, relative to its mean."""
    n = len(env)
    tail = env.values[int(n * (1 - fraction)):]
    return float(np.ptp(tail) / np.mean(tail))


def oscillation_frequency(record, start: float, ref_freq: float | None = None) -> float:
    """Mean oscillation frequency from the demodulated phase slope after ``start``."""
    s = _signal(record)
    if ref_freq is None:
        ref_freq = carrier_frequency(s, start)
    _, phase = envelope(s, ref_freq=ref_freq, lp_cutoff=min(0.5, ref_freq / 4), start=start)
    return ref_freq + phase_slope_frequency(phase)


def sideband_amplitudes(record, nu_ac: float, orders=(-2, -1, 0, 1, 2), start: float = 0.0,
                        carrier: float | None = None, pad: int = 4) -> dict[int, float]:
    """Line heights at ``carrier + k*nu_ac`` (largest value within one resolution bin)."""
    s = _signal(record).window(start)
    spec = amplitude_spectrum(s, "hann", pad=pad)
    if carrier is None:
        carrier = carrier_frequency(s)
    out = {}
    for k in orders:
        f = carrier + k * nu_ac
        if not 0 < f < spec.freqs[-1]:
            out[k] = math.nan
            continue
        out[k] = spec.local_max(f, spec.resolution_hz)[1]
    return out


def run_summary(result: SimResult, start: float = 0.0) -> dict[str, float]:
    """Per-run numbers aggregated by parameter scans."""
    cfg = result.meta["config"]
    out = {"fitted_rate": math.nan, "sideband_amplitude": math.nan, "maser_frequency": math.nan}
    try:
        out["fitted_rate"] = decay_rate(result, start=start).params["rate"]
    except (ValueError, np.linalg.LinAlgError):
        pass
    out["maser_frequency"] = carrier_frequency(result, start)
    if cfg["b_ac"] > 0 and cfg["nu_ac"] > 0:
        amps = sideband_amplitudes(result, cfg["nu_ac"], orders=(1,), start=start,
                                   carrier=out["maser_frequency"])
        out["sideband_amplitude"] = amps[1] * cfg["detector_gain"]
    return out
