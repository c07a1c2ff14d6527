from __future__ import annotations

import math

import numpy as np
import pytest

from floquet_maser.analysis import (carrier_frequency, decay_rate, envelope,
                                    oscillation_frequency, run_summary, sideband_amplitudes,
                                    stationary_drift)
from floquet_maser.analytic import effective_t2
from floquet_maser.bloch import TimeSeries, fixed_point_pz, integrate
from floquet_maser.core import larmor_frequency, validate_config
from floquet_maser.scenarios import (MASER_CALIBRATION_RATIO, PRESETS, T2_XE, damping_config,
                                     free_decay_config, maser_config, threshold_config,
                                     transient_config)


def synthetic(freq=8.85, tau=5.0, duration=40.0, fs=200.0):
    t = np.arange(0, duration, 1 / fs)
    return TimeSeries(0.01 * np.exp(-t / tau) * np.cos(2 * math.pi * freq * t), 1 / fs)


def test_carrier_frequency_of_synthetic_record():
    assert carrier_frequency(synthetic(freq=9.1234)) == pytest.approx(9.1234, abs=1e-3)


def test_envelope_and_decay_rate_of_synthetic_record():
    s = synthetic(tau=4.0)
    env, _ = envelope(s, ref_freq=8.85)
    assert env.values.max() == pytest.approx(0.01 * math.exp(-env.t0 / 4.0), rel=1e-3)
    assert decay_rate(s).params["rate"] == pytest.approx(0.25, rel=1e-3)


def test_oscillation_frequency_resolves_small_offsets():
    s = synthetic(freq=8.8512, tau=1e9, duration=100.0)
    assert oscillation_frequency(s, start=10.0) == pytest.approx(8.8512, abs=1e-6)


def test_stationary_drift():
    flat = TimeSeries(np.full(100, 2.0), 1.0)
    assert stationary_drift(flat) == 0.0
    ramp = TimeSeries(np.linspace(1.0, 2.0, 100), 1.0)
    assert stationary_drift(ramp) == pytest.approx(0.25 / 1.875, rel=0.05)


def test_sideband_amplitudes_of_driven_decay():
    r = integrate(free_decay_config(20e-9, 2.0))
    amps = sideband_amplitudes(r, 2.0)
    assert amps[1] < amps[0] and amps[-1] < amps[0]
    assert amps[1] == pytest.approx(amps[-1], rel=0.05)


def test_run_summary_fields():
    s = run_summary(integrate(damping_config(2.0)))
    assert s["fitted_rate"] == pytest.approx(1 / effective_t2(T2_XE, 2.0), rel=0.01)
    assert s["maser_frequency"] == pytest.approx(larmor_frequency(750e-9), abs=0.01)
    assert math.isnan(s["sideband_amplitude"])


def test_presets_are_valid():
    for name, make in PRESETS.items():
        assert validate_config(make()) == [], name


def test_maser_preset_starts_from_pumped_equilibrium():
    cfg = maser_config()
    assert cfg.b0 < 0 and cfg.p_rb == -0.5
    assert cfg.p0 == pytest.approx(abs(fixed_point_pz(cfg)))
    # threshold presets quote the damping time at the pumped polarization itself
    assert abs(threshold_config(0.5).chi) * MASER_CALIBRATION_RATIO == \
        pytest.approx(abs(maser_config(td=0.5 * T2_XE).chi))


def test_transient_preset_covers_the_burst():
    cfg = transient_config(0.94)
    assert cfg.duration > 10.0
    assert cfg.t1 == math.inf and cfg.gamma_se == 0.0
