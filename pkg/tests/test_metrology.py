from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from floquet_maser.bloch import TimeSeries
from floquet_maser.metrology import (INVERSE_FIT_A, INVERSE_FIT_B_AC, MU0, NOISE_FLOOR, QUOTED_CHAIN_RATIO,
                                     AxionParams, ResponseModel, SensitivityCurve,
                                     axion_effective_field, axion_frequency, axion_mass,
                                     axion_reach, coupling_limit, coupling_sensitivity,
                                     effective_detection_field, field_sensitivity, noise_floor,
                                     quoted_coupling_sensitivity, predicted_response,
                                     write_axion_csv)
from floquet_maser.spectral import psd


def test_effective_field_si_regression():
    assert effective_detection_field(1.0, 500.0) == pytest.approx(4.18879020e-4, rel=1e-8)
    assert effective_detection_field(1.0, 500.0) == pytest.approx(2 / 3 * MU0 * 500)


def test_gaussian_and_si_forms_agree():
    # 1 emu/cm^3 = 1e3 A/m, 1 G = 1e-4 T
    si = effective_detection_field(1e3, 500.0)
    cgs = effective_detection_field(1.0, 500.0, gaussian=True)
    assert si == pytest.approx(cgs * 1e-4, rel=1e-9)
    with pytest.raises(ValueError):
        effective_detection_field(1.0, 0.0)


def test_field_sensitivity_values():
    model = ResponseModel()
    at_mhz = field_sensitivity(NOISE_FLOOR, model, 1e-3)
    assert 7.0e-15 <= at_mhz <= 7.5e-15
    assert field_sensitivity(NOISE_FLOOR, model, 1.0) / at_mhz == pytest.approx(1000.0, rel=1e-12)
    with pytest.raises(ValueError):
        field_sensitivity(NOISE_FLOOR, model, 0.0)


@given(st.floats(1e-4, 100.0), st.floats(1e-4, 100.0))
def test_field_sensitivity_linear_in_frequency(a, b):
    model = ResponseModel()
    ratio = field_sensitivity(1.0, model, a) / field_sensitivity(1.0, model, b)
    assert ratio == pytest.approx(a / b, rel=1e-12)


def test_response_model():
    r = predicted_response(2.25, 1.0)
    assert r.volts == pytest.approx(0.0055 * 2.25)
    assert not r.nonlinear
    assert predicted_response(100.0, 0.5).nonlinear
    assert ResponseModel.from_inverse_fit(INVERSE_FIT_A).kappa == pytest.approx(INVERSE_FIT_A / INVERSE_FIT_B_AC)
    with pytest.raises(ValueError):
        ResponseModel(kappa=0.0)


def test_noise_floor_from_white_noise():
    rng = np.random.default_rng(4)
    fs = 100.0
    x = NOISE_FLOOR * math.sqrt(fs / 2) * rng.standard_normal(100_000)
    t = np.arange(x.size) / fs
    x = x + 0.1 * np.cos(2 * math.pi * 8.85 * t)
    spec = psd(TimeSeries(x, 1 / fs), "averaged-segments")
    assert noise_floor(spec, [(8.5, 9.2)]) == pytest.approx(NOISE_FLOOR, rel=0.05)
    with pytest.raises(ValueError):
        noise_floor(spec, [(0.0, 50.0)])


def test_axion_conversions():
    assert axion_frequency(1e-15) == pytest.approx(0.2418, rel=1e-3)
    assert axion_mass(axion_frequency(3e-18)) == pytest.approx(3e-18, rel=1e-12)
    with pytest.raises(ValueError):
        axion_frequency(0.0)
    assert axion_effective_field(1.0) == pytest.approx(6e-8 / 1.5)
    with pytest.raises(ValueError):
        AxionParams(mass=0.0)


def test_explicit_chain_and_quoted_constant_differ():
    curve = SensitivityCurve.from_model(NOISE_FLOOR, ResponseModel(), [1e-3, 1.0])
    explicit = coupling_sensitivity(curve, 1.0)
    assert explicit == pytest.approx(1.8e-4, rel=0.02)
    assert quoted_coupling_sensitivity(1.0) == pytest.approx(2.7e-5)
    assert explicit / quoted_coupling_sensitivity(1.0) == pytest.approx(6.7, rel=0.02)
    assert QUOTED_CHAIN_RATIO == pytest.approx(6.67, rel=0.01)


def test_coupling_limit():
    assert coupling_limit(quoted_coupling_sensitivity(1e-3), 1e4) == pytest.approx(2.7e-10)
    with pytest.raises(ValueError):
        coupling_limit(1.0, 0.0)


def test_curve_interpolation_and_io(tmp_path):
    curve = SensitivityCurve.from_model(NOISE_FLOOR, ResponseModel(), [1e-3, 1e-2, 1e-1])
    assert curve.at(5e-3) == pytest.approx(field_sensitivity(NOISE_FLOOR, ResponseModel(), 5e-3))
    with pytest.raises(ValueError):
        curve.at(1.0)
    curve.to_csv(tmp_path / "c.csv")
    rows = axion_reach(curve, 1e4, quoted_constants=True)
    assert rows[0][2] == pytest.approx(2.7e-10)
    write_axion_csv(rows, tmp_path / "a.csv")
    assert (tmp_path / "a.csv").read_text().startswith("mass_ev,freq_hz,g_ann_limit")
