from __future__ import annotations

import json
import math

import pytest
from hypothesis import given, strategies as st

from floquet_maser.core import (ConfigError, ExperimentConfig, PhysicalConstants,
                                PolarizationState, larmor_frequency, load_config,
                                modulation_index, save_config, validate_config)


def test_larmor_frequency_of_bias():
    assert larmor_frequency(750e-9) == pytest.approx(8.85, rel=1e-12)
    assert larmor_frequency(-750e-9) == pytest.approx(8.85, rel=1e-12)
    assert larmor_frequency(0.0) == 0.0


def test_modulation_index_values():
    assert modulation_index(56.15e-9, 0.9) == pytest.approx(0.7362, abs=1e-4)
    assert modulation_index(2.25e-9, 1.0) == pytest.approx(0.02655, rel=1e-12)
    with pytest.raises(ValueError):
        modulation_index(1e-9, 0.0)


@given(st.floats(1e-12, 1e-6), st.floats(1e-3, 100.0))
def test_modulation_index_positive_and_linear(b, nu):
    m = modulation_index(b, nu)
    assert m > 0
    assert modulation_index(2 * b, nu) == pytest.approx(2 * m, rel=1e-12)


def test_constants_require_negative_gyromagnetic_ratio():
    with pytest.raises(ValueError):
        PhysicalConstants(gamma_xe=1.18e7)
    with pytest.raises(ValueError):
        PhysicalConstants(g_n=1.5)


def test_ev_hz_roundtrip():
    c = PhysicalConstants()
    assert c.ev_to_hz(1e-15) == pytest.approx(0.2418, rel=1e-3)
    assert c.hz_to_ev(c.ev_to_hz(3e-17)) == pytest.approx(3e-17, rel=1e-14)


def test_polarization_state_norm():
    s = PolarizationState(0.6, 0.0, 0.8)
    assert s.norm == pytest.approx(1.0)
    assert s.transverse == pytest.approx(0.6)
    assert s.is_physical()
    assert not PolarizationState(1.0, 0.1, 0.0).is_physical()


def test_default_config_is_valid():
    assert validate_config(ExperimentConfig()) == []


@pytest.mark.parametrize("field,value", [
    ("duration", 0.0), ("t2", 0.0), ("t1", -1.0), ("p0", 1.5), ("theta0", 4.0),
    ("sample_rate", 30.0), ("integrator", "euler"), ("b_ac", -1e-9), ("rtol", 0.0),
    ("noise_rms", -1.0), ("p_rb", 2.0), ("step", -0.1),
])
def test_violations_name_the_field(field, value):
    problems = validate_config(ExperimentConfig(**{field: value}))
    assert problems
    assert any(p.startswith(field + ":") for p in problems)


def test_nan_is_rejected():
    assert validate_config(ExperimentConfig(chi=math.nan))


def test_infinite_relaxation_is_allowed():
    assert validate_config(ExperimentConfig(t1=math.inf, t2=math.inf)) == []


def test_config_json_roundtrip(tmp_path):
    cfg = ExperimentConfig(b0=-750e-9, chi=1e-6, t1=math.inf, p_rb=-0.5)
    path = tmp_path / "c.json"
    save_config(cfg, path)
    assert load_config(path) == cfg


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"b0": 1e-6, "colour": "red"}))
    with pytest.raises(ConfigError, match="colour"):
        load_config(bad)
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_derived_properties():
    cfg = ExperimentConfig(b0=-1e-6, p0=0.02, duration=1.0, sample_rate=100.0)
    assert cfg.bias_sign == -1.0
    assert cfg.pumping_polarization == -0.5
    assert cfg.seed == pytest.approx(2e-8)
    assert cfg.n_samples == 101
