"""Ready-made configurations for the experiments the package reproduces.

Feedback gains are set from a target damping time through
``gain_from_damping_time``.  The stationary-maser presets pump toward -z
with ``p_rb = -0.5`` and start from the pumped equilibrium polarization.
"""

from __future__ import annotations

import math

from .analytic import effective_t2, gain_from_damping_time, peak_time, q_factor
from .bloch import fixed_point_pz
from .core import ExperimentConfig

T1_XE = 21.5
T2_XE = 13.65
B0 = 750e-9
B_AC_FLOQUET = 56.15e-9
TRANSIENT_TIP = 0.95 * math.pi  # "theta0 ~ pi": an exact inversion never leaves equilibrium

# The stationary maser starts from a pumped polarization this many times the
# polarization at which its damping time is quoted.  This is what makes the
# initial collapse fast enough for the inverted Pz to swing positive.
MASER_CALIBRATION_RATIO = 4.0


def damping_config(td: float, theta0: float = math.pi / 15, p0: float = 0.01,
                   duration: float | None = None, **overrides) -> ExperimentConfig:
    """Small-tip free decay under feedback, longitudinal relaxation off."""
    if duration is None:
        duration = round(max(10.0, 6.0 * effective_t2(T2_XE, td)), 2)
    cfg = ExperimentConfig(b0=B0, chi=gain_from_damping_time(td, p0), t1=math.inf, t2=T2_XE,
                           gamma_se=0.0, p0=p0, theta0=theta0, duration=duration,
                           sample_rate=200.0)
    return cfg.with_updates(**overrides)


def transient_config(td: float, theta0: float = TRANSIENT_TIP, p0: float = 0.01,
                     duration: float | None = None, **overrides) -> ExperimentConfig:
    """Near-inverted start: transient maser burst when td < t2."""
    if duration is None:
        q = q_factor(theta0, T2_XE, td)
        t0 = max(peak_time(theta0, T2_XE, td).t0, 0.0)
        duration = round(t0 + 8.0 * T2_XE / q, 2)
    return damping_config(td, theta0=theta0, p0=p0, duration=duration, **overrides)


def maser_config(td: float = 6.25, b_ac: float = 0.0, nu_ac: float = 0.0,
                 duration: float = 400.0, seed: float = 1e-6,
                 calibration_ratio: float = MASER_CALIBRATION_RATIO,
                 **overrides) -> ExperimentConfig:
    """Continuously pumped, inverted ensemble with feedback (bias along -z).

    ``td`` is the damping time at polarization ``p_eq / calibration_ratio``,
    where ``p_eq`` is the pumped equilibrium.  ``calibration_ratio=1`` puts
    the threshold exactly at ``td = t2``.
    """
    base = ExperimentConfig(b0=-B0, b_ac=b_ac, nu_ac=nu_ac, t1=T1_XE, t2=T2_XE,
                            gamma_se=0.05, p_rb=-0.5, theta0=0.0, seed_transverse=seed,
                            duration=duration, sample_rate=50.0)
    p_eq = abs(fixed_point_pz(base))
    cfg = base.with_updates(p0=p_eq, chi=gain_from_damping_time(td, p_eq / calibration_ratio))
    return cfg.with_updates(**overrides)


def threshold_config(td_over_t2: float, duration: float = 400.0, **overrides) -> ExperimentConfig:
    """Maser with damping time quoted at the pumped polarization itself."""
    return maser_config(td=td_over_t2 * T2_XE, duration=duration, calibration_ratio=1.0,
                        **overrides)


def floquet_maser_config(nu_ac: float = 0.9, b_ac: float = B_AC_FLOQUET, td: float = 6.25,
                         duration: float = 400.0, **overrides) -> ExperimentConfig:
    """Driven stationary maser (0.9 Hz, 56.15 nT drive by default)."""
    return maser_config(td=td, b_ac=b_ac, nu_ac=nu_ac, duration=duration, **overrides)


def free_decay_config(b_ac: float, nu_ac: float, duration: float = 60.0,
                      theta0: float = math.pi / 15, **overrides) -> ExperimentConfig:
    """Driven free decay without feedback, for sideband calibration sweeps."""
    cfg = ExperimentConfig(b0=B0, b_ac=b_ac, nu_ac=nu_ac, chi=0.0, t1=T1_XE, t2=T2_XE,
                           gamma_se=0.0, p0=0.01, theta0=theta0, duration=duration,
                           sample_rate=200.0)
    return cfg.with_updates(**overrides)


PRESETS = {
    "damping": lambda: damping_config(1.08),
    "transient": lambda: transient_config(0.94),
    "maser": lambda: maser_config(),
    "floquet-maser": lambda: floquet_maser_config(),
    "floquet-maser-0.05": lambda: floquet_maser_config(nu_ac=0.05, duration=600.0),
    "free-decay-sideband": lambda: free_decay_config(2.25e-9, 1.0),
}
