"""Physical constants, run configuration and polarization state.

All quantities are SI: tesla, seconds, hertz.  The sign of ``b0`` encodes the
bias direction (+z or -z); reported frequencies are magnitudes.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

GAMMA_XE = -1.18e7  # Hz/T, 129Xe
G_N_XE = -1.5

INTEGRATORS = ("adaptive", "rk4")

# slack on |P| <= 1 for accumulated integration error
NORM_SLACK = 1e-6


class ConfigError(ValueError):
    """Raised when a configuration file or dict cannot be turned into a config."""


@dataclass(frozen=True)
class PhysicalConstants:
    gamma_xe: float = GAMMA_XE
    planck_h: float = 6.62607015e-34
    light_c: float = 299792458.0
    ev_to_joule: float = 1.602176634e-19
    g_n: float = G_N_XE

    def __post_init__(self):
        if not self.gamma_xe < 0:
            raise ValueError("gamma_xe must be negative for 129Xe")
        if not self.g_n < 0:
            raise ValueError("g_n must be negative for 129Xe")

    def ev_to_hz(self, energy_ev: float) -> float:
        return energy_ev * self.ev_to_joule / self.planck_h

    def hz_to_ev(self, freq_hz: float) -> float:
        return freq_hz * self.planck_h / self.ev_to_joule


DEFAULT_CONSTANTS = PhysicalConstants()


@dataclass(frozen=True)
class PolarizationState:
    px: float
    py: float
    pz: float

    @property
    def norm(self) -> float:
        return math.sqrt(self.px * self.px + self.py * self.py + self.pz * self.pz)

    @property
    def transverse(self) -> float:
        return math.hypot(self.px, self.py)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.px, self.py, self.pz)

    def is_physical(self, slack: float = NORM_SLACK) -> bool:
        return self.norm <= 1.0 + slack


@dataclass(frozen=True)
class ExperimentConfig:
    """Every physical and numerical parameter of one simulated run.

    ``p0``, ``gamma_se`` and ``p_rb`` have no measured values behind them; their
    defaults are placeholders.  ``p_rb=None`` means "0.5 along the bias
    direction", and ``seed_transverse=None`` means ``1e-6 * p0``.
    """

    b0: float = 750e-9
    b_ac: float = 0.0
    nu_ac: float = 0.0
    chi: float = 0.0
    t1: float = 21.5
    t2: float = 13.65
    gamma_se: float = 0.05
    p_rb: float | None = None
    p0: float = 0.01
    theta0: float = math.pi / 15
    seed_transverse: float | None = None
    noise_rms: float = 0.0
    detector_gain: float = 1.0
    duration: float = 60.0
    sample_rate: float = 200.0
    rng_seed: int = 0
    integrator: str = "adaptive"
    rtol: float = 1e-9
    atol: float = 1e-14
    step: float | None = None
    max_step: float | None = None
    noise_in_loop: bool = False

    @property
    def bias_sign(self) -> float:
        return -1.0 if self.b0 < 0 else 1.0

    @property
    def pumping_polarization(self) -> float:
        return 0.5 * self.bias_sign if self.p_rb is None else self.p_rb

    @property
    def seed(self) -> float:
        return 1e-6 * self.p0 if self.seed_transverse is None else self.seed_transverse

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.sample_rate)) + 1

    def with_updates(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> ExperimentConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**data)


def larmor_frequency(b0: float, constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Return the Larmor frequency magnitude |gamma * b0| in Hz."""
    return abs(constants.gamma_xe) * abs(b0)


def modulation_index(b_ac: float, nu_ac: float,
                     constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Return the drive modulation index |gamma| * b_ac / nu_ac."""
    if not nu_ac > 0:
        raise ValueError("modulation index undefined for nu_ac <= 0 (static offset)")
    return abs(constants.gamma_xe) * b_ac / nu_ac


def validate_config(cfg: ExperimentConfig,
                    constants: PhysicalConstants = DEFAULT_CONSTANTS) -> list[str]:
    """Return a list of human-readable violations; empty means the config is valid."""
    out = []

    def bad(name, msg):
        out.append(f"{name}: {msg} (got {getattr(cfg, name)!r})")

    numeric = ["b0", "b_ac", "nu_ac", "chi", "gamma_se", "p0", "theta0",
               "noise_rms", "detector_gain", "duration", "sample_rate", "rtol", "atol"]
    for name in numeric:
        v = getattr(cfg, name)
        if isinstance(v, bool) or not isinstance(v, (int, float)) or math.isnan(v):
            bad(name, "must be a number")
    if out:
        return out

    if not cfg.t1 > 0:
        bad("t1", "must be > 0")
    if not cfg.t2 > 0:
        bad("t2", "must be > 0")
    if not (cfg.duration > 0 and math.isfinite(cfg.duration)):
        bad("duration", "must be finite and > 0")
    nyq_min = 4.0 * larmor_frequency(cfg.b0, constants)
    if not cfg.sample_rate > nyq_min:
        bad("sample_rate", f"must exceed 4*|gamma*b0| = {nyq_min:.6g} Hz")
    if not 0.0 <= cfg.p0 <= 1.0:
        bad("p0", "must lie in [0, 1]")
    if not abs(cfg.theta0) <= math.pi:
        bad("theta0", "must satisfy |theta0| <= pi")
    if cfg.b_ac < 0:
        bad("b_ac", "must be >= 0")
    if cfg.nu_ac < 0:
        bad("nu_ac", "must be >= 0")
    if cfg.gamma_se < 0:
        bad("gamma_se", "must be >= 0")
    if cfg.p_rb is not None and not -1.0 <= cfg.p_rb <= 1.0:
        bad("p_rb", "must lie in [-1, 1]")
    if cfg.seed_transverse is not None and not abs(cfg.seed_transverse) <= 1.0:
        bad("seed_transverse", "must lie in [-1, 1]")
    if cfg.noise_rms < 0:
        bad("noise_rms", "must be >= 0")
    if cfg.integrator not in INTEGRATORS:
        bad("integrator", f"must be one of {INTEGRATORS}")
    if not cfg.rtol > 0:
        bad("rtol", "must be > 0")
    if cfg.atol < 0:
        bad("atol", "must be >= 0")
    if cfg.step is not None and not cfg.step > 0:
        bad("step", "must be > 0")
    if cfg.max_step is not None and not cfg.max_step > 0:
        bad("max_step", "must be > 0")
    if isinstance(cfg.rng_seed, bool) or not isinstance(cfg.rng_seed, int):
        bad("rng_seed", "must be an integer")
    return out


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a flat JSON config.  ``Infinity`` is accepted for t1/t2."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a flat JSON object")
    return ExperimentConfig.from_dict(data)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n")
