"""Lab-frame nonlinear Bloch equations with self-feedback.

The polarization obeys

    dP/dt = P x omega - relaxation + gamma_se (P_Rb - P_z) z_hat

with ``omega = 2 pi gamma [B0 + B_ac cos(2 pi nu_ac t)] z_hat + 2 pi gamma chi P_x y_hat``.
The feedback field ``chi * P_x`` acts instantaneously; no loop delay is
modelled.  Integration happens in the lab frame (no rotating-wave
approximation), and the result is resampled onto a uniform grid of
``1/sample_rate`` spacing.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import (DEFAULT_CONSTANTS, ExperimentConfig, PhysicalConstants,
                   PolarizationState, validate_config)
from .integrators import IntegratorStats, dopri5, rk4

TWO_PI = 2.0 * math.pi


@dataclass
class TimeSeries:
    """Uniformly sampled record starting at ``t0`` with spacing ``dt``.

    ``values`` is 1-D for scalar records or ``(n, 3)`` for polarization.
    """

    values: np.ndarray
    dt: float
    t0: float = 0.0
    units: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if not self.dt > 0:
            raise ValueError("sample interval must be positive")

    def __len__(self):
        return len(self.values)

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self.values))

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @property
    def duration(self) -> float:
        return self.dt * len(self.values)

    def window(self, start: float, stop: float | None = None) -> TimeSeries:
        """Sub-record covering ``start <= t < stop`` (times in seconds)."""
        i0 = max(0, int(math.ceil((start - self.t0) / self.dt - 1e-9)))
        i1 = len(self) if stop is None else int(math.ceil((stop - self.t0) / self.dt - 1e-9))
        return TimeSeries(self.values[i0:i1], self.dt, self.t0 + i0 * self.dt, self.units)

    @classmethod
    def from_samples(cls, t, values, units="") -> TimeSeries:
        """Build from explicit sample times; raises if the grid is not uniform."""
        t = np.asarray(t, dtype=float)
        if len(t) < 2:
            raise ValueError("need at least two samples")
        d = np.diff(t)
        dt = (t[-1] - t[0]) / (len(t) - 1)
        if not dt > 0 or np.max(np.abs(d - dt)) > 1e-6 * dt:
            raise ValueError("time grid is not uniform")
        return cls(np.asarray(values, dtype=float), dt, float(t[0]), units)


@dataclass
class SimResult:
    states: TimeSeries
    detected: TimeSeries
    meta: dict = field(default_factory=dict)

    @property
    def times(self) -> np.ndarray:
        return self.states.times

    @property
    def px(self) -> np.ndarray:
        return self.states.values[:, 0]

    @property
    def py(self) -> np.ndarray:
        return self.states.values[:, 1]

    @property
    def pz(self) -> np.ndarray:
        return self.states.values[:, 2]

    def component(self, name: str) -> TimeSeries:
        idx = {"px": 0, "py": 1, "pz": 2}[name]
        return TimeSeries(self.states.values[:, idx], self.states.dt, self.states.t0)

    def final_state(self) -> PolarizationState:
        return PolarizationState(*map(float, self.states.values[-1]))

    def to_csv(self, path: str | Path) -> Path:
        """Write ``t,px,py,pz,detected_v`` plus a JSON sidecar next to it."""
        path = Path(path)
        t = self.times
        s = self.states.values
        d = self.detected.values
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "px", "py", "pz", "detected_v"])
            for i in range(len(t)):
                w.writerow([repr(float(t[i])), repr(float(s[i, 0])), repr(float(s[i, 1])),
                            repr(float(s[i, 2])), repr(float(d[i]))])
        path.with_suffix(".json").write_text(json.dumps(self.meta, indent=2, sort_keys=True)
                                             + "\n")
        return path


def read_series_csv(path: str | Path, column: str = "detected_v") -> TimeSeries:
    """Load one column of a ``t,...`` CSV written by :meth:`SimResult.to_csv`.

    Any CSV with a ``t`` column and the requested column works.
    """
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) < 3:
        raise ValueError(f"{path}: no samples")
    header = rows[0]
    if "t" not in header:
        raise ValueError(f"{path}: missing 't' column")
    if column not in header:
        if len(header) == 2:
            column = header[1]
        else:
            raise ValueError(f"{path}: missing '{column}' column")
    it, iv = header.index("t"), header.index(column)
    data = np.array([[float(r[it]), float(r[iv])] for r in rows[1:] if r])
    return TimeSeries.from_samples(data[:, 0], data[:, 1], units="V" if column == "detected_v" else "")


def feedback_field(px: float, chi: float) -> float:
    """Transverse feedback field B_f = chi * P_x, in tesla."""
    return chi * px


def apply_tip(state: PolarizationState, theta0: float) -> PolarizationState:
    """Rotate ``state`` by ``theta0`` about +x (right-handed).

    (0, 0, 1) tipped by pi/2 lands on (0, -1, 0).
    """
    if abs(theta0) > math.pi:
        raise ValueError("|theta0| must not exceed pi")
    c, s = math.cos(theta0), math.sin(theta0)
    return PolarizationState(state.px,
                             c * state.py - s * state.pz,
                             s * state.py + c * state.pz)


def initial_state(cfg: ExperimentConfig) -> PolarizationState:
    """Equilibrium polarization ``p0`` along the bias axis, tipped, plus the P_x seed."""
    tipped = apply_tip(PolarizationState(0.0, 0.0, cfg.bias_sign * cfg.p0), cfg.theta0)
    return PolarizationState(tipped.px + cfg.seed, tipped.py, tipped.pz)


def make_rhs(cfg: ExperimentConfig, constants: PhysicalConstants = DEFAULT_CONSTANTS,
             loop_noise=None):
    """Return ``f(t, px, py, pz) -> (dpx, dpy, dpz)`` for ``cfg``.

    ``loop_noise`` is an optional one-element list holding extra P_x seen by
    the feedback loop (used for the noise-in-loop mode).
    """
    tpg = TWO_PI * constants.gamma_xe
    wz0 = tpg * cfg.b0
    wac = tpg * cfg.b_ac
    wd = TWO_PI * cfg.nu_ac
    kfb = tpg * cfg.chi
    r1 = 1.0 / cfg.t1
    r2 = 1.0 / cfg.t2
    gse = cfg.gamma_se
    pump = gse * cfg.pumping_polarization
    cos = math.cos
    driven = wac != 0.0

    if loop_noise is None:
        def rhs(t, x, y, z):
            wz = wz0 + wac * cos(wd * t) if driven else wz0
            wy = kfb * x
            return (y * wz - z * wy - r2 * x,
                    -x * wz - r2 * y,
                    x * wy - r1 * z + pump - gse * z)
    else:
        def rhs(t, x, y, z):
            wz = wz0 + wac * cos(wd * t) if driven else wz0
            wy = kfb * (x + loop_noise[0])
            return (y * wz - z * wy - r2 * x,
                    -x * wz - r2 * y,
                    x * wy - r1 * z + pump - gse * z)
    return rhs


def derivative(state: PolarizationState, t: float, cfg: ExperimentConfig,
               constants: PhysicalConstants = DEFAULT_CONSTANTS) -> PolarizationState:
    """Right-hand side of the feedback Bloch equations at ``(state, t)``."""
    if not all(math.isfinite(v) for v in state.as_tuple()):
        raise FloatingPointError(f"non-finite polarization {state}")
    return PolarizationState(*make_rhs(cfg, constants)(t, *state.as_tuple()))


def fixed_point_pz(cfg: ExperimentConfig) -> float:
    """Longitudinal equilibrium under pumping and T1 with no transverse polarization."""
    return cfg.gamma_se * cfg.pumping_polarization / (1.0 / cfg.t1 + cfg.gamma_se)


def detector_noise(cfg: ExperimentConfig) -> np.ndarray:
    """White noise samples with one-sided density ``noise_rms`` (V/sqrt(Hz))."""
    rng = np.random.default_rng(cfg.rng_seed)
    sigma = cfg.noise_rms * math.sqrt(cfg.sample_rate / 2.0)
    return sigma * rng.standard_normal(cfg.n_samples)


def integrate(cfg: ExperimentConfig,
              constants: PhysicalConstants = DEFAULT_CONSTANTS) -> SimResult:
    """Run one simulation described by ``cfg``.

    Raises ``ValueError`` for an invalid config and
    :class:`~floquet_maser.integrators.IntegrationError` on step underflow.
    """
    problems = validate_config(cfg, constants)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))

    n = cfg.n_samples
    dt = 1.0 / cfg.sample_rate
    t_out = dt * np.arange(n)
    y0 = initial_state(cfg).as_tuple()
    noise = detector_noise(cfg) if cfg.noise_rms > 0 else np.zeros(n)

    if cfg.integrator == "rk4":
        step = cfg.step or default_rk4_step(cfg, constants)

    if cfg.noise_in_loop and cfg.noise_rms > 0:
        # noise held constant over each sample interval; restart at every sample
        cell = [0.0]
        rhs = make_rhs(cfg, constants, loop_noise=cell)
        states = np.empty((n, 3))
        states[0] = y0
        stats = IntegratorStats()
        h = None
        for i in range(n - 1):
            cell[0] = noise[i] / cfg.detector_gain
            seg = t_out[i:i + 2]
            if cfg.integrator == "rk4":
                part, st = rk4(rhs, seg, states[i], step)
            else:
                part, st = dopri5(rhs, seg, states[i], cfg.rtol, cfg.atol, cfg.max_step, h)
                h = st.last_step
            states[i + 1] = part[-1]
            stats.merge(st)
    else:
        rhs = make_rhs(cfg, constants)
        if cfg.integrator == "rk4":
            states, stats = rk4(rhs, t_out, y0, step)
        else:
            states, stats = dopri5(rhs, t_out, y0, cfg.rtol, cfg.atol, cfg.max_step)

    detected = cfg.detector_gain * states[:, 0] + noise
    meta = {
        "config": cfg.to_dict(),
        "integrator": {"method": cfg.integrator, "steps": stats.steps,
                       "rejected": stats.rejected, "evaluations": stats.evaluations},
    }
    return SimResult(TimeSeries(states, dt, 0.0, "1"), TimeSeries(detected, dt, 0.0, "V"), meta)


def default_rk4_step(cfg: ExperimentConfig,
                     constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Fixed step resolving the fastest precession (peak of the drive) 200 times per turn."""
    f_max = abs(constants.gamma_xe) * (abs(cfg.b0) + cfg.b_ac)
    f_max = max(f_max, cfg.nu_ac, 1.0 / cfg.duration)
    return min(1.0 / (200.0 * f_max), 1.0 / cfg.sample_rate)
