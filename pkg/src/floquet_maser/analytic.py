"""Closed-form transients of the undriven feedback system.

With longitudinal relaxation and pumping neglected, averaging the feedback
Bloch equations over a Larmor period gives

    |P+|(t) = P0 (Td/T2) q sech[(q/T2)(t - t0)]
    Pz(t)   = P0 (Td/T2) {q tanh[(q/T2)(t - t0)] - 1}

with ``q = sqrt(1 + r^2 + 2 r cos(theta0))``, ``r = T2/Td`` and
``t0 = -(T2/q) artanh[(r cos(theta0) + 1)/q]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .core import DEFAULT_CONSTANTS, PhysicalConstants

ALPHA_PULLING = 0.235  # Hz*s, apparatus value quoted for the experiment


@dataclass(frozen=True)
class TransientParams:
    theta0: float
    t2: float
    td: float
    p0: float = 1.0
    alpha_pulling: float = ALPHA_PULLING

    def __post_init__(self):
        if not self.t2 > 0:
            raise ValueError("t2 must be > 0")
        if not self.td > 0:
            raise ValueError("td must be > 0")


class PeakTime(NamedTuple):
    """Time of maximum transverse signal.

    ``bursts`` is True only when ``t0 > 0``, i.e. the signal first grows.
    ``t0`` is ``-inf`` when the tanh argument reaches +1 (no tip at all) and
    ``+inf`` when it reaches -1 (exact inversion: nothing seeds the burst).
    """

    t0: float
    bursts: bool


def effective_t2(t2: float, td: float) -> float:
    """Transverse lifetime with feedback damping, (1/t2 + 1/td)^-1."""
    return 1.0 / (1.0 / t2 + 1.0 / td)


def q_factor(theta0: float, t2: float, td: float) -> float:
    r = t2 / td
    return math.sqrt(max(0.0, 1.0 + r * r + 2.0 * math.cos(theta0) * r))


def peak_time(theta0: float, t2: float, td: float) -> PeakTime:
    q = q_factor(theta0, t2, td)
    if q == 0:
        raise ValueError("q = 0: peak time undefined (theta0 = pi with td = t2)")
    arg = ((t2 / td) * math.cos(theta0) + 1.0) / q
    if arg >= 1.0:
        return PeakTime(-math.inf, False)
    if arg <= -1.0:
        return PeakTime(math.inf, False)
    t0 = -(t2 / q) * math.atanh(arg)
    return PeakTime(t0, t0 > 0)


def _sech(u):
    a = np.exp(-np.abs(u))
    return 2.0 * a / (1.0 + a * a)


def transient_envelope(t, params: TransientParams):
    """Return ``(|P+|, Pz)`` at times ``t`` (scalar or array)."""
    q = q_factor(params.theta0, params.t2, params.td)
    if q == 0:
        raise ValueError("q = 0: envelope undefined")
    t0 = peak_time(params.theta0, params.t2, params.td).t0
    scale = params.p0 * params.td / params.t2
    with np.errstate(invalid="ignore"):
        u = (q / params.t2) * (np.asarray(t, dtype=float) - t0)
    p_plus = scale * q * _sech(u)
    pz = scale * (q * np.tanh(u) - 1.0)
    if np.ndim(p_plus) == 0:
        return float(p_plus), float(pz)
    return p_plus, pz


def frequency_pulling(td: float, alpha: float = ALPHA_PULLING) -> float:
    """Shift of the oscillation away from the Larmor frequency, alpha/td in Hz."""
    if not td > 0:
        raise ValueError("td must be > 0")
    return alpha / td


def is_masing(td: float, t2: float) -> bool:
    """True when feedback damping beats intrinsic decoherence (td/t2 < 1)."""
    if not (td > 0 and t2 > 0):
        raise ValueError("td and t2 must be > 0")
    return td / t2 < 1.0


def damping_time_from_gain(chi: float, p0: float,
                           constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Damping time 1/(pi |gamma chi p0|) of a small transverse excursion.

    Of the linearly polarized feedback field only the co-rotating half acts
    on the precessing polarization, hence pi rather than 2 pi.
    ``chi = 0`` gives ``inf``.
    """
    if chi == 0:
        return math.inf
    if p0 == 0:
        raise ValueError("damping time undefined for p0 = 0")
    return 1.0 / (math.pi * abs(constants.gamma_xe * chi * p0))


def gain_from_damping_time(td: float, p0: float,
                           constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Feedback gain (T per unit polarization) giving damping time ``td``.

    The sign is chosen so that polarization along ``sign(p0)`` is damped;
    the same gain amplifies the opposite (inverted) polarization.
    ``td = inf`` gives 0.
    """
    if math.isinf(td):
        return 0.0
    if not td > 0:
        raise ValueError("td must be > 0")
    if p0 == 0:
        raise ValueError("gain undefined for p0 = 0")
    return 1.0 / (math.pi * constants.gamma_xe * p0 * td)
