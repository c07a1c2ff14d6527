"""Floquet ladder of a spin driven by a field parallel to the bias.

A drive ``B_ac cos(2 pi nu_ac t)`` along z turns the two-level spin into the
ladder of quasi-energies ``eps*nu0/2 + n*nu_ac``.  The dressed states are
Bessel-weighted superpositions of photon-number states, and transitions
between the two branches give the comb ``nu0 + k*nu_ac`` with amplitudes
``|J_k(m)|``, ``m = |gamma| B_ac / nu_ac``.  ``fm_oracle`` checks that comb
by brute force: it FFTs the phase-modulated carrier directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bloch import TimeSeries
from .core import DEFAULT_CONSTANTS, PhysicalConstants, modulation_index
from .spectral import Peak, Spectrum, amplitude_spectrum

TRUNCATION_TOL = 1e-9
_BIG = 1e250


class TruncationError(ValueError):
    """The comb was cut off before it carried all of the carrier's power."""


def bessel_j_orders(nmax: int, x: float) -> np.ndarray:
    """``[J_0(x), ..., J_nmax(x)]`` by Miller's downward recurrence.

    The recurrence starts well above ``max(nmax, x)`` with an arbitrary seed
    and is normalized with ``J_0 + 2 sum_k J_2k = 1``.  Negative ``x`` uses
    ``J_n(-x) = (-1)^n J_n(x)``.
    """
    nmax = int(nmax)
    if nmax < 0:
        raise ValueError("nmax must be >= 0")
    out = np.zeros(nmax + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    sign = -1.0 if x < 0 else 1.0
    ax = abs(x)
    if ax < 1e-5:
        # two-term series; the recurrence coefficient 2k/x would overflow
        h = 0.5 * ax
        term = 1.0
        for n in range(nmax + 1):
            if n:
                term *= h / n
            out[n] = term * (1.0 - h * h / (n + 1))
        if sign < 0:
            out[1::2] *= -1.0
        return out
    top = max(nmax, ax)
    start = int(top + 60 + 12 * top ** (1 / 3))
    start += start % 2
    jp1, j = 0.0, 1e-300
    norm = 0.0
    for k in range(start, 0, -1):
        jm1 = (2.0 * k / ax) * j - jp1
        jp1, j = j, jm1
        # j now holds J_{k-1}
        if k - 1 <= nmax:
            out[k - 1] = j
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        if abs(j) > _BIG:
            j /= _BIG
            jp1 /= _BIG
            norm /= _BIG
            out /= _BIG
    norm += out[0] if nmax >= 0 else 0.0
    out /= norm
    if sign < 0:
        out[1::2] *= -1.0
    return out


def bessel_j(order: int, x: float) -> float:
    """Integer-order Bessel function of the first kind, ``J_order(x)``."""
    order = int(order)
    n = abs(order)
    val = float(bessel_j_orders(n, x)[n])
    if order < 0 and n % 2:
        val = -val
    return val


@dataclass(frozen=True)
class FloquetLevel:
    epsilon: int
    n: int
    energy_hz: float


def floquet_energy(epsilon: int, n: int, nu0: float, nu_ac: float) -> float:
    """Quasi-energy ``E/2pi = epsilon*nu0/2 + n*nu_ac`` in Hz."""
    if epsilon not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")
    return epsilon * nu0 / 2.0 + n * nu_ac


def floquet_level(epsilon: int, n: int, nu0: float, nu_ac: float) -> FloquetLevel:
    return FloquetLevel(epsilon, n, floquet_energy(epsilon, n, nu0, nu_ac))


def transition_frequency(n: int, m: int, nu0: float, nu_ac: float) -> float:
    """Frequency of the ``|+>_n -> |->_m`` transition, ``(n - m)*nu_ac + nu0``."""
    return floquet_energy(1, n, nu0, nu_ac) - floquet_energy(-1, m, nu0, nu_ac)


def floquet_amplitude(n_minus_nprime: int, epsilon: int, b_ac: float, nu_ac: float,
                      constants: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Overlap of the dressed state ``|eps>_n`` with ``|eps, n'>``.

    Equals ``J_{n-n'}(eps * gamma * B_ac / (2 nu_ac))``.
    """
    if epsilon not in (1, -1):
        raise ValueError("epsilon must be +1 or -1")
    if not nu_ac > 0:
        raise ValueError("nu_ac must be > 0")
    return bessel_j(n_minus_nprime, epsilon * constants.gamma_xe * b_ac / (2.0 * nu_ac))


def transition_amplitude(k: int, b_ac: float, nu_ac: float,
                         constants: PhysicalConstants = DEFAULT_CONSTANTS,
                         n_terms: int | None = None) -> float:
    """Weight of the order-``k`` line, summed over the two dressed ladders.

    ``sum_p J_p(x) J_{p-k}(-x)`` with ``x = gamma B_ac / (2 nu_ac)``: the
    ``|+>_n`` and ``|->_{n-k}`` states overlap on every photon number.  By
    Neumann's addition theorem this is ``J_k(2x)``; the explicit sum is kept
    so that collapse can be checked.
    """
    x = constants.gamma_xe * b_ac / (2.0 * nu_ac)
    n_terms = n_terms or int(abs(x) + abs(k) + 60)
    table = bessel_j_orders(n_terms + abs(k), abs(x))

    def J(n, arg_sign):
        v = table[abs(n)]
        odd = abs(n) % 2 == 1
        if odd and n < 0:
            v = -v
        if odd and arg_sign * x < 0:
            v = -v
        return v

    return float(sum(J(p, 1) * J(p - k, -1) for p in range(-n_terms, n_terms + 1)))


@dataclass(frozen=True)
class SidebandLine:
    k: int
    freq_hz: float
    amplitude: float


@dataclass
class SidebandModel:
    lines: list[SidebandLine]
    mod_index: float
    carrier: float
    nu_ac: float
    truncation: float = 0.0

    def amplitude(self, k: int) -> float:
        for line in self.lines:
            if line.k == k:
                return line.amplitude
        return 0.0

    def visible(self, rel_threshold: float = 0.01) -> list[SidebandLine]:
        """Lines whose amplitude exceeds ``rel_threshold`` of the tallest line."""
        top = max(line.amplitude for line in self.lines)
        return [line for line in self.lines if line.amplitude > rel_threshold * top]

    def to_json(self, path: str | Path | None = None) -> str:
        text = json.dumps([{"k": ln.k, "freq_hz": ln.freq_hz, "amplitude": ln.amplitude}
                           for ln in self.lines], indent=1)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def sideband_spectrum(nu0: float, nu_ac: float, b_ac: float, k_max: int | None = None,
                      constants: PhysicalConstants = DEFAULT_CONSTANTS) -> SidebandModel:
    """Predicted comb ``nu0 + k*nu_ac`` with amplitudes ``|J_k(m)|``, ``|k| <= k_max``.

    ``k_max`` defaults to ``ceil(m) + 40`` and may not be below ``ceil(m) + 20``.
    Raises :class:`TruncationError` if the lines kept miss more than 1e-9 of
    the total power.
    """
    m = modulation_index(b_ac, nu_ac, constants) if b_ac else 0.0
    floor = int(math.ceil(m)) + 20
    if k_max is None:
        k_max = floor + 20
    if k_max < floor:
        raise ValueError(f"k_max = {k_max} below ceil(m) + 20 = {floor}")
    j = bessel_j_orders(k_max, m)
    amps = np.abs(j)
    power = amps[0] ** 2 + 2.0 * np.sum(amps[1:] ** 2)
    missing = 1.0 - power
    if missing > TRUNCATION_TOL:
        raise TruncationError(f"comb truncated at |k| = {k_max}: 1 - sum J_k^2 = {missing:.3g}")
    lines = [SidebandLine(k, nu0 + k * nu_ac, float(amps[abs(k)]))
             for k in range(-k_max, k_max + 1)]
    return SidebandModel(lines, m, nu0, nu_ac, max(missing, 0.0))


@dataclass
class OracleResult:
    spectrum: Spectrum
    mod_index: float
    measured: dict[int, float] = field(default_factory=dict)


def fm_oracle(nu0: float, nu_ac: float, b_ac: float, duration: float, sample_rate: float,
              constants: PhysicalConstants = DEFAULT_CONSTANTS,
              k_max: int | None = None) -> OracleResult:
    """FFT a phase-modulated carrier and read off the line amplitudes.

    Synthesizes ``cos(2 pi nu0 t + m sin(2 pi nu_ac t))``.  For exact bin
    alignment choose ``duration`` so that ``nu0*duration`` and
    ``nu_ac*duration`` are integers.
    """
    m = modulation_index(b_ac, nu_ac, constants)
    if k_max is None:
        k_max = int(math.ceil(m)) + 20
    f_top = nu0 + k_max * nu_ac
    if not sample_rate > 4.0 * f_top:
        raise ValueError(f"sample_rate must exceed 4*(nu0 + k_max*nu_ac) = {4 * f_top:.6g} Hz")
    if nu0 - k_max * nu_ac <= 0:
        raise ValueError("lower sidebands fold through 0 Hz; raise nu0 or lower k_max")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    s = np.cos(2 * math.pi * nu0 * t + m * np.sin(2 * math.pi * nu_ac * t))
    spec = amplitude_spectrum(TimeSeries(s, 1.0 / sample_rate), "rect")
    measured = {}
    for k in range(-k_max, k_max + 1):
        i = spec.nearest_bin(nu0 + k * nu_ac)
        measured[k] = float(spec.values[i])
        spec.peaks.append(Peak(float(spec.freqs[i]), measured[k], order_k=k, index=i))
    return OracleResult(spec, m, measured)
