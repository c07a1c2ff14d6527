"""Runge-Kutta integrators for three-component ODE systems.

Both integrators return the solution resampled on a caller-supplied output
grid, so downstream spectral analysis sees uniformly spaced samples no matter
how the steps were chosen.

* ``dopri5`` - Dormand-Prince 5(4) with FSAL, PI-free step control and the
  4th-order continuous extension of Hairer, Norsett & Wanner.
* ``rk4`` - classical fixed-step RK4 with cubic Hermite interpolation
  between steps.

The right-hand side has the signature ``f(t, x, y, z) -> (dx, dy, dz)`` on
plain floats; with three components this is several times faster than
allocating numpy arrays per stage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class IntegrationError(RuntimeError):
    """Step size underflow (the problem looks stiff at ``t``)."""

    def __init__(self, t: float, h: float):
        super().__init__(f"step size underflow at t = {t:.9g} s (h = {h:.3g} s); "
                         "system is too stiff for the explicit integrator")
        self.t = t
        self.h = h

    def __reduce__(self):
        return (IntegrationError, (self.t, self.h))


@dataclass
class IntegratorStats:
    steps: int = 0
    rejected: int = 0
    evaluations: int = 0
    last_step: float = 0.0

    def merge(self, other: IntegratorStats) -> None:
        self.steps += other.steps
        self.rejected += other.rejected
        self.evaluations += other.evaluations
        self.last_step = other.last_step


# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200,
                          22 / 525, -1 / 40)
D1, D3, D4, D5, D6, D7 = (-12715105075 / 11282082432, 87487479700 / 32700410799,
                          -10690763975 / 1880347072, 701980252875 / 199316789632,
                          -1453857185 / 822651844, 69997945 / 29380423)

SAFETY = 0.9
FAC_MIN, FAC_MAX = 0.2, 10.0


def _error_norm(x0, y0, z0, x1, y1, z1, ex, ey, ez, rtol, atol):
    # x and y share one scale: they are two projections of the same rotating
    # transverse vector, and a per-component scale collapses at zero crossings.
    st = atol + rtol * max(math.hypot(x0, y0), math.hypot(x1, y1))
    sz = atol + rtol * max(abs(z0), abs(z1))
    return max(abs(ex) / st, abs(ey) / st, abs(ez) / sz)


def _initial_step(f, t, y, k, rtol, atol, max_step):
    # Hairer's starting-step heuristic, order 5
    d0 = max(abs(v) / (atol + rtol * abs(v)) if atol + rtol * abs(v) > 0 else 0.0 for v in y)
    d1 = max(abs(d) / (atol + rtol * abs(v)) if atol + rtol * abs(v) > 0 else 0.0
             for v, d in zip(y, k))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    y1 = [v + h0 * d for v, d in zip(y, k)]
    k1 = f(t + h0, *y1)
    d2 = max(abs(a - b) / (atol + rtol * abs(v)) if atol + rtol * abs(v) > 0 else 0.0
             for v, a, b in zip(y, k1, k)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1, max_step)


def dopri5(f, t_out, y0, rtol=1e-9, atol=1e-14, max_step=None, h0=None):
    """Integrate from ``t_out[0]`` to ``t_out[-1]`` and sample on ``t_out``.

    Returns ``(samples, stats)`` where ``samples`` has shape ``(len(t_out), 3)``.
    The last sample is the integrator's own end-of-step value, not an
    interpolant.
    """
    t_out = np.asarray(t_out, dtype=float)
    n_out = len(t_out)
    out = np.empty((n_out, 3))
    x, y, z = (float(v) for v in y0)
    out[0] = (x, y, z)
    stats = IntegratorStats()
    if n_out == 1:
        return out, stats

    t = float(t_out[0])
    t_end = float(t_out[-1])
    span = t_end - t
    if max_step is None:
        max_step = span
    hmin = 16 * np.finfo(float).eps * max(1.0, abs(t_end))

    k1x, k1y, k1z = f(t, x, y, z)
    stats.evaluations += 1
    h = h0 if h0 else _initial_step(f, t, (x, y, z), (k1x, k1y, k1z), rtol, atol, max_step)
    stats.evaluations += 1
    j = 1  # next output index
    last = False
    while not last:
        h = min(h, max_step)
        if t + h >= t_end - hmin:
            h = t_end - t
            last = True
        while True:
            if h < hmin:
                raise IntegrationError(t, h)
            k2x, k2y, k2z = f(t + C2 * h, x + h * A21 * k1x, y + h * A21 * k1y,
                              z + h * A21 * k1z)
            k3x, k3y, k3z = f(t + C3 * h,
                              x + h * (A31 * k1x + A32 * k2x),
                              y + h * (A31 * k1y + A32 * k2y),
                              z + h * (A31 * k1z + A32 * k2z))
            k4x, k4y, k4z = f(t + C4 * h,
                              x + h * (A41 * k1x + A42 * k2x + A43 * k3x),
                              y + h * (A41 * k1y + A42 * k2y + A43 * k3y),
                              z + h * (A41 * k1z + A42 * k2z + A43 * k3z))
            k5x, k5y, k5z = f(t + C5 * h,
                              x + h * (A51 * k1x + A52 * k2x + A53 * k3x + A54 * k4x),
                              y + h * (A51 * k1y + A52 * k2y + A53 * k3y + A54 * k4y),
                              z + h * (A51 * k1z + A52 * k2z + A53 * k3z + A54 * k4z))
            k6x, k6y, k6z = f(t + h,
                              x + h * (A61 * k1x + A62 * k2x + A63 * k3x + A64 * k4x
                                       + A65 * k5x),
                              y + h * (A61 * k1y + A62 * k2y + A63 * k3y + A64 * k4y
                                       + A65 * k5y),
                              z + h * (A61 * k1z + A62 * k2z + A63 * k3z + A64 * k4z
                                       + A65 * k5z))
            xn = x + h * (A71 * k1x + A73 * k3x + A74 * k4x + A75 * k5x + A76 * k6x)
            yn = y + h * (A71 * k1y + A73 * k3y + A74 * k4y + A75 * k5y + A76 * k6y)
            zn = z + h * (A71 * k1z + A73 * k3z + A74 * k4z + A75 * k5z + A76 * k6z)
            k7x, k7y, k7z = f(t + h, xn, yn, zn)
            stats.evaluations += 6
            ex = h * (E1 * k1x + E3 * k3x + E4 * k4x + E5 * k5x + E6 * k6x + E7 * k7x)
            ey = h * (E1 * k1y + E3 * k3y + E4 * k4y + E5 * k5y + E6 * k6y + E7 * k7y)
            ez = h * (E1 * k1z + E3 * k3z + E4 * k4z + E5 * k5z + E6 * k6z + E7 * k7z)
            err = _error_norm(x, y, z, xn, yn, zn, ex, ey, ez, rtol, atol)
            if not math.isfinite(err):
                raise FloatingPointError(f"non-finite state near t = {t:.9g} s")
            if err <= 1.0:
                break
            stats.rejected += 1
            last = False
            h *= max(FAC_MIN, SAFETY * err ** -0.2)

        t_new = t_end if last else t + h
        # continuous extension between t and t_new
        while j < n_out and (t_out[j] <= t_new or (last and j == n_out - 1)):
            if last and j == n_out - 1:
                out[j] = (xn, yn, zn)
            else:
                th = (t_out[j] - t) / h
                th1 = 1.0 - th
                r = []
                for y0c, y1c, a1, a3, a4, a5, a6, a7 in (
                        (x, xn, k1x, k3x, k4x, k5x, k6x, k7x),
                        (y, yn, k1y, k3y, k4y, k5y, k6y, k7y),
                        (z, zn, k1z, k3z, k4z, k5z, k6z, k7z)):
                    r2 = y1c - y0c
                    r3 = h * a1 - r2
                    r4 = r2 - h * a7 - r3
                    r5 = h * (D1 * a1 + D3 * a3 + D4 * a4 + D5 * a5 + D6 * a6 + D7 * a7)
                    r.append(y0c + th * (r2 + th1 * (r3 + th * (r4 + th1 * r5))))
                out[j] = r
            j += 1

        t, x, y, z = t_new, xn, yn, zn
        k1x, k1y, k1z = k7x, k7y, k7z
        stats.steps += 1
        fac = FAC_MAX if err == 0 else min(FAC_MAX, max(FAC_MIN, SAFETY * err ** -0.2))
        stats.last_step = h
        h *= fac
    return out, stats


def rk4(f, t_out, y0, step):
    """Classical RK4 with fixed ``step``; cubic Hermite onto ``t_out``."""
    t_out = np.asarray(t_out, dtype=float)
    n_out = len(t_out)
    out = np.empty((n_out, 3))
    x, y, z = (float(v) for v in y0)
    out[0] = (x, y, z)
    stats = IntegratorStats()
    if n_out == 1:
        return out, stats
    t0 = float(t_out[0])
    t_end = float(t_out[-1])
    n_steps = max(1, int(math.ceil((t_end - t0) / step - 1e-9)))
    h = (t_end - t0) / n_steps
    t = t0
    fx, fy, fz = f(t, x, y, z)
    stats.evaluations += 1
    j = 1
    for i in range(n_steps):
        h2 = 0.5 * h
        k2x, k2y, k2z = f(t + h2, x + h2 * fx, y + h2 * fy, z + h2 * fz)
        k3x, k3y, k3z = f(t + h2, x + h2 * k2x, y + h2 * k2y, z + h2 * k2z)
        k4x, k4y, k4z = f(t + h, x + h * k3x, y + h * k3y, z + h * k3z)
        xn = x + h / 6 * (fx + 2 * k2x + 2 * k3x + k4x)
        yn = y + h / 6 * (fy + 2 * k2y + 2 * k3y + k4y)
        zn = z + h / 6 * (fz + 2 * k2z + 2 * k3z + k4z)
        t_new = t0 + (i + 1) * h
        gx, gy, gz = f(t_new, xn, yn, zn)
        stats.evaluations += 4
        final = i == n_steps - 1
        while j < n_out and (t_out[j] <= t_new or (final and j == n_out - 1)):
            if final and j == n_out - 1:
                out[j] = (xn, yn, zn)
            else:
                s = (t_out[j] - t) / h
                h00 = (1 + 2 * s) * (1 - s) ** 2
                h10 = s * (1 - s) ** 2
                h01 = s * s * (3 - 2 * s)
                h11 = s * s * (s - 1)
                out[j] = (h00 * x + h10 * h * fx + h01 * xn + h11 * h * gx,
                          h00 * y + h10 * h * fy + h01 * yn + h11 * h * gy,
                          h00 * z + h10 * h * fz + h01 * zn + h11 * h * gz)
            j += 1
        t, x, y, z = t_new, xn, yn, zn
        fx, fy, fz = gx, gy, gz
        stats.steps += 1
    stats.last_step = h
    return out, stats
