"""Damped least-squares fits for the decay, burst and calibration models.

``levenberg_marquardt`` is damped Gauss-Newton with Marquardt scaling and
Nielsen's damping update.  The four model fits wrap it (or, for the two
linear models, solve in closed form).  Custom residuals can be fitted with
``fit_model`` given a model ``f(t, *p)`` and optionally its Jacobian.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bloch import TimeSeries

# sech(u) = 1/2 at u = acosh(2)
_SECH_HALF = math.acosh(2.0)


@dataclass
class FitResult:
    params: dict[str, float]
    covariance: np.ndarray
    residual_rms: float
    converged: bool
    iterations: int
    r_squared: float = float("nan")
    degenerate: bool = False
    cost_history: list[float] = field(default_factory=list, repr=False)

    @property
    def stderr(self) -> dict[str, float]:
        d = np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))
        return dict(zip(self.params, map(float, d)))

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def to_json(self) -> str:
        return json.dumps({"params": self.params, "stderr": self.stderr,
                           "residual_rms": self.residual_rms, "converged": self.converged,
                           "iterations": self.iterations, "r_squared": self.r_squared},
                          indent=2)


def _r_squared(y, resid):
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0:
        return 1.0 if not np.any(resid) else 0.0
    return 1.0 - float(np.sum(resid ** 2)) / ss_tot


def _numeric_jacobian(model, t, p):
    p = np.asarray(p, dtype=float)
    cols = []
    for i in range(len(p)):
        h = 1e-6 * max(abs(p[i]), 1e-8)
        dp = np.zeros_like(p)
        dp[i] = h
        cols.append((model(t, *(p + dp)) - model(t, *(p - dp))) / (2 * h))
    return np.column_stack(cols)


def levenberg_marquardt(residual, jacobian, p0, max_iter=200, gtol=1e-10, xtol=1e-14,
                        ftol=1e-14):
    """Minimize ``0.5 * |residual(p)|^2``.

    Stops (converged) when the gradient is orthogonal to the residual within
    ``gtol``, when a step is smaller than ``xtol`` relative to ``p``, or when
    an accepted step lowers the cost by less than ``ftol`` relative.

    Returns ``(p, J, r, converged, iterations, costs)``.  ``costs`` holds the
    objective after every accepted step and never increases.
    """
    p = np.asarray(p0, dtype=float).copy()
    r = residual(p)
    J = jacobian(p)
    cost = 0.5 * float(r @ r)
    costs = [cost]
    A = J.T @ J
    g = J.T @ r
    lam = 1e-3 * float(np.max(np.diag(A))) if A.size else 0.0
    nu = 2.0
    converged = False
    it = 0

    def grad_small(J, r, g):
        # cosine between residual and each Jacobian column (MINPACK gtol test)
        rn = math.sqrt(float(r @ r))
        if rn == 0.0:
            return True
        cn = np.sqrt(np.sum(J * J, axis=0))
        cn[cn == 0] = 1.0
        return float(np.max(np.abs(g) / (cn * rn))) <= gtol

    for it in range(1, max_iter + 1):
        if grad_small(J, r, g):
            converged = True
            break
        D = np.diag(np.maximum(np.diag(A), 1e-300))
        try:
            step = np.linalg.solve(A + lam * D, -g)
        except np.linalg.LinAlgError:
            step = -np.linalg.lstsq(A + lam * D, g, rcond=None)[0]
        if np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol):
            converged = True
            break
        p_new = p + step
        r_new = residual(p_new)
        cost_new = 0.5 * float(r_new @ r_new)
        predicted = -(step @ g) - 0.5 * step @ (A @ step)
        rho = (cost - cost_new) / predicted if predicted > 0 else -1.0
        if np.isfinite(cost_new) and rho > 0:
            small_gain = cost - cost_new <= ftol * cost
            p, r, cost = p_new, r_new, cost_new
            J = jacobian(p)
            A = J.T @ J
            g = J.T @ r
            costs.append(cost)
            lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            if small_gain:
                converged = True
                break
        else:
            lam *= nu
            nu *= 2.0
    return p, J, r, converged, it, costs


def _covariance(J, r, n_params):
    dof = len(r) - n_params
    s2 = float(r @ r) / dof if dof > 0 else 0.0
    cov = s2 * np.linalg.pinv(J.T @ J)
    return 0.5 * (cov + cov.T)


def fit_model(model, t, y, p0, names, jacobian=None, max_iter=200) -> FitResult:
    """Fit ``y ~ model(t, *p)`` starting from ``p0``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)

    def residual(p):
        return model(t, *p) - y

    def jac(p):
        if jacobian is not None:
            return jacobian(t, *p)
        return _numeric_jacobian(model, t, p)

    p, J, r, ok, it, costs = levenberg_marquardt(residual, jac, p0, max_iter=max_iter)
    return FitResult(dict(zip(names, map(float, p))), _covariance(J, r, len(p)),
                     float(np.sqrt(np.mean(r ** 2))), ok, it, _r_squared(y, r),
                     cost_history=costs)


def _unpack(series, y=None):
    if isinstance(series, TimeSeries):
        return series.times, np.asarray(series.values, dtype=float)
    return np.asarray(series, dtype=float), np.asarray(y, dtype=float)


def exp_decay(t, a, rate, offset):
    return offset + a * np.exp(-rate * t)


def _exp_decay_jac(t, a, rate, offset):
    e = np.exp(-rate * t)
    return np.column_stack([e, -a * t * e, np.ones_like(t)])


def fit_exp_decay(series, y=None) -> FitResult:
    """Fit ``offset + A exp(-rate t)`` to a positive envelope.

    Accepts a :class:`TimeSeries` or ``(t, y)`` arrays.  Time is measured from
    the first sample.  The starting rate comes from a log-linear regression
    of the points above 5 % of the maximum; a flat record returns
    ``rate = 0`` with ``degenerate = True``.
    """
    t, y = _unpack(series, y)
    if len(t) < 10:
        raise ValueError("need at least 10 points")
    t = t - t[0]
    span = float(np.ptp(y))
    if span <= 1e-12 * max(abs(float(np.mean(y))), 1e-300):
        return FitResult({"A": 0.0, "rate": 0.0, "offset": float(np.mean(y))},
                         np.zeros((3, 3)), float(np.std(y)), True, 0, 1.0, degenerate=True)
    keep = y > 0.05 * np.max(y)
    slope, icpt = np.polyfit(t[keep], np.log(y[keep]), 1) if keep.sum() >= 2 else (0.0, 0.0)
    rate0 = -slope if slope < 0 else 1.0 / max(t[-1], 1e-12)
    p0 = [math.exp(icpt) if slope < 0 else float(y[0]), rate0, 0.0]
    res = fit_model(exp_decay, t, y, p0, ["A", "rate", "offset"], _exp_decay_jac)
    res.degenerate = abs(res.params["rate"]) * t[-1] < 1e-9
    return res


def _sech(u):
    a = np.exp(-np.abs(u))
    return 2.0 * a / (1.0 + a * a)


def sech_pulse(t, amplitude, width_rate, t0):
    return amplitude * _sech(width_rate * (np.asarray(t, dtype=float) - t0))


def _sech_jac(t, amplitude, width_rate, t0):
    u = width_rate * (t - t0)
    s = _sech(u)
    th = np.tanh(u)
    return np.column_stack([s, -amplitude * s * th * (t - t0), amplitude * s * th * width_rate])


def fit_sech(series, y=None) -> FitResult:
    """Fit ``amplitude * sech[width_rate (t - t0)]`` to a burst envelope.

    ``t0`` starts at the sample maximum and ``width_rate`` at
    ``2 acosh(2) / FWHM``.  Raises ``ValueError`` if the maximum sits on
    either end of the record.
    """
    t, y = _unpack(series, y)
    i = int(np.argmax(y))
    if i == 0 or i == len(y) - 1:
        raise ValueError("no interior maximum; cannot initialize sech fit")
    above = np.nonzero(y >= 0.5 * y[i])[0]
    width = max(t[above[-1]] - t[above[0]], t[1] - t[0])
    p0 = [float(y[i]), 2.0 * _SECH_HALF / width, float(t[i])]
    return fit_model(sech_pulse, t, y, p0, ["amplitude", "width_rate", "t0"], _sech_jac)


def fit_inverse_freq(points) -> FitResult:
    """Least-squares ``a`` for ``xi = a / nu`` from ``(nu, xi)`` pairs."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    nu, xi = pts[:, 0], pts[:, 1]
    if np.any(nu <= 0):
        raise ValueError("frequencies must be positive")
    u = 1.0 / nu
    a = float(np.sum(u * xi) / np.sum(u * u))
    r = a * u - xi
    dof = len(nu) - 1
    var = float(r @ r) / dof / float(np.sum(u * u)) if dof > 0 else 0.0
    return FitResult({"a": a}, np.array([[var]]), float(np.sqrt(np.mean(r ** 2))), True, 1,
                     _r_squared(xi, r))


def fit_linear(points) -> FitResult:
    """Ordinary least squares ``y = a x + b`` from ``(x, y)`` pairs."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x, y = pts[:, 0], pts[:, 1]
    if len(x) < 2:
        raise ValueError("need at least two points")
    X = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = X @ coef - y
    return FitResult({"a": float(coef[0]), "b": float(coef[1])}, _covariance(X, r, 2),
                     float(np.sqrt(np.mean(r ** 2))), True, 1, _r_squared(y, r))
