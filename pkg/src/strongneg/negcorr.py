"""The pair negative-correlation functional and its closed-form lower bounds."""
from __future__ import annotations

import numpy as np

from .errors import InputError

T_MIN = 4.0 / 3.0
T_MAX = 50.0  # exp(2t) stays far from overflow below this


def _check_unit(name, v):
    v = np.asarray(v, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
        raise InputError(f"{name} must lie in [0, 1]")
    return v


def phi(x1, x2, rho1, rho2):
    """Strength of the anti-correlation between two edges of one left-node.

    Vectorised over broadcastable inputs.  Zero unless all four arguments lie
    strictly inside (0, 1).  Evaluated through ``b_i = (1 - rho_i)^(1/x_i - 1)``,
    which lies in (0, 1] and cannot overflow.
    """
    x1, x2 = _check_unit("x1", x1), _check_unit("x2", x2)
    rho1, rho2 = _check_unit("rho1", rho1), _check_unit("rho2", rho2)
    x1, x2, rho1, rho2 = np.broadcast_arrays(x1, x2, rho1, rho2)
    inside = (x1 > 0) & (x1 < 1) & (x2 > 0) & (x2 < 1) & (rho1 > 0) & (rho1 < 1) & (rho2 > 0) & (rho2 < 1)
    out = np.zeros(x1.shape)
    if np.any(inside):
        a, b = x1[inside], x2[inside]
        r, s = rho1[inside], rho2[inside]
        b1 = np.exp((1 / a - 1) * np.log1p(-r))
        b2 = np.exp((1 / b - 1) * np.log1p(-s))
        out[inside] = (1 - b1) * (1 - b2) / (1 + (r + s - 1) * b1 * b2)
    return out if out.ndim else float(out)


def _check_t(t, lo, strict=False):
    t = np.asarray(t, dtype=float)
    bad = (t <= lo) if strict else (t < lo)
    if np.any(~np.isfinite(t)) or np.any(bad) or np.any(t > T_MAX):
        raise InputError(f"t must lie in {'(' if strict else '['}{lo:g}, {T_MAX:g}]")
    return t


def phi_proportional_lb(x1, x2, t):
    """Lower bound on ``phi(x1, x2, t*x1, t*x2)`` for rates proportional to mass.

    Returns ``tanh(t/2) - 0.57 (x1 + x2) max(0, 1/t - 0.45)``; valid for
    ``t >= 4/3`` with ``t*x1, t*x2`` below 1.
    """
    t = _check_t(t, T_MIN)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x1 <= 0) or np.any(x1 >= 1) or np.any(x2 <= 0) or np.any(x2 >= 1):
        raise InputError("x1, x2 must lie in (0, 1)")
    if np.any(t * x1 > 1 + 1e-12) or np.any(t * x2 > 1 + 1e-12):
        raise InputError("t * x must not exceed 1")
    out = np.tanh(t / 2) - 0.57 * (x1 + x2) * np.maximum(0.0, 1 / t - 0.45)
    return out if np.ndim(out) else float(out)


def phi_exponential_rule(x1, x2, t):
    """Exact ``phi`` and its simple lower bound for ``rho_i = 1 - exp(-x_i t)``.

    Returns
    -------
    (exact, lower)
        ``exact = 1 - (e^t - 1)(e^{x1 t} + e^{x2 t}) / (e^{2t} - e^{x1 t} - e^{x2 t} + e^{(x1+x2) t})``
        and ``lower = 1 - (e^{x1 t} + e^{x2 t}) / (1 + e^t)``.
    """
    t = _check_t(t, 0.0, strict=True)
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x1 <= 0) or np.any(x1 >= 1) or np.any(x2 <= 0) or np.any(x2 >= 1):
        raise InputError("x1, x2 must lie in (0, 1)")
    e1 = np.exp(x1 * t)
    e2 = np.exp(x2 * t)
    et = np.exp(t)
    # e^{2t} - e1 - e2 + e1 e2 written as (e1 - 1)(e2 - 1) + e^{2t} - 1 to avoid cancellation
    denom = np.expm1(x1 * t) * np.expm1(x2 * t) + np.expm1(2 * t)
    exact = 1 - np.expm1(t) * (e1 + e2) / denom
    lower = 1 - (e1 + e2) / (1 + et)
    if np.ndim(exact) == 0:
        return float(exact), float(lower)
    return exact, lower
