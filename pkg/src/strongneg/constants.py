"""Numerical certification of the analysis constants and the approximation ratio.

Each bound is computed with 64-bit floats over grids, boxes or strips.
Where a closed form exists for the inner optimum (the c1'' expression is a
quadratic over a linear function of ``d``, and the cluster inequality is
convex in ``x``) it is used; the remaining dimensions are scanned on a grid
and the best cells are refined by repeated local zooming.  Every result
records how far that refinement moved the grid optimum.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import InputError, InvalidParameterSet
from .params import DEFAULT, ParameterSet
from .rng import RngStream

C1_PIN = 0.591909465  # value the closed-form c1' branch is pinned to by kappa_for


def rate_tanh(lam):
    """``(e^{1/lam} - 1) / (e^{1/lam} + 1)``."""
    return np.tanh(0.5 / np.asarray(lam, dtype=float))


def c0_value(tau: float) -> float:
    return 1.14 * (tau - 0.45)


def c2_value(tau: float) -> float:
    """Half of ``rate_tanh(tau)``, rounded down to 5 decimals."""
    return math.floor(0.5 * float(rate_tanh(tau)) * 1e5) / 1e5


def class_average(pi: float, kappa: float) -> float:
    """``E[(H - kappa) / H^2]`` for ``log_pi H`` uniform on [0, 1]."""
    return (kappa - 2 * pi + 2 * pi**2 - kappa * pi**2) / (2 * pi**2 * math.log(pi))


def c3_value(c1: float, pi: float, kappa: float) -> float:
    return 1 - c1 * class_average(pi, kappa)


def kappa_for(theta: float, c1: float = C1_PIN) -> float:
    """``kappa`` making the closed-form c1' branch ``2 kappa theta rate_tanh(theta)`` equal ``c1``."""
    return c1 / (2 * theta * float(rate_tanh(theta)))


# grids ----------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Resolutions of every grid computation.

    ``c1pp_box`` and ``c5_strip`` are the box and strip widths; the ``*_n``
    fields count points per axis of the inner scans; ``zoom`` is the number
    of local refinement rounds applied to the best cells.
    """

    c1p_n: int = 61
    c1pp_box: float = 1e-3
    c1pp_nx: int = 6
    c1pp_ns: int = 8
    c1pp_keep: int = 4000
    c4_n: int = 201
    c5_strip: float = 1e-3
    c5_n: int = 41
    zoom: int = 6
    ratio_n: int = 4001
    check_n: int = 201

    def __post_init__(self):
        for k, v in asdict(self).items():
            if not v > 0:
                raise InputError(f"grid resolution {k} must be positive")

    @classmethod
    def search(cls) -> "GridSpec":
        """Coarse resolutions used inside the parameter search."""
        return cls(c1p_n=21, c1pp_box=1e-3, c1pp_keep=1000, c4_n=61, c5_strip=2e-2,
                   c5_n=25, zoom=4, ratio_n=1001, check_n=61)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GridResult:
    value: float
    resolution: float
    margin: float  # |refined - raw grid optimum|
    at: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "resolution": self.resolution, "margin": self.margin,
                "at": {k: float(v) for k, v in self.at.items()}}


def _zoom(fun, lo, hi, start, width, n, rounds, maximize):
    """Refine per-item optima of ``fun(u, v)`` on boxes ``[lo, hi]`` (arrays of shape ``(B, 2)``)."""
    sign = -1.0 if maximize else 1.0
    best = start.copy()
    val = sign * fun(best[:, :1], best[:, 1:])[:, 0]
    w = width.copy()
    offs = np.linspace(-1.0, 1.0, n)
    du, dv = np.meshgrid(offs, offs, indexing="ij")
    du, dv = du.ravel()[None, :], dv.ravel()[None, :]
    for _ in range(rounds):
        U = np.clip(best[:, :1] + du * w[:, :1], lo[:, :1], hi[:, :1])
        V = np.clip(best[:, 1:] + dv * w[:, 1:], lo[:, 1:], hi[:, 1:])
        F = sign * fun(U, V)
        F = np.where(np.isfinite(F), F, np.inf)
        k = np.argmin(F, axis=1)
        rows = np.arange(F.shape[0])
        better = F[rows, k] < val
        best[better, 0] = U[rows, k][better]
        best[better, 1] = V[rows, k][better]
        val = np.where(better, F[rows, k], val)
        w = w * (2.0 / (n - 1))
    return sign * val, best


def _chunks(n, size):
    return [(a, min(n, a + size)) for a in range(0, n, size)]


def _map(fn, jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, jobs))
    return [fn(j) for j in jobs]


# f, g ------------------------------------------------------------------------

def _f(r, t, c1, c2, kappa):
    return np.maximum(0.0, c1 * (t - kappa) - c2 * r * t * t)


def eval_f(r, t, c1: float, c2: float, kappa: float, theta: float | None = None,
           pi: float | None = None):
    """``max(0, c1 (t - kappa) - c2 r t^2)`` for ``r`` in [0, theta], ``t`` in [1, pi]."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(r < 0) or (theta is not None and np.any(r > theta)):
        raise InputError("r outside [0, theta]")
    if np.any(t < 1) or (pi is not None and np.any(t > pi)):
        raise InputError("t outside [1, pi]")
    out = _f(r, t, c1, c2, kappa)
    return out if out.ndim else float(out)


def _radicand(r, t, h, c1, c2, kappa, beta):
    return beta * (h - kappa) * _f(r, t, c1, c2, kappa) / (h * h * (t - kappa))


def _g(r, t, h, c1, c2, kappa, beta):
    y = _radicand(r, t, h, c1, c2, kappa, beta)
    # h (1 - sqrt(1 - y)) written without cancellation
    return h * y / (1 + np.sqrt(np.maximum(1 - y, 0.0)))


def eval_g(r, t, h, params: ParameterSet, consts) -> np.ndarray | float:
    """``h (1 - sqrt(1 - beta (h - kappa) f(r, t) / (h^2 (t - kappa))))``.

    ``consts`` supplies ``c1`` and ``c2`` (a :class:`DerivedConstants` or a mapping).
    """
    c1, c2 = _pick(consts, "c1"), _pick(consts, "c2")
    r, t, h = (np.asarray(v, dtype=float) for v in (r, t, h))
    if np.any(r < 0) or np.any(r > params.theta):
        raise InputError("r outside [0, theta]")
    for name, v in (("t", t), ("h", h)):
        if np.any(v < 1) or np.any(v > params.pi):
            raise InputError(f"{name} outside [1, pi]")
    y = _radicand(r, t, h, c1, c2, params.kappa, params.beta)
    if np.any(y > 1 + 1e-12) or np.any(y < -1e-12):
        raise InvalidParameterSet("square-root argument of g leaves [0, 1]")
    out = _g(r, t, h, c1, c2, params.kappa, params.beta)
    return out if out.ndim else float(out)


def _pick(consts, name):
    return float(consts[name] if isinstance(consts, dict) else getattr(consts, name))


# c1' -------------------------------------------------------------------------

def c1_prime_integrand(r, s, x, params: ParameterSet):
    """The quantity minimised by c1', with the cluster's own rate ``rate_tanh(r)``."""
    a = rate_tanh(r)
    c0 = c0_value(params.tau)
    return s * (x + (a - c0 * x) * (s - x)) / (2 * (s - params.kappa * r))


def c1_prime_closed(params: ParameterSet) -> float:
    """Closed-form lower bound on the ``s <= 4/3`` part: ``2 kappa theta rate_tanh(theta)``."""
    return 2 * params.kappa * params.theta * float(rate_tanh(params.theta))


def c1_prime_branch_ok(params: ParameterSet) -> float:
    """Slack of the condition making the ``s <= 4/3`` integrand increasing in ``x``."""
    return 1 - float(rate_tanh(params.theta)) - 4 / 3 * c0_value(params.tau)


def c1_prime(params: ParameterSet, grid: GridSpec | None = None) -> GridResult:
    """Lower bound on the minimum of :func:`c1_prime_integrand` over ``r`` in [theta, tau].

    The ``s <= 4/3`` part uses the closed form; the ``s >= 4/3`` part replaces
    the rate by ``rate_tanh(tau)`` (a minorant), minimises over ``x`` exactly
    (the integrand is convex in ``x``) and scans ``(r, s)``.
    """
    grid = grid or GridSpec()
    if c1_prime_branch_ok(params) < 0:
        raise InvalidParameterSet("closed-form c1' branch needs 1 - rate_tanh(theta) >= 4 c0 / 3")
    th, tau, pi, kappa = params.theta, params.tau, params.pi, params.kappa
    c0 = c0_value(tau)
    a = float(rate_tanh(tau))
    first = c1_prime_closed(params)

    def fun(r, u):
        s_lo = np.maximum(r, 4 / 3)
        s = s_lo + u * (pi * r - s_lo)
        x = np.clip((a + c0 * s - 1) / (2 * c0), 0.0, r)
        val = s * (x + (a - c0 * x) * (s - x)) / (2 * (s - kappa * r))
        return np.where(pi * r >= s_lo, val, np.inf)

    n = grid.c1p_n
    R, U = np.meshgrid(np.linspace(th, tau, n), np.linspace(0, 1, n), indexing="ij")
    F = fun(R, U)
    if not np.isfinite(F).any():
        second, raw, at = np.inf, np.inf, {}
    else:
        k = np.unravel_index(np.argmin(F), F.shape)
        raw = float(F[k])
        start = np.array([[R[k], U[k]]])
        width = np.array([[(tau - th) / (n - 1), 1 / (n - 1)]])
        lo, hi = np.array([[th, 0.0]]), np.array([[tau, 1.0]])
        val, best = _zoom(fun, lo, hi, start, width, 9, grid.zoom, False)
        second = float(val[0])
        at = {"r": best[0, 0], "u": best[0, 1]}
    value = min(first, second)
    return GridResult(value, 1 / (grid.c1p_n - 1), abs(raw - second) if np.isfinite(raw) else 0.0,
                      {"closed_branch": first, "grid_branch": second, **at})


# c1'' ------------------------------------------------------------------------

def c1_doubleprime_integrand(r, x, y, s, d, params: ParameterSet):
    """Exact quantity bounded by c1'' (truncated cluster), using :func:`negcorr.phi`."""
    from .negcorr import phi

    tau, kappa = params.tau, params.kappa
    a = float(rate_tanh(tau))
    c0 = c0_value(tau)
    ph = phi(x, y, np.asarray(x) / tau, 1 - np.asarray(r) / tau)
    num = d * d + s * (x + (a - c0 * x) * (s - x) + 2 * d * ph)
    return num / (2 * (s + d - kappa * (r + y)))


def c1pp_boxes(params: ParameterSet, eps: float):
    """Boxes ``[r_lo, r_hi] x [y_lo, y_hi]`` covering ``r`` in [0, theta], ``y`` in [tau - r, 1]."""
    th, tau = params.theta, params.tau
    rows = []
    nr = int(math.ceil(th / eps - 1e-9))
    for k in range(nr):
        rlo, rhi = k * eps, min(th, (k + 1) * eps)
        y0 = tau - rhi
        m = np.arange(int(math.floor(y0 / eps + 1e-9)), int(math.ceil(1 / eps - 1e-9)))
        ylo = np.maximum(m * eps, y0)
        yhi = np.minimum((m + 1) * eps, 1.0)
        keep = ylo < yhi
        rows.append(np.stack([np.full(keep.sum(), rlo), np.full(keep.sum(), rhi),
                              ylo[keep], yhi[keep]], axis=1))
    return np.concatenate(rows, axis=0)


def _c1pp_box_fun(params: ParameterSet, boxes: np.ndarray):
    tau, kappa, pi = params.tau, params.kappa, params.pi
    c0 = c0_value(tau)
    u0 = math.exp(1 / tau)
    z = 1 / tau - 0.5 / tau**2
    u2 = float(rate_tanh(tau))
    rlo, rhi, ylo, yhi = (boxes[:, i:i + 1] for i in range(4))
    u1 = (rhi / tau) ** (1 - 1 / yhi)
    K0 = kappa * (rlo + ylo)
    dlo, dhi = ylo, pi * yhi

    def fun(x, s):
        a1 = u0 * (1 - z * x)
        ph = (a1 - 1) * (u1 - 1) / (a1 * u1 - (rlo - x) / tau)
        C = s * (x + (u2 - c0 * x) * (s - x))
        B = 2 * s * ph
        K = s - K0
        # d -> (d^2 + B d + C) / (2 (d + K)) has its only stationary point right of -K here
        dstar = np.clip(-K + np.sqrt(np.maximum(K * K - B * K + C, 0.0)), dlo, dhi)

        def h(d):
            return (d * d + B * d + C) / (2 * (d + K))

        return np.minimum(np.minimum(h(dlo), h(dhi)), h(dstar))

    lo = np.concatenate([np.zeros_like(rlo), rlo], axis=1)
    hi = np.concatenate([rhi, pi * rhi], axis=1)
    return fun, lo, hi


def c1_doubleprime_boxes(params: ParameterSet, eps: float, grid: GridSpec | None = None,
                         threads: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(boxes, values)``: the boxes and their grid values on the raw ``(x, s)`` grid.

    ``values[b]`` holds, for every ``(x, s)`` grid node of box ``b``, the box
    minorant already minimised over ``d``.
    """
    grid = grid or GridSpec()
    boxes = c1pp_boxes(params, eps)
    ux = np.linspace(0, 1, grid.c1pp_nx)[None, :, None]
    us = np.linspace(0, 1, grid.c1pp_ns)[None, None, :]

    def run(span):
        a, b = span
        fun, lo, hi = _c1pp_box_fun(params, boxes[a:b])
        X = (lo[:, :1, None] + ux * (hi[:, :1, None] - lo[:, :1, None]))
        S = (lo[:, 1:, None] + us * (hi[:, 1:, None] - lo[:, 1:, None]))
        X, S = np.broadcast_arrays(X, S)
        B = b - a
        return fun(X.reshape(B, -1), S.reshape(B, -1))

    parts = _map(run, _chunks(len(boxes), 8192), threads)
    return boxes, np.concatenate(parts, axis=0)


def c1_doubleprime(params: ParameterSet, grid: GridSpec | None = None, threads: int = 1) -> GridResult:
    """Box lower bound on the truncated-cluster ratio.

    Each ``(r, y)`` box replaces the box-dependent terms by minorants
    (``u1 = (r_hi/tau)^(1-1/y_hi)``, the tangent-line minorant
    ``e^{1/tau}(1 - z x)`` of ``(1 - x/tau)^(1-1/x)``, ``r_lo`` in the
    correction term and ``r_lo + y_lo`` in the denominator), then minimises
    over ``x`` in [0, r_hi], ``s`` in [r_lo, pi r_hi] and ``d`` in
    [y_lo, pi y_hi].  ``d`` is minimised in closed form; the ``grid.c1pp_keep``
    boxes with the lowest grid values are refined by zooming.
    """
    grid = grid or GridSpec()
    eps = grid.c1pp_box
    boxes, vals = c1_doubleprime_boxes(params, eps, grid, threads)
    nx, ns = grid.c1pp_nx, grid.c1pp_ns
    per_box = vals.min(axis=1)
    raw = float(per_box.min())
    keep = np.argsort(per_box, kind="stable")[: grid.c1pp_keep]
    fun, lo, hi = _c1pp_box_fun(params, boxes[keep])
    kk = np.argmin(vals[keep], axis=1)
    ix, is_ = np.unravel_index(kk, (nx, ns))
    start = np.stack([lo[:, 0] + ix / (nx - 1) * (hi[:, 0] - lo[:, 0]),
                      lo[:, 1] + is_ / (ns - 1) * (hi[:, 1] - lo[:, 1])], axis=1)
    width = np.stack([(hi[:, 0] - lo[:, 0]) / (nx - 1), (hi[:, 1] - lo[:, 1]) / (ns - 1)], axis=1)
    refined, best = _zoom(fun, lo, hi, start, width, 9, grid.zoom + 2, False)
    b = int(np.argmin(refined))
    value = float(refined[b])
    rlo, rhi, ylo, yhi = boxes[keep[b]]
    return GridResult(value, eps, abs(raw - value),
                      {"r_lo": rlo, "r_hi": rhi, "y_lo": ylo, "y_hi": yhi,
                       "x": best[b, 0], "s": best[b, 1], "boxes": len(boxes)})


# c4, c5 ----------------------------------------------------------------------

def c4_value(params: ParameterSet, c1: float, c2: float, grid: GridSpec | None = None) -> GridResult:
    """Maximum of ``2 r g(r, t, t) / (pi - 1)`` over ``r`` in [0, theta], ``t`` in [1, pi]."""
    grid = grid or GridSpec()
    th, pi, kappa, beta = params.theta, params.pi, params.kappa, params.beta

    def fun(r, t):
        return 2 * r * _g(r, t, t, c1, c2, kappa, beta) / (pi - 1)

    n = grid.c4_n
    R, T = np.meshgrid(np.linspace(0, th, n), np.linspace(1, pi, n), indexing="ij")
    F = fun(R, T)
    k = np.unravel_index(np.argmax(F), F.shape)
    raw = float(F[k])
    val, best = _zoom(fun, np.array([[0.0, 1.0]]), np.array([[th, pi]]), np.array([[R[k], T[k]]]),
                      np.array([[th / (n - 1), (pi - 1) / (n - 1)]]), 9, grid.zoom, True)
    return GridResult(float(val[0]), 1 / (n - 1), abs(float(val[0]) - raw),
                      {"r": best[0, 0], "t": best[0, 1]})


def f_zero_radius(c1: float, c2: float, kappa: float, pi: float) -> float:
    """Smallest ``r`` with ``f(r, t) = 0`` for every ``t`` in [1, pi]."""
    t = min(max(2 * kappa, 1.0), pi)
    return max(0.0, c1 * (t - kappa) / (c2 * t * t))


def strip_weights(edges) -> np.ndarray:
    """``1/(2 a^2) - 1/(2 b^2)`` for consecutive strip edges ``a < b``."""
    e = np.asarray(edges, dtype=float)
    return 0.5 / e[:-1] ** 2 - 0.5 / e[1:] ** 2


def strip_edges(pi: float, eps: float) -> np.ndarray:
    n = int(math.ceil((pi - 1) / eps - 1e-9))
    e = 1 + eps * np.arange(n + 1)
    e[-1] = pi
    return e


def _fmax_fun(params, c1, c2, c4, hlo, hhi):
    kappa, beta, delta, gamma = params.kappa, params.beta, params.delta, params.gamma

    def fun(r, t):
        G = _g(r, t, hhi, c1, c2, kappa, beta)
        return (G * (c4 + r * (t + delta) * G / (hlo + delta))
                - (hlo + delta) * gamma * _f(r, t, c1, c2, kappa) / (t + delta))

    return fun


def f_max(params: ParameterSet, c1, c2, c4, hlo, hhi, grid: GridSpec | None = None):
    """Upper estimates of the strip maxima ``F^max[hlo, hhi]`` (vectorised over strips).

    ``g`` is evaluated at ``hhi`` (it is non-decreasing in ``h``) and the two
    ``h + delta`` factors at ``hlo``.  ``r`` ranges over ``[0, R]`` where ``R``
    is the radius beyond which ``f`` vanishes, so every larger ``r`` only
    contributes the value 0, which is included.
    """
    grid = grid or GridSpec()
    hlo = np.asarray(hlo, dtype=float)[:, None]
    hhi = np.asarray(hhi, dtype=float)[:, None]
    pi = params.pi
    R = max(params.theta, f_zero_radius(c1, c2, params.kappa, pi))
    n = grid.c5_n
    rr, tt = np.meshgrid(np.linspace(0, R, n), np.linspace(1, pi, n), indexing="ij")
    rr, tt = rr.ravel()[None, :], tt.ravel()[None, :]
    fun = _fmax_fun(params, c1, c2, c4, hlo, hhi)
    F = fun(rr, tt)
    k = np.argmax(F, axis=1)
    raw = F[np.arange(F.shape[0]), k]
    B = hlo.shape[0]
    start = np.stack([rr[0, k], tt[0, k]], axis=1)
    lo = np.tile([0.0, 1.0], (B, 1))
    hi = np.tile([R, pi], (B, 1))
    width = np.tile([R / (n - 1), (pi - 1) / (n - 1)], (B, 1))
    val, _ = _zoom(fun, lo, hi, start, width, 7, grid.zoom, True)
    return np.maximum(val, 0.0), np.maximum(raw, 0.0)


def c5_upper(params: ParameterSet, consts, grid: GridSpec | None = None, threads: int = 1) -> GridResult:
    """Strip upper bound on ``(1/log pi) * integral_1^pi F(h) / h^3 dh``.

    ``consts`` supplies ``c1``, ``c2`` and ``c4``.
    """
    grid = grid or GridSpec()
    c1, c2, c4 = _pick(consts, "c1"), _pick(consts, "c2"), _pick(consts, "c4")
    edges = strip_edges(params.pi, grid.c5_strip)
    w = strip_weights(edges)

    def run(span):
        a, b = span
        return f_max(params, c1, c2, c4, edges[a:b], edges[a + 1:b + 1], grid)

    parts = _map(run, _chunks(len(w), 256), threads)
    vals = np.concatenate([p[0] for p in parts])
    raws = np.concatenate([p[1] for p in parts])
    lp = math.log(params.pi)
    value = float(vals @ w) / lp
    k = int(np.argmax(vals))
    return GridResult(value, grid.c5_strip, abs(value - float(raws @ w) / lp),
                      {"strips": len(w), "peak_h": edges[k], "peak_F": vals[k]})


# ratio -----------------------------------------------------------------------

def ratio_function(v, beta_c3: float, c3: float, c6: float):
    v = np.asarray(v, dtype=float)
    return (beta_c3 + 1) * (c3 * v * v + 0.5) / (beta_c3 * v * v + np.maximum(0.0, 1 - c6 * v) ** 2)


def ratio_limit(beta_c3: float, c3: float) -> float:
    """Value of :func:`ratio_function` as ``v -> infinity``."""
    return (beta_c3 + 1) * c3 / beta_c3


def max_ratio(beta_c3: float, c3: float, c6: float, n: int = 4001):
    """Maximise :func:`ratio_function` over ``v >= 0``; returns ``(ratio, v_star)``.

    For ``v >= 1/c6`` the function is decreasing, so the scan covers
    ``[0, 1/c6]`` and the limit at infinity is included for ``c6 = 0``.
    """
    from scipy.optimize import minimize_scalar

    vmax = 1 / c6 if c6 > 0 else max(100.0, 10 / math.sqrt(beta_c3))
    vs = np.linspace(0, vmax, n)
    F = ratio_function(vs, beta_c3, c3, c6)
    k = int(np.argmax(F))
    best, vbest = float(F[k]), float(vs[k])
    if 0 < k < n - 1:
        res = minimize_scalar(lambda v: -float(ratio_function(v, beta_c3, c3, c6)),
                              bracket=(vs[k - 1], vs[k], vs[k + 1]), method="golden",
                              options={"xtol": 1e-12})
        if -res.fun > best:
            best, vbest = float(-res.fun), float(res.x)
    if c6 == 0:
        best = max(best, ratio_limit(beta_c3, c3))
    return best, vbest


# derived constants ----------------------------------------------------------

@dataclass(frozen=True)
class DerivedConstants:
    c0: float
    c1: float
    c2: float
    c3: float
    c4: float
    c5: float
    c6: float
    ratio: float
    v_star: float
    c1_prime: float
    c1_doubleprime: float
    margins: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def beta_c3(self) -> float:
        return self.details.get("beta_c3", float("nan"))

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    def with_(self, **kw) -> "DerivedConstants":
        return replace(self, **kw)


def _constants(params, c1p: GridResult, c1pp: GridResult, grid, threads):
    c0 = c0_value(params.tau)
    c2 = c2_value(params.tau)
    c1 = min(c1p.value, c1pp.value)
    c3 = c3_value(c1, params.pi, params.kappa)
    y = _radicand(0.0, np.linspace(1, params.pi, 5), np.linspace(1, params.pi, 5),
                  c1, c2, params.kappa, params.beta)
    if np.any(y > 1):
        raise InvalidParameterSet("square-root argument of g exceeds 1")
    r4 = c4_value(params, c1, c2, grid)
    c4 = r4.value
    r5 = c5_upper(params, {"c1": c1, "c2": c2, "c4": c4}, grid, threads)
    c5 = r5.value
    c6 = math.sqrt(max(params.gamma * c3, c5))
    bc3 = params.beta * c3
    ratio, v = max_ratio(bc3, c3, c6, grid.ratio_n)
    for name, val in (("c3", c3), ("c4", c4), ("c5", c5), ("ratio", ratio)):
        if not np.isfinite(val):
            raise InvalidParameterSet(f"{name} is not finite")
    margins = {"c1_prime": c1p.margin, "c1_doubleprime": c1pp.margin,
               "c4": r4.margin, "c5": r5.margin}
    details = {"beta_c3": bc3, "c1_prime": c1p.to_dict(), "c1_doubleprime": c1pp.to_dict(),
               "c4": r4.to_dict(), "c5": r5.to_dict(), "grid": grid.to_dict()}
    return DerivedConstants(c0, c1, c2, c3, c4, c5, c6, ratio, v, c1p.value, c1pp.value,
                            margins, details)


def derive_constants(params: ParameterSet = DEFAULT, grids: GridSpec | None = None,
                     threads: int = 1) -> DerivedConstants:
    """Compute ``c0..c6`` and the ratio; raises :class:`InvalidParameterSet` on ill-defined sets."""
    grid = grids or GridSpec()
    return _constants(params, c1_prime(params, grid), c1_doubleprime(params, grid, threads),
                      grid, threads)


# verification reports --------------------------------------------------------

@dataclass
class Margin:
    name: str
    margin: float
    ok: bool
    detail: dict = field(default_factory=dict)


@dataclass
class MarginReport:
    checks: list = field(default_factory=list)

    def add(self, name, margin, tol=0.0, **detail):
        self.checks.append(Margin(name, float(margin), bool(margin >= -tol),
                                  {k: float(v) for k, v in detail.items()}))

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def __getitem__(self, name) -> Margin:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [asdict(c) for c in self.checks]}


def _cluster_margin(r, t, c0, c1, c2, kappa):
    # the left side is convex in x, so its minimum over [0, r] is explicit
    x = np.clip((2 * c2 + c0 * r * t - 1) / (2 * c0), 0.0, r)
    lhs = t / 2 * (x + (2 * c2 - c0 * x) * (r * t - x))
    return lhs - np.minimum(c1 * (t - kappa), c2 * r * t * t)


def verify_internal_inequalities(params: ParameterSet, consts: DerivedConstants,
                                 resolution: int | None = None) -> MarginReport:
    """Grid checks of every inequality the ratio argument relies on."""
    n = int(resolution or GridSpec().check_n)
    th, pi, kappa, tau = params.theta, params.pi, params.kappa, params.tau
    c0, c1, c2, c3 = consts.c0, consts.c1, consts.c2, consts.c3
    rep = MarginReport()
    rep.add("tau_range", min(0.75 - tau, tau - th))
    rep.add("c0_definition", -abs(c0 - c0_value(tau)), 1e-12)
    rep.add("c2_below_rate", float(rate_tanh(tau)) - 2 * c2)
    rep.add("c1_closed_branch_valid", c1_prime_branch_ok(params))
    rep.add("c1_below_c1_prime", consts.c1_prime - c1)
    rep.add("c1_below_c1_doubleprime", consts.c1_doubleprime - c1)

    R, T = np.meshgrid(np.linspace(0, th, n), np.linspace(1, pi, n), indexing="ij")
    m = _cluster_margin(R, T, c0, c1, c2, kappa)
    k = np.unravel_index(np.argmin(m), m.shape)
    rep.add("leftover_cluster", m[k], 1e-12, r=R[k], t=T[k])
    # refine between grid nodes near the worst cell
    fun = lambda r, t: _cluster_margin(r, t, c0, c1, c2, kappa)  # noqa: E731
    val, best = _zoom(lambda u, v: fun(u, v), np.array([[0.0, 1.0]]), np.array([[th, pi]]),
                      np.array([[R[k], T[k]]]), np.array([[th / (n - 1), (pi - 1) / (n - 1)]]),
                      9, 6, False)
    rep.add("leftover_cluster_refined", val[0], 1e-12, r=best[0, 0], t=best[0, 1])
    x0 = np.linspace(0, th, n)[:, None] * np.linspace(1, pi, n)[None, :] ** 2 * c2
    T2 = np.linspace(1, pi, n)[None, :]
    rep.add("leftover_cluster_x0", float(np.min(x0 - np.minimum(c1 * (T2 - kappa), x0))), 1e-12)

    m3 = max(21, n // 5)
    r3, t3, h3 = np.meshgrid(np.linspace(0, th, m3), np.linspace(1, pi, m3), np.linspace(1, pi, m3),
                             indexing="ij")
    y = _radicand(r3, t3, h3, c1, c2, kappa, params.beta)
    rep.add("radicand_upper", 1 - float(y.max()))
    rep.add("radicand_lower", float(y.min()))
    G = _g(r3, t3, h3, c1, c2, kappa, params.beta)
    dG = np.diff(G, axis=2)
    rep.add("g_nondecreasing_in_h", float(dG.min()), 1e-12)
    rep.add("g_concave_in_h", -float(np.diff(dG, axis=2).max()), 1e-12)
    rep.add("c3_consistent", c3 - c3_value(c1, pi, kappa), 1e-12)
    rep.add("c6_dominates", consts.c6**2 - max(params.gamma * c3, consts.c5), 1e-12)
    rep.add("ratio_at_least_one", consts.ratio - 1)
    return rep


class Interval:
    """Closed interval with the handful of operations needed for one-variable bounds."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        self.lo = np.asarray(lo, dtype=float)
        self.hi = self.lo if hi is None else np.asarray(hi, dtype=float)

    @staticmethod
    def _wrap(v):
        return v if isinstance(v, Interval) else Interval(v, v)

    def __add__(self, o):
        o = self._wrap(o)
        return Interval(np.nextafter(self.lo + o.lo, -np.inf), np.nextafter(self.hi + o.hi, np.inf))

    __radd__ = __add__

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __sub__(self, o):
        return self + (-self._wrap(o))

    def __rsub__(self, o):
        return self._wrap(o) - self

    def __mul__(self, o):
        o = self._wrap(o)
        c = np.stack([self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi])
        return Interval(np.nextafter(c.min(axis=0), -np.inf), np.nextafter(c.max(axis=0), np.inf))

    __rmul__ = __mul__

    def __truediv__(self, o):
        o = self._wrap(o)
        if np.any((o.lo <= 0) & (o.hi >= 0)):
            raise ZeroDivisionError("interval divisor contains 0")
        return self * Interval(np.nextafter(1 / o.hi, -np.inf), np.nextafter(1 / o.lo, np.inf))

    def clip_below(self, v=0.0):
        return Interval(np.maximum(self.lo, v), np.maximum(self.hi, v))


def _monotone(fn, lo, hi, increasing=True):
    a, b = fn(lo), fn(hi)
    if not increasing:
        a, b = b, a
    return Interval(np.nextafter(a, -np.inf), np.nextafter(b, np.inf))


def _lbgap_parts(t, tl, th):
    # t is an Interval; tl, th the strip ends used by the monotone factors
    z = t * t * 0.5 - t
    e1 = _monotone(np.exp, tl, th)
    e2 = _monotone(lambda v: np.exp(2 * v), tl, th)
    a = _monotone(lambda v: np.tanh(v / 2), tl, th)
    b = _monotone(lambda v: 0.57 * np.maximum(0.0, 1 / v - 0.45), tl, th, increasing=False)
    q = z * e2 / t + 1
    return z, e1, e2, a, b, q


def lbgap_interval(tl, th) -> Interval:
    """Naive interval enclosure of the one-variable sufficient condition on ``[tl, th]``."""
    t = Interval(tl, th)
    z, e1, e2, a, b, q = _lbgap_parts(t, tl, th)
    return b * ((e2 - 1) + q.clip_below(0.0)) + a * (z * e1 - t)


def lbgap_derivative(tl, th) -> Interval:
    """Interval enclosure of the derivative of :func:`lbgap_value` on ``[tl, th]``."""
    t = Interval(tl, th)
    z, e1, e2, a, b, q = _lbgap_parts(t, tl, th)
    da = (1 - a * a) * 0.5
    db = _monotone(lambda v: np.where(v < 1 / 0.45, -0.57 / (v * v), 0.0), tl, th)
    dz = t - 1
    n = z * e1 - t
    dn = (dz + z) * e1 - 1
    dq = (dz + z * 2 - z / t) * e2 / t
    # derivative of max(0, q): q' where q > 0, 0 where q < 0, either across the kink
    dmax = Interval(np.where(q.lo > 0, dq.lo, np.where(q.hi < 0, 0.0, np.minimum(dq.lo, 0.0))),
                    np.where(q.lo > 0, dq.hi, np.where(q.hi < 0, 0.0, np.maximum(dq.hi, 0.0))))
    P = (e2 - 1) + q.clip_below(0.0)
    dP = e2 * 2 + dmax
    return db * P + b * dP + da * n + a * dn


def lbgap_lower(tl, th) -> np.ndarray:
    """Per-strip lower bound: the better of the naive and the mean-value enclosures."""
    tl = np.asarray(tl, dtype=float)
    th = np.asarray(th, dtype=float)
    naive = lbgap_interval(tl, th).lo
    m = 0.5 * (tl + th)
    fm = lbgap_interval(m, m).lo
    d = lbgap_derivative(tl, th)
    half = np.nextafter(np.maximum(th - m, m - tl), np.inf)
    centred = fm - half * np.maximum(np.abs(d.lo), np.abs(d.hi))
    return np.maximum(naive, np.nextafter(centred, -np.inf))


def lbgap_value(t):
    """Point value of the quantity enclosed by :func:`lbgap_interval`."""
    t = np.asarray(t, dtype=float)
    z = t * t / 2 - t
    a = np.tanh(t / 2)
    b = 0.57 * np.maximum(0.0, 1 / t - 0.45)
    return b * (np.exp(2 * t) - 1 + np.maximum(0.0, 1 + z * np.exp(2 * t) / t)) + a * (z * np.exp(t) - t)


def taylor_minorant_gap(x, t):
    """``(1 - x t)^(1 - 1/x) - e^t (1 + x (t^2/2 - t))``, scaled by ``e^{-t}``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        lhs = np.exp((1 - 1 / x) * np.log1p(-x * t) - t)
    lhs = np.where(x == 0, 1.0, lhs)
    return lhs - (1 + x * (t * t / 2 - t))


def convexity_condition(y):
    """``(4/3)(1 - y + log y)^2 - (1 - y)(1 - y^2 + 2 y log y)`` on (0, 1]."""
    y = np.asarray(y, dtype=float)
    ly = np.log(y)
    return 4 / 3 * (1 - y + ly) ** 2 - (1 - y) * (1 - y * y + 2 * y * ly)


def verify_appendix_a(resolution: float = 1 / 2000, t_split: float = 2.22, t_max: float = 10.0,
                      n: int = 400) -> MarginReport:
    """Certify the one-variable inequalities behind the proportional-rate bound.

    (i) the tangent-line minorant on a grid over ``t`` in [4/3, t_max] and
    ``x`` in (0, 1/t), plus the second-derivative sign condition on (0, 1];
    (ii) interval enclosures over strips of width ``resolution`` on
    [4/3, t_split]; (iii) ``z e^t - t >= 0`` on [t_split, t_max] by strips,
    beyond which the expression is increasing.
    """
    rep = MarginReport()
    t = np.linspace(4 / 3, t_max, n)[:, None]
    frac = np.linspace(0, 1, n + 1)[1:-1][None, :]
    gap = taylor_minorant_gap(frac / t, t)
    k = np.unravel_index(np.argmin(gap), gap.shape)
    rep.add("taylor_minorant", gap[k], 0.0, t=t[k[0], 0], x=(frac / t)[k])
    y = np.linspace(0, 1, 20 * n + 1)[1:]
    rep.add("convexity_condition", float(convexity_condition(y).min()), 1e-15)

    edges = np.arange(0, int(math.ceil((t_split - 4 / 3) / resolution - 1e-9)) + 1) * resolution + 4 / 3
    edges[-1] = t_split
    low = lbgap_lower(edges[:-1], edges[1:])
    k = int(np.argmin(low))
    rep.add("lbgap_strips", float(low[k]), 0.0, t_lo=edges[k], t_hi=edges[k + 1],
            strips=len(edges) - 1, width=resolution)
    te = np.arange(t_split, t_max + resolution, resolution)
    tt = Interval(te[:-1], te[1:])
    zz = tt * tt * 0.5 - tt
    tail = zz * _monotone(np.exp, te[:-1], te[1:]) - tt
    rep.add("lbgap_tail", float(tail.lo.min()), 0.0, t_from=t_split, t_to=te[-1])
    # beyond t_max: derivative e^t (t^2/2 - 1) - 1 of z e^t - t stays positive
    rep.add("lbgap_tail_increasing", float(math.exp(t_split) * (t_split**2 / 2 - 1) - 1))
    return rep


# parameter search ------------------------------------------------------------

SEARCH_BOUNDS = {
    "pi": (2.5, 6.0),
    "theta": (0.50, 0.60),
    "beta": (1.2, 3.0),
    "delta": (0.0, 3.0),
    "log10_gamma": (-3.5, -1.5),
}


@dataclass
class SearchResult:
    params: ParameterSet
    constants: DerivedConstants
    report: MarginReport
    evaluations: int
    target: float = float("nan")
    history: list = field(default_factory=list)

    @property
    def reached(self) -> bool:
        return bool(self.report.ok and self.constants.ratio <= self.target)

    def to_dict(self) -> dict:
        return {"params": self.params.to_dict(), "constants": self.constants.to_dict(),
                "report": self.report.to_dict(), "evaluations": self.evaluations,
                "target": self.target, "reached": self.reached}


def _to_params(v: dict, tau: float, pin: bool, kappa: float | None) -> ParameterSet:
    k = kappa_for(v["theta"]) if pin else kappa
    return ParameterSet(pi=v["pi"], theta=v["theta"], tau=tau, kappa=k, beta=v["beta"],
                        delta=v["delta"], gamma=10 ** v["log10_gamma"])


def parameter_search(target_ratio: float = 1.40, budget: int = 300, seed: int = 0,
                     tau: float = 0.604, pin_kappa: bool = True, kappa: float = 0.744,
                     search_grid: GridSpec | None = None, final_grid: GridSpec | None = None,
                     restarts: int = 4, threads: int = 1) -> SearchResult:
    """Random-restart coordinate descent over ``(pi, theta, beta, delta, gamma)``.

    ``tau`` is held fixed and, with ``pin_kappa``, ``kappa`` follows
    :func:`kappa_for` so the closed-form c1' branch stays at :data:`C1_PIN`.
    Candidates are scored by the ratio at ``search_grid`` resolution; sets
    that are ill-defined or fail :func:`verify_internal_inequalities` are
    rejected.  The winner is re-derived at ``final_grid`` resolution;
    ``SearchResult.reached`` tells whether it meets ``target_ratio``.
    """
    if budget <= 0:
        raise InputError("budget must be positive")
    sgrid = search_grid or GridSpec.search()
    fgrid = final_grid or GridSpec()
    gen = RngStream(seed, stream_id=0x5EA7C4).generator()
    names = list(SEARCH_BOUNDS)
    lo = np.array([SEARCH_BOUNDS[k][0] for k in names])
    hi = np.array([SEARCH_BOUNDS[k][1] for k in names])
    c1_cache: dict = {}
    seen: dict = {}
    history: list = []
    evals = 0

    def score(vec):
        nonlocal evals
        memo = tuple(np.round(vec, 12))
        if memo in seen:
            return seen[memo]
        evals += 1
        v = dict(zip(names, vec))
        try:
            p = _to_params(v, tau, pin_kappa, kappa)
            key = (round(p.pi, 12), round(p.theta, 12), round(p.kappa, 12))
            if key not in c1_cache:
                c1_cache[key] = (c1_prime(p, sgrid), c1_doubleprime(p, sgrid, threads))
            dc = _constants(p, *c1_cache[key], sgrid, threads)
            if not verify_internal_inequalities(p, dc, sgrid.check_n).ok:
                return np.inf
            r = dc.ratio
        except (InvalidParameterSet, InputError, FloatingPointError):
            r = np.inf
        history.append((vec.tolist(), float(r)))
        seen[memo] = r
        return r

    # anchor start plus random restarts
    starts = [np.array([4.2, 0.555, 1.93, 1.4, math.log10(0.0052)])]
    starts += [lo + gen.random(len(names)) * (hi - lo) for _ in range(max(0, restarts - 1))]
    best_vec, best = None, np.inf
    per_start = max(1, budget // max(1, len(starts)))
    for x0 in starts:
        x = np.clip(x0, lo, hi)
        fx = score(x)
        step = 0.25 * (hi - lo)
        used = 1
        while used < per_start and np.max(step / (hi - lo)) > 1e-3:
            improved = False
            for i in range(len(names)):
                for sgn in (1, -1):
                    if used >= per_start or evals >= budget:
                        break
                    y = x.copy()
                    y[i] = np.clip(y[i] + sgn * step[i], lo[i], hi[i])
                    if y[i] == x[i]:
                        continue
                    fy = score(y)
                    used += 1
                    if fy < fx:
                        x, fx, improved = y, fy, True
                        break
            if not improved:
                step = step / 2
            if evals >= budget:
                break
        if fx < best:
            best_vec, best = x, fx
        if evals >= budget:
            break
    if best_vec is None or not np.isfinite(best):
        raise InvalidParameterSet("search found no admissible parameter set")
    p = _to_params(dict(zip(names, best_vec)), tau, pin_kappa, kappa)
    dc = derive_constants(p, fgrid, threads)
    rep = verify_internal_inequalities(p, dc, fgrid.check_n)
    return SearchResult(p, dc, rep, evals, target_ratio, history)
