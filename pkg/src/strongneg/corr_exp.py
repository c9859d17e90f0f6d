"""Negatively associated unit-rate Exponential clocks.

The sampler couples the integer parts of the clocks through one
Multivariate Geometric draw (first-occurrence trial counts of a categorical
process) and adds an independent fractional part to each coordinate.  Each
coordinate is exactly Exp(1); the coupling strength is set by the rate vector.
"""
from __future__ import annotations

import numpy as np

from .errors import InputError
from .rng import RngLike, as_generator

#: Trial count reported for indices with zero rate (they never occur).
NEVER = -1

# rates this close to 0 or 1 fall back to an independent Exponential
SNAP = 1e-12
_SUM_TOL = 1e-9


def validate_rates(rho) -> np.ndarray:
    """Return ``rho`` as a float vector after checking the rate-vector invariants."""
    r = np.asarray(rho, dtype=float)
    if r.ndim != 1:
        raise InputError("rate vector must be one-dimensional")
    if not np.all(np.isfinite(r)) or np.any(r < 0) or np.any(r > 1):
        raise InputError("rates must lie in [0, 1]")
    if r.sum() > 1 + _SUM_TOL:
        raise InputError(f"rates sum to {r.sum():.12g} > 1")
    return r


def _first_occurrences(r: np.ndarray, gen: np.random.Generator, n_draws: int) -> np.ndarray:
    # The order of first hits is a weighted sample without replacement
    # (exponential race on E_i / rho_i); once k indices are seen the wait for
    # the next one is Geometric in the remaining rate.
    n = r.size
    out = np.full((n_draws, n), NEVER, dtype=np.int64)
    active = np.flatnonzero(r > 0)
    m = active.size
    if m == 0 or n_draws == 0:
        return out
    w_all = r[active]
    order = np.argsort(gen.standard_exponential((n_draws, m)) / w_all, axis=1, kind="stable")
    w = w_all[order]
    remaining = np.minimum(np.cumsum(w[:, ::-1], axis=1)[:, ::-1], 1.0)
    gaps = gen.geometric(remaining)  # >= 1; position k hits after gaps[k] - 1 misses
    clock = np.cumsum(gaps, axis=1) - 1
    out[np.arange(n_draws)[:, None], active[order]] = clock
    return out


def multivariate_geometric(rho, rng: RngLike, size: int | None = None) -> np.ndarray:
    """Draw first-occurrence counts of a categorical process with rates ``rho``.

    Each trial lands on index ``i`` with probability ``rho[i]`` and on
    nothing with the residual probability ``1 - sum(rho)``.  Entry ``i`` is the
    number of trials strictly before ``i`` first occurs, so the support starts
    at 0; indices with zero rate get :data:`NEVER`.

    Parameters
    ----------
    rho : array_like
        Rates in [0, 1] with sum at most 1.
    rng : RngStream, Generator or int
    size : int, optional
        Number of independent draws.  ``None`` returns a single vector.

    Returns
    -------
    ndarray of int64, shape ``(n,)`` or ``(size, n)``
    """
    r = validate_rates(rho)
    gen = as_generator(rng)
    out = _first_occurrences(r, gen, 1 if size is None else int(size))
    return out[0] if size is None else out


def fractional_offset(u, rho):
    """Inverse CDF of the density ``alpha * exp(-alpha s) / rho`` on [0, 1]."""
    u = np.asarray(u, dtype=float)
    rho = np.asarray(rho, dtype=float)
    alpha = -np.log1p(-rho)
    return -np.log1p(-u * rho) / alpha


def sample_correlated_exponentials(rho, rng: RngLike, size: int | None = None) -> np.ndarray:
    """Sample unit Exponentials that are negatively associated through ``rho``.

    Coordinates with rate in (0, 1) are built as ``alpha_i (X_i + S_i)`` with
    ``alpha_i = -log(1 - rho_i)``, ``X`` a joint Multivariate Geometric draw and
    ``S_i`` an independent fractional part.  Coordinates with rate 0 or 1 (up
    to :data:`SNAP`) are independent Exp(1).

    Returns
    -------
    ndarray, shape ``(n,)`` or ``(size, n)``
        Strictly positive clock values.
    """
    r = validate_rates(rho)
    gen = as_generator(rng)
    n_draws = 1 if size is None else int(size)
    coupled = (r > SNAP) & (r < 1 - SNAP)
    counts = _first_occurrences(np.where(coupled, r, 0.0), gen, n_draws)
    z = np.empty((n_draws, r.size))
    idx = np.flatnonzero(coupled)
    if idx.size:
        rc = r[idx]
        alpha = -np.log1p(-rc)
        u = 1.0 - gen.random((n_draws, idx.size))  # in (0, 1] so that S > 0
        s = -np.log1p(-u * rc) / alpha
        z[:, idx] = alpha * (counts[:, idx] + s)
    free = np.flatnonzero(~coupled)
    if free.size:
        z[:, free] = gen.standard_exponential((n_draws, free.size))
    return z[0] if size is None else z


def joint_mgf(rho1: float, rho2: float, q1: float, q2: float) -> float:
    """Closed-form ``E[exp(q1 Z1 + q2 Z2)]`` for two coordinates of one sampler call.

    Requires ``rho1, rho2`` in (0, 1) with ``rho1 + rho2 <= 1`` and
    ``q1, q2 < 1``.
    """
    for name, v in (("rho1", rho1), ("rho2", rho2)):
        if not 0 < v < 1:
            raise InputError(f"{name} must lie in (0, 1), got {v}")
    if rho1 + rho2 > 1 + _SUM_TOL:
        raise InputError("rho1 + rho2 must not exceed 1")
    if not (q1 < 1 and q2 < 1):
        raise InputError("q1 and q2 must be < 1")
    a1 = (1 - rho1) ** q1
    a2 = (1 - rho2) ** q2
    inner = (a1 - 1) * (a2 - 1) / (a1 * a2 + rho1 + rho2 - 1)
    return float((1 - inner) / ((1 - q1) * (1 - q2)))
