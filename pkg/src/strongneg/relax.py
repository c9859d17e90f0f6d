"""Fractional points of the semidefinite relaxation and the per-(machine, job) statistics."""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .schedule import Assignment, SchedulingInstance, objective

SUM_TOL = 1e-9
PSD_TOL = 1e-8
BRUTE_LIMIT = 10**7


@dataclass(frozen=True, eq=False)
class FractionalSolution:
    """``matrices[i]`` is machine ``i``'s augmented ``(J+1, J+1)`` matrix; row/column 0 carries ``x_ij``."""

    matrices: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrices, dtype=float)
        if m.ndim != 3 or m.shape[1] != m.shape[2] or m.shape[1] < 1:
            raise InputError("matrices must have shape (M, J+1, J+1)")
        if not np.all(np.isfinite(m)):
            raise InputError("matrix entries must be finite")
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    @property
    def n_machines(self) -> int:
        return self.matrices.shape[0]

    @property
    def n_jobs(self) -> int:
        return self.matrices.shape[1] - 1

    @property
    def xdiag(self) -> np.ndarray:
        """``(M, J)`` array of fractional assignments ``x_ij``."""
        return self.matrices[:, 0, 1:]

    def pair(self, i: int) -> np.ndarray:
        """``(J, J)`` block of joint masses ``x_{j,j'}`` on machine ``i``."""
        return self.matrices[i, 1:, 1:]


def integral_solution(assignment: Assignment, n_machines: int) -> FractionalSolution:
    X = assignment.indicator(n_machines)
    aug = np.concatenate([np.ones((n_machines, 1)), X], axis=1)
    return FractionalSolution(aug[:, :, None] * aug[:, None, :])


def from_assignments(inst: SchedulingInstance, weighted) -> FractionalSolution:
    """Convex combination of integral points, given as ``(Assignment, weight)`` pairs."""
    weighted = list(weighted)
    if not weighted:
        raise InputError("at least one assignment is required")
    w = np.array([float(c) for _, c in weighted])
    if np.any(w < 0) or abs(w.sum() - 1) > SUM_TOL:
        raise InputError("mixture weights must be nonnegative and sum to 1")
    w = w / w.sum()
    M = inst.n_machines
    out = np.zeros((M, inst.n_jobs + 1, inst.n_jobs + 1))
    for (asg, _), c in zip(weighted, w):
        if len(asg.machine_of) != inst.n_jobs or any(not 0 <= m < M for m in asg.machine_of):
            raise InputError("assignment does not match the instance")
        out += c * integral_solution(asg, M).matrices
    return FractionalSolution(out)


@dataclass
class Check:
    name: str
    ok: bool
    worst: float  # largest violation, 0 when none


@dataclass
class FeasibilityReport:
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.ok]

    def summary(self) -> str:
        return ", ".join(f"{c.name}={'ok' if c.ok else 'FAIL'}({c.worst:.3g})" for c in self.checks)

    def to_dict(self) -> dict:
        return {"ok": self.ok, "checks": [vars(c) for c in self.checks]}


def check_feasibility(sol: FractionalSolution, tol: float = SUM_TOL, psd_tol: float = PSD_TOL) -> FeasibilityReport:
    """Entry range, corner, symmetry, per-job sums, diagonal consistency and PSD."""
    m = sol.matrices
    rep = FeasibilityReport()

    def add(name, worst, limit):
        rep.checks.append(Check(name, bool(worst <= limit), float(worst)))

    add("range", float(max(0.0, -m.min(), m.max() - 1)), tol)
    add("corner", float(np.abs(m[:, 0, 0] - 1).max()), tol)
    add("symmetry", float(np.abs(m - m.transpose(0, 2, 1)).max()), tol)
    add("job_sum", float(np.abs(m[:, 0, 1:].sum(axis=0) - 1).max()) if sol.n_jobs else 0.0, tol)
    diag = np.diagonal(m, axis1=1, axis2=2)[:, 1:]
    add("diagonal", float(np.abs(diag - m[:, 0, 1:]).max()) if sol.n_jobs else 0.0, tol)
    worst_psd = 0.0
    for mat in m:
        sym = 0.5 * (mat + mat.T)
        scale = max(1.0, float(np.abs(sym).max()))
        lam = float(np.linalg.eigvalsh(sym)[0])
        worst_psd = max(worst_psd, -lam / scale)
    add("psd", worst_psd, psd_tol)
    return rep


def _ranked(inst: SchedulingInstance, machine: int) -> np.ndarray:
    return inst.rank()[machine]


def sdp_objective(inst: SchedulingInstance, sol: FractionalSolution) -> float:
    """Relaxation cost: each job pays ``w_j p_j' x_{j,j'}`` for every ``j'`` up to it in Smith order."""
    total = 0.0
    for i in inst.machines:
        order = _ranked(inst, i)
        pair = sol.pair(i)[np.ix_(order, order)]
        w = inst.weights[order]
        p = inst.p[i, order]
        total += float(w @ (np.tril(pair) @ p))
    return total


def _prefix(order: np.ndarray, j_star: int) -> np.ndarray:
    pos = int(np.flatnonzero(order == j_star)[0])
    return order[: pos + 1]


def z_stat(inst: SchedulingInstance, assignment: Assignment, i_star: int, j_star: int) -> float:
    """``(sum X p^2 + (sum X p)^2) / 2`` over jobs on ``i_star`` up to ``j_star`` in Smith order."""
    jobs = _prefix(_ranked(inst, i_star), j_star)
    X = np.array([assignment.machine_of[j] == i_star for j in jobs], dtype=float)
    p = inst.p[i_star, jobs]
    return float(0.5 * (X @ p**2 + (X @ p) ** 2))


def z_stats(inst: SchedulingInstance, machine_of: np.ndarray, i_star: int) -> np.ndarray:
    """``z_stat`` for every trial and every job on ``i_star``.

    Returns ``(trials, J)`` with column ``j`` holding the statistic for ``j_star = j``.
    """
    A = np.asarray(machine_of)
    order = _ranked(inst, i_star)
    X = A[:, order] == i_star
    p = inst.p[i_star, order]
    z = 0.5 * (np.cumsum(X * p**2, axis=1) + np.cumsum(X * p, axis=1) ** 2)
    out = np.empty_like(z)
    out[:, order] = z
    return out


def j_star_set(inst: SchedulingInstance, sol: FractionalSolution, i_star: int, j_star: int) -> np.ndarray:
    jobs = _prefix(_ranked(inst, i_star), j_star)
    return jobs[sol.xdiag[i_star, jobs] > 0]


def lb_stat(inst: SchedulingInstance, sol: FractionalSolution, i_star: int, j_star: int):
    """Return ``(lb, Q, L)`` for the pair ``(i_star, j_star)``."""
    J = j_star_set(inst, sol, i_star, j_star)
    x = sol.xdiag[i_star, J]
    p = inst.p[i_star, J]
    pair = sol.pair(i_star)[np.ix_(J, J)]
    Q = float(x @ p**2)
    L = float(x @ p)
    lb = 0.5 * (Q + float(p @ pair @ p))
    return lb, Q, L


def lb_y_bound(inst: SchedulingInstance, sol: FractionalSolution, i_star: int, j_star: int, y) -> float:
    """Lower bound on ``lb`` from any ``y`` in ``[0, 1]`` indexed like :func:`j_star_set`."""
    J = j_star_set(inst, sol, i_star, j_star)
    y = np.asarray(y, dtype=float)
    if y.shape != J.shape or np.any(y < 0) or np.any(y > 1):
        raise InputError(f"y must be a vector in [0, 1] of length {J.size}")
    x = sol.xdiag[i_star, J]
    p = inst.p[i_star, J]
    Q = x @ p**2
    L = x @ p
    return float(0.5 * (Q + y @ (x * p**2) + (L - (1 - np.sqrt(1 - y)) @ (x * p)) ** 2))


def telescope(sigma_sorted: np.ndarray, stats: np.ndarray) -> float:
    """``sum_k (sigma_k - sigma_{k+1}) stats_k`` with ``sigma_{n+1} = 0``."""
    s = np.asarray(sigma_sorted, dtype=float)
    return float(np.sum((s - np.append(s[1:], 0.0)) * np.asarray(stats, dtype=float)))


def brute_force_opt(inst: SchedulingInstance):
    """Exhaustive optimum; returns ``(Assignment, value)``."""
    M, J = inst.n_machines, inst.n_jobs
    if M**J > BRUTE_LIMIT:
        raise InputError(f"{M}^{J} assignments exceed the enumeration limit {BRUTE_LIMIT}")
    from .schedule import objectives

    best_val, best = np.inf, None
    chunk = 1 << 15
    it = itertools.product(range(M), repeat=J)
    while True:
        block = np.array(list(itertools.islice(it, chunk)), dtype=np.int64).reshape(-1, J)
        if block.shape[0] == 0:
            break
        vals = objectives(inst, block)
        k = int(np.argmin(vals))  # first minimiser, i.e. lexicographically smallest
        if vals[k] < best_val:
            best_val, best = float(vals[k]), block[k]
    asg = Assignment(best)
    return asg, objective(inst, asg)
