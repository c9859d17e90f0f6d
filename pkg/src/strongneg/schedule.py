"""Scheduling on unrelated machines by clustered dependent rounding.

Pipeline: draw a global offset ``roff``, split each machine's jobs into
geometric processing-time classes, group every class into clusters of mass
about ``theta`` with correlation rates capped at ``tau``, round all clusters
jointly with :mod:`strongneg.biround`, and sequence every machine by Smith
ratio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .biround import BipartiteInstance, NO_EDGE, depround_many, normalize
from .errors import InputError, InternalError
from .params import ParameterSet
from .rng import RngStream, as_stream

SUM_TOL = 1e-9
SNAP = 1e-12


@dataclass(frozen=True, eq=False)
class SchedulingInstance:
    """Jobs ``0..J-1`` on machines ``0..M-1``.

    ``weights`` has shape ``(J,)`` and ``p`` has shape ``(M, J)``.
    """

    weights: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        p = np.asarray(self.p, dtype=float)
        if w.ndim != 1 or p.ndim != 2 or p.shape[1] != w.size:
            raise InputError("weights must be (J,) and p must be (M, J)")
        if p.shape[0] == 0:
            raise InputError("at least one machine is required")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InputError("weights must be finite and nonnegative")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise InputError("processing times must be finite and positive")
        w.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "p", p)

    @property
    def n_machines(self) -> int:
        return self.p.shape[0]

    @property
    def n_jobs(self) -> int:
        return self.p.shape[1]

    @property
    def machines(self) -> range:
        return range(self.n_machines)

    def smith(self) -> np.ndarray:
        """Smith ratios ``w_j / p_ij`` as an ``(M, J)`` array."""
        return self.weights[None, :] / self.p

    def rank(self) -> np.ndarray:
        """``rank[i]`` lists all jobs in machine ``i``'s Smith order."""
        sig = self.smith()
        jobs = np.arange(self.n_jobs)
        return np.stack([np.lexsort((jobs, -sig[i])) for i in self.machines])

    def __eq__(self, other):
        return (isinstance(other, SchedulingInstance)
                and np.array_equal(self.weights, other.weights)
                and np.array_equal(self.p, other.p))

    __hash__ = None


def smith_order(inst: SchedulingInstance, machine: int, jobs: Sequence[int]) -> list[int]:
    """Jobs by non-increasing Smith ratio on ``machine``, ties by ascending id."""
    sig = inst.weights / inst.p[machine]
    return sorted((int(j) for j in jobs), key=lambda j: (-sig[j], j))


@dataclass(frozen=True)
class Cluster:
    machine: int
    klass: int
    index: int
    jobs: tuple
    x: tuple
    rho_tilde: tuple
    rho: tuple
    truncated: int | None  # job id of the truncated member, if any
    closed: bool

    @property
    def key(self) -> tuple:
        return (self.machine, self.klass, self.index)

    @property
    def mass(self) -> float:
        return float(sum(self.x))


@dataclass(frozen=True, eq=False)
class ClusterPlan:
    roff: float
    params: ParameterSet
    xdiag: np.ndarray
    clusters: tuple
    klass: np.ndarray  # (M, J) class index, meaningful where xdiag > 0
    H: np.ndarray  # (M, J) normalised processing time, NaN where xdiag == 0
    _bip: BipartiteInstance | None = field(default=None, repr=False)

    def P(self, k: int) -> float:
        return self.params.pi ** (k - self.roff)

    def classes(self, machine: int) -> dict:
        out: dict = {}
        for j in np.flatnonzero(self.xdiag[machine] > 0):
            out.setdefault(int(self.klass[machine, j]), []).append(int(j))
        return out

    def cluster_of(self, machine: int, job: int) -> Cluster | None:
        for c in self.clusters:
            if c.machine == machine and job in c.jobs:
                return c
        return None

    def bipartite(self) -> BipartiteInstance:
        return self._bip


def _xdiag(inst: SchedulingInstance, xdiag) -> np.ndarray:
    x = np.asarray(xdiag, dtype=float)
    if x.shape != inst.p.shape:
        raise InputError(f"x-diag must have shape {inst.p.shape}")
    if not np.all(np.isfinite(x)) or np.any(x < -SUM_TOL) or np.any(x > 1 + SUM_TOL):
        raise InputError("x-diag entries must lie in [0, 1]")
    x = np.clip(x, 0.0, 1.0)
    col = x.sum(axis=0)
    bad = np.flatnonzero(np.abs(col - 1) > SUM_TOL)
    if bad.size:
        raise InputError(f"job {int(bad[0])}: machine masses sum to {col[bad[0]]:.12g}, not 1")
    return x


def class_index(p, pi: float, roff: float):
    """Class ``k`` and normalised time ``H = pi**(v - k)`` for ``v = roff + log p / log pi``.

    ``v`` within :data:`SNAP` of an integer is snapped onto it, so ``H`` is in ``[1, pi)``.
    """
    v = roff + np.log(np.asarray(p, dtype=float)) / math.log(pi)
    near = np.rint(v)
    v = np.where(np.abs(v - near) < SNAP, near, v)
    k = np.floor(v)
    return k.astype(np.int64), pi ** (v - k)


def build_clusters(inst: SchedulingInstance, xdiag, params: ParameterSet, roff: float) -> ClusterPlan:
    """Group each machine's jobs into classes and then clusters."""
    x = _xdiag(inst, xdiag)
    if not 0 <= roff < 1:
        raise InputError("roff must lie in [0, 1)")
    theta, tau = params.theta, params.tau
    klass, H = class_index(inst.p, params.pi, roff)
    H = np.where(x > 0, H, np.nan)
    clusters = []
    for i in inst.machines:
        by_class: dict = {}
        for j in smith_order(inst, i, np.flatnonzero(x[i] > 0)):
            by_class.setdefault(int(klass[i, j]), []).append(j)
        for k in sorted(by_class):
            ell = 1
            members: list = []
            rt: list = []
            mass = 0.0
            for j in by_class[k]:
                rt.append(float(min(x[i, j], tau - mass)))
                members.append(j)
                mass += x[i, j]
                if mass >= theta - 1e-12:
                    clusters.append(_cluster(i, k, ell, members, rt, x, True))
                    ell += 1
                    members, rt, mass = [], [], 0.0
            if members:
                clusters.append(_cluster(i, k, ell, members, rt, x, False))
    plan = ClusterPlan(float(roff), params, x, tuple(clusters), klass, H)
    object.__setattr__(plan, "_bip", _bipartite(plan, x))
    return plan


def _cluster(i, k, ell, members, rt, x, closed) -> Cluster:
    tot = sum(rt)
    trunc = [j for j, r in zip(members, rt) if r < x[i, j]]
    return Cluster(i, k, ell, tuple(members), tuple(float(x[i, j]) for j in members),
                   tuple(rt), tuple(r / tot for r in rt), trunc[-1] if trunc else None, closed)


def _bipartite(plan: ClusterPlan, x: np.ndarray) -> BipartiteInstance:
    # per-job renormalisation removes the <= 1e-9 slack so no dummy edge appears
    xn = x / x.sum(axis=0, keepdims=True)
    edges = [(c.key, j, float(xn[c.machine, j]), r)
             for c in plan.clusters for j, r in zip(c.jobs, c.rho)]
    try:
        return BipartiteInstance([c.key for c in plan.clusters], list(range(x.shape[1])), edges)
    except InputError as exc:
        raise InternalError(f"cluster plan yields an invalid bipartite graph: {exc}") from exc


@dataclass(frozen=True)
class Assignment:
    machine_of: tuple

    def __post_init__(self):
        object.__setattr__(self, "machine_of", tuple(int(m) for m in self.machine_of))

    def jobs_on(self, machine: int) -> list[int]:
        return [j for j, m in enumerate(self.machine_of) if m == machine]

    def indicator(self, n_machines: int) -> np.ndarray:
        X = np.zeros((n_machines, len(self.machine_of)))
        X[list(self.machine_of), range(len(self.machine_of))] = 1
        return X


def _rows_to_machines(plan: ClusterPlan, rows: np.ndarray) -> np.ndarray:
    bip = plan.bipartite()
    if np.any(rows == NO_EDGE):
        raise InternalError("a job was left without a machine")
    mach = np.array([e.u[0] for e in bip.edges], dtype=np.int64)
    return mach[rows]


def round_assignment(plan: ClusterPlan, xdiag, rng) -> Assignment:
    """One joint rounding of all clusters."""
    if not np.allclose(np.asarray(xdiag, dtype=float), plan.xdiag, rtol=0, atol=1e-12):
        raise InputError("x-diag does not match the cluster plan")
    norm = normalize(plan.bipartite())
    rows = depround_many(norm, rng, 1)
    return Assignment(_rows_to_machines(plan, rows)[0])


def breakpoints(inst: SchedulingInstance, xdiag, pi: float) -> np.ndarray:
    """Offsets in (0, 1) at which some class membership changes."""
    x = np.asarray(xdiag, dtype=float)
    v = np.log(inst.p[x > 0]) / math.log(pi)
    b = np.mod(-v, 1.0)
    return np.unique(b[(b > 0) & (b < 1)])


def sample_assignments(inst: SchedulingInstance, xdiag, params: ParameterSet, rng,
                       trials: int, threads: int = 1) -> np.ndarray:
    """Machine index per job for ``trials`` independent pipeline runs, each with a fresh offset.

    The plan only changes when ``roff`` crosses a breakpoint, so runs are
    grouped by the breakpoint interval their offset falls in and each group is
    rounded in one batch.  Returns an ``(trials, J)`` int array.
    """
    stream = as_stream(rng)
    x = _xdiag(inst, xdiag)
    roffs = stream.split(0).generator().random(int(trials))
    bp = breakpoints(inst, x, params.pi)
    bucket = np.searchsorted(bp, roffs, side="right")
    out = np.empty((int(trials), inst.n_jobs), dtype=np.int64)
    for b in np.unique(bucket):
        idx = np.flatnonzero(bucket == b)
        lo = 0.0 if b == 0 else bp[b - 1]
        hi = 1.0 if b == len(bp) else bp[b]
        plan = build_clusters(inst, x, params, 0.5 * (lo + hi))
        rows = depround_many(normalize(plan.bipartite()), stream.split(1).split(int(b)),
                             idx.size, threads=threads)
        out[idx] = _rows_to_machines(plan, rows)
    return out


def objective(inst: SchedulingInstance, assignment: Assignment) -> float:
    """Total weighted completion time with every machine in Smith order."""
    if len(assignment.machine_of) != inst.n_jobs:
        raise InputError("assignment must cover every job")
    total = 0.0
    for i in inst.machines:
        t = 0.0
        for j in smith_order(inst, i, assignment.jobs_on(i)):
            t += inst.p[i, j]
            total += inst.weights[j] * t
    return float(total)


def objectives(inst: SchedulingInstance, machine_of: np.ndarray) -> np.ndarray:
    """Vectorised :func:`objective` over an ``(trials, J)`` array of machine indices."""
    A = np.asarray(machine_of)
    rank = inst.rank()
    total = np.zeros(A.shape[0])
    for i in inst.machines:
        order = rank[i]
        X = (A[:, order] == i)
        C = np.cumsum(X * inst.p[i, order], axis=1)
        total += (X * C) @ inst.weights[order]
    return total


@dataclass(frozen=True)
class ScheduleResult:
    assignment: Assignment
    order: tuple  # per machine, job ids in processing order
    objective: float
    roff: float

    def to_dict(self) -> dict:
        return {"roff": self.roff, "assignment": list(self.assignment.machine_of),
                "order": [list(o) for o in self.order], "objective": self.objective}


def run_pipeline(inst: SchedulingInstance, fractional, params: ParameterSet, seed) -> ScheduleResult:
    """Full pipeline on a fractional solution; deterministic given ``seed``."""
    from .relax import FractionalSolution, check_feasibility

    if isinstance(fractional, FractionalSolution):
        rep = check_feasibility(fractional)
        if not rep.ok:
            raise InputError(f"fractional solution is infeasible: {rep.summary()}")
        xdiag = fractional.xdiag
    else:
        xdiag = fractional
    stream = seed if isinstance(seed, RngStream) else RngStream(int(seed))
    roff = float(stream.split(0).generator().random())
    plan = build_clusters(inst, xdiag, params, roff)
    asg = round_assignment(plan, xdiag, stream.split(1))
    order = tuple(tuple(smith_order(inst, i, asg.jobs_on(i))) for i in inst.machines)
    return ScheduleResult(asg, order, objective(inst, asg), roff)
