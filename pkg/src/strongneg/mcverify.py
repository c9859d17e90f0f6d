"""Monte Carlo checks of the sampler, the bipartite rounding and the scheduling guarantee.

Every check produces a :class:`Measurement` with an estimate, a target and a
nonnegative margin.  Inequality checks pass when ``estimate <= target +
margin``; equality checks when ``|estimate - target| <= margin``.  Margins
come from a :class:`StatContract`: Hoeffding bounds for statistics with a
known range, a normal approximation for the rest.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np
from scipy import stats

from .biround import NO_EDGE, BipartiteInstance, depround_many, indicators, normalize, same_left_pairs, stable_sets
from .corr_exp import SNAP, joint_mgf, sample_correlated_exponentials, validate_rates
from .errors import InputError, InternalError
from .negcorr import phi
from .params import ParameterSet
from .relax import FractionalSolution, check_feasibility, j_star_set, lb_stat, sdp_objective, z_stats
from .rng import RngStream, as_stream, block_sizes
from .schedule import SchedulingInstance, objectives, sample_assignments

BOUNDS = ("hoeffding", "normal")
DEFAULT_Q = ((-1.0, -1.0), (-2.0, 0.25), (0.25, 0.25), (-0.5, -2.0))
BLOCK = 1 << 16


@dataclass(frozen=True)
class StatContract:
    trials: int = 10**6
    delta: float = 1e-6
    bound: str = "hoeffding"

    def __post_init__(self):
        if int(self.trials) < 1000:
            raise InputError("a contract needs at least 1000 trials")
        if not 0 < self.delta <= 0.01:
            raise InputError("delta must lie in (0, 0.01]")
        if self.bound not in BOUNDS:
            raise InputError(f"bound must be one of {BOUNDS}")
        object.__setattr__(self, "trials", int(self.trials))

    def hoeffding(self, width: float = 1.0, two_sided: bool = False) -> float:
        """Deviation bound for a mean of ``trials`` draws with range ``width``."""
        k = 2.0 if two_sided else 1.0
        return width * math.sqrt(math.log(k / self.delta) / (2 * self.trials))

    @property
    def z(self) -> float:
        # never looser than four standard errors
        return max(4.0, float(stats.norm.isf(self.delta / 2)))

    def bounded(self, width: float, se: float, two_sided: bool = False) -> float:
        """Margin for a statistic with known range: Hoeffding, or ``z`` standard errors."""
        if self.bound == "hoeffding":
            return self.hoeffding(width, two_sided)
        return self.z * se


@dataclass
class Measurement:
    name: str
    estimate: float
    target: float
    margin: float
    passed: bool
    kind: str = "upper"  # "upper", "equal" or "exact"


@dataclass
class TestReport:
    suite: str
    seed: int
    contract: StatContract
    rows: list = field(default_factory=list)

    __test__ = False  # not a pytest class

    def add(self, name, estimate, target, margin, kind="upper") -> Measurement:
        estimate, target, margin = float(estimate), float(target), float(margin)
        if not margin >= 0:
            raise InternalError(f"{name}: negative margin {margin}")
        if kind == "upper":
            ok = estimate <= target + margin
        elif kind == "equal":
            ok = abs(estimate - target) <= margin
        elif kind == "exact":
            ok = estimate == target
        else:
            raise InputError(f"unknown measurement kind {kind!r}")
        m = Measurement(name, estimate, target, margin, bool(ok), kind)
        self.rows.append(m)
        return m

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list[Measurement]:
        return [r for r in self.rows if not r.passed]

    def extend(self, other: "TestReport", prefix: str = "") -> None:
        for r in other.rows:
            self.rows.append(Measurement(prefix + r.name, r.estimate, r.target, r.margin, r.passed, r.kind))

    def to_dict(self) -> dict:
        return {"format": 1, "suite": self.suite, "seed": self.seed, "contract": asdict(self.contract),
                "ok": self.ok, "tests": [asdict(r) for r in self.rows]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "estimate", "target", "margin", "pass"])
        for r in self.rows:
            w.writerow([r.name, repr(r.estimate), repr(r.target), repr(r.margin), int(r.passed)])
        return buf.getvalue()


def _seed_of(stream: RngStream) -> int:
    return int(stream.seed)


# sampler


def draw_samples(rho, stream: RngStream, trials: int, sampler=None) -> np.ndarray:
    """``(trials, n)`` clock vectors, block ``b`` drawn from ``stream.split(b)``."""
    sampler = sampler or sample_correlated_exponentials
    parts = [sampler(rho, s.generator(), size=n)
             for s, n in ((stream.split(b), n) for b, n in enumerate(block_sizes(trials, BLOCK)))]
    return np.concatenate(parts, axis=0)


def mgf_covariance(rho1: float, rho2: float, h: float = 1e-4) -> float:
    """``Cov(Z1, Z2)`` from a central difference of :func:`joint_mgf` at the origin."""
    m = lambda a, b: joint_mgf(rho1, rho2, a, b)
    ez1z2 = (m(h, h) - m(h, -h) - m(-h, h) + m(-h, -h)) / (4 * h * h)
    return ez1z2 - 1.0


def test_sampler(rho, contract: StatContract = StatContract(), seed=0, q_pairs=DEFAULT_Q,
                 sampler=None) -> TestReport:
    """Marginal law, moments, pair covariances and the joint MGF of one rate vector.

    ``sampler`` replaces :func:`sample_correlated_exponentials`, which lets a
    deliberately broken sampler be checked for detection.
    """
    r = validate_rates(rho)
    stream = as_stream(seed)
    rep = TestReport("sampler", _seed_of(stream), contract)
    N = contract.trials
    z = np.ascontiguousarray(draw_samples(r, stream, N, sampler).T)  # one row per coordinate
    crit = float(stats.kstwo.isf(contract.delta, N))
    for i in range(r.size):
        zi = z[i]
        d = stats.kstest(zi, "expon").statistic
        rep.add(f"ks[{i}]", d, 0.0, crit)
        rep.add(f"mean[{i}]", zi.mean(), 1.0, contract.z * zi.std(ddof=1) / math.sqrt(N), "equal")
        c = zi - zi.mean()
        var = float(c @ c / (N - 1))
        se = math.sqrt(max(float(np.mean(c**4)) - var**2, 0.0) / N)
        rep.add(f"var[{i}]", var, 1.0, contract.z * se, "equal")
    for q in {q for pair in q_pairs for q in pair}:
        if not -2 <= q <= 0.25:
            raise InputError("q must lie in [-2, 0.25]")
    coupled = [i for i in range(r.size) if SNAP < r[i] < 1 - SNAP]
    powers = {(i, q): np.exp(q * z[i]) for i in coupled for q in {q for pair in q_pairs for q in pair}}
    for i, j in combinations(range(r.size), 2):
        prod = (z[i] - 1.0) * (z[j] - 1.0)
        se = prod.std(ddof=1) / math.sqrt(N)
        cov = float(prod.mean())
        rep.add(f"cov[{i},{j}]<=0", cov, 0.0, contract.z * se)
        if i in coupled and j in coupled:
            rep.add(f"cov[{i},{j}]", cov, mgf_covariance(r[i], r[j]), contract.z * se, "equal")
            for q1, q2 in q_pairs:
                e = powers[i, q1] * powers[j, q2]
                rep.add(f"mgf[{i},{j}]({q1:g},{q2:g})", e.mean(), joint_mgf(r[i], r[j], q1, q2),
                        contract.z * e.std(ddof=1) / math.sqrt(N), "equal")
    return rep


# bipartite rounding


def _joint_freq(packed: np.ndarray, ids, trials: int) -> float:
    acc = packed[ids[0]]
    for k in ids[1:]:
        acc = acc & packed[k]
    return float(np.bitwise_count(acc).sum()) / trials


def a1_violations(inst: BipartiteInstance, rows: np.ndarray) -> int:
    """Trials in which some right-node holds a foreign, massless or unexpected-empty edge."""
    v_of = {v: c for c, v in enumerate(inst.right)}
    col_of = np.array([v_of[e.v] for e in inst.edges] + [-1], dtype=np.int64)
    pos = np.array([e.x > 0 for e in inst.edges] + [False])
    xsum = np.zeros(len(inst.right))
    for e in inst.edges:
        xsum[v_of[e.v]] += e.x
    full = xsum >= 1 - 1e-9
    picked = np.where(rows == NO_EDGE, len(inst.edges), rows)
    cols = np.broadcast_to(np.arange(len(inst.right)), rows.shape)
    empty = rows == NO_EDGE
    bad = (~empty & ((col_of[picked] != cols) | ~pos[picked])) | (empty & full[None, :])
    return int(bad.any(axis=1).sum())


def test_depround(inst: BipartiteInstance, contract: StatContract = StatContract(), seed=0,
                  threads: int = 1, max_set: int = 3) -> TestReport:
    """Support, exact marginals, stable-set correlation and same-left-node anti-correlation."""
    stream = as_stream(seed)
    rep = TestReport("depround", _seed_of(stream), contract)
    N = contract.trials
    rows = depround_many(normalize(inst), stream, N, threads=threads)
    rep.add("A1 violations", a1_violations(inst, rows), 0, 0.0, "exact")
    ind = indicators(inst, rows).astype(bool)
    freq = ind.mean(axis=0)
    for k, e in enumerate(inst.edges):
        se = math.sqrt(max(freq[k] * (1 - freq[k]), 1.0 / N) / N)
        rep.add(f"A2 {e.u}-{e.v}", freq[k], e.x, contract.bounded(1.0, se, two_sided=True), "equal")
    packed = np.packbits(ind, axis=0).T.copy()  # (n_edges, ceil(N / 8))
    live = [k for k, e in enumerate(inst.edges) if e.x > 0]
    for ids in stable_sets(inst, max_set, live):
        f = _joint_freq(packed, ids, N)
        target = float(np.prod([inst.edges[k].x for k in ids]))
        se = math.sqrt(max(f * (1 - f), 1.0 / N) / N)
        names = ",".join(f"{inst.edges[k].u}-{inst.edges[k].v}" for k in ids)
        rep.add(f"A3 {{{names}}}", f, target, contract.bounded(1.0, se))
    for a, b in same_left_pairs(inst):
        ea, eb = inst.edges[a], inst.edges[b]
        f = _joint_freq(packed, (a, b), N)
        target = (1 - phi(ea.x, eb.x, ea.rho, eb.rho)) * ea.x * eb.x
        se = math.sqrt(max(f * (1 - f), 1.0 / N) / N)
        rep.add(f"A4 {ea.u}:{ea.v},{eb.v}", f, target, contract.bounded(1.0, se))
    return rep


# scheduling


def _cost_range(inst: SchedulingInstance, x: np.ndarray) -> float:
    """Largest objective of any assignment that uses only positive-mass pairs."""
    rank = inst.rank()
    worst = np.zeros(inst.n_jobs)
    for i in inst.machines:
        order = rank[i]
        c = np.cumsum(np.where(x[i, order] > 0, inst.p[i, order], 0.0))
        worst[order] = np.maximum(worst[order], np.where(x[i, order] > 0, c, 0.0))
    return float(inst.weights @ worst)


def test_scheduling(inst: SchedulingInstance, sol: FractionalSolution, params: ParameterSet,
                    contract: StatContract = StatContract(10**5), seed=0, ratio: float = 1.40,
                    threads: int = 1) -> TestReport:
    """Per-(machine, job) bound ``E[Z] <= ratio * lb``, the total cost and the 3/2 bound."""
    feas = check_feasibility(sol)
    if not feas.ok:
        raise InputError(f"fractional solution is infeasible: {feas.summary()}")
    stream = as_stream(seed)
    rep = TestReport("scheduling", _seed_of(stream), contract)
    N = contract.trials
    A = sample_assignments(inst, sol.xdiag, params, stream, N, threads=threads)
    for i in inst.machines:
        z = z_stats(inst, A, i)
        for j in range(inst.n_jobs):
            lb, _, _ = lb_stat(inst, sol, i, j)
            if lb <= 0:
                continue
            J = j_star_set(inst, sol, i, j)
            p = inst.p[i, J]
            width = 0.5 * float(p @ p + p.sum() ** 2)
            zj = z[:, j]
            est = float(zj.mean())
            m = contract.bounded(width, zj.std(ddof=1) / math.sqrt(N))
            rep.add(f"Z[{i},{j}]<=ratio*lb", est, ratio * lb, m)
            rep.add(f"Z[{i},{j}]<=1.5*lb", est, 1.5 * lb, m)
    cost = objectives(inst, A)
    m = contract.bounded(_cost_range(inst, sol.xdiag), cost.std(ddof=1) / math.sqrt(N))
    rep.add("cost<=ratio*sdp", cost.mean(), ratio * sdp_objective(inst, sol), m)
    return rep
