"""Random and hand-built instances used by the CLI, the tests and the notebooks."""
from __future__ import annotations

import itertools

import numpy as np

from .biround import BipartiteInstance, Edge
from .errors import InputError
from .relax import FractionalSolution, brute_force_opt, from_assignments
from .rng import RngLike, as_generator
from .schedule import Assignment, SchedulingInstance, objectives

P_RANGE = (1.0, 100.0)


def random_scheduling_instance(machines: int, jobs: int, rng: RngLike) -> SchedulingInstance:
    """Log-uniform processing times in [1, 100], uniform weights in [0, 1]."""
    if machines < 1 or jobs < 0:
        raise InputError("need at least one machine and a nonnegative job count")
    gen = as_generator(rng)
    lo, hi = np.log(P_RANGE[0]), np.log(P_RANGE[1])
    p = np.exp(gen.uniform(lo, hi, size=(machines, jobs)))
    w = gen.uniform(0.0, 1.0, size=jobs)
    return SchedulingInstance(w, p)


def random_mixture(inst: SchedulingInstance, components: int, rng: RngLike) -> FractionalSolution:
    """Convex combination of ``components`` uniformly random assignments."""
    gen = as_generator(rng)
    asg = [Assignment(gen.integers(0, inst.n_machines, size=inst.n_jobs)) for _ in range(components)]
    w = gen.dirichlet(np.ones(components))
    return from_assignments(inst, zip(asg, w))


def random_bipartite(n_left: int, n_right: int, rng: RngLike, density: float = 0.5,
                     slack: float = 0.3) -> BipartiteInstance:
    """Random feasible instance with both ``x`` and ``rho`` sums at most 1.

    Each right-node keeps each potential edge with probability ``density``.
    With probability ``slack`` a node's sum is scaled below 1 so that dummy
    edges and left-node residual rates are exercised.
    """
    gen = as_generator(rng)
    adj = gen.random((n_left, n_right)) < density
    for v in range(n_right):
        if not adj[:, v].any():
            adj[gen.integers(n_left), v] = True
    x = np.where(adj, gen.random((n_left, n_right)) + 0.05, 0.0)
    x /= x.sum(axis=0, keepdims=True)
    x *= np.where(gen.random(n_right) < slack, gen.uniform(0.5, 1.0, n_right), 1.0)
    rho = np.where(adj, gen.random((n_left, n_right)) + 0.05, 0.0)
    rs = rho.sum(axis=1, keepdims=True)
    rho = np.divide(rho, rs, out=np.zeros_like(rho), where=rs > 0)
    rho *= np.where(gen.random((n_left, 1)) < slack, gen.uniform(0.5, 1.0, (n_left, 1)), 1.0)
    # guard against the sums landing a few ulps above 1
    x = np.minimum(x, 1.0) * (1 - 1e-12)
    rho = np.minimum(rho, 1.0) * (1 - 1e-12)
    edges = [Edge(f"u{u}", f"v{v}", float(x[u, v]), float(rho[u, v]))
             for u, v in zip(*np.nonzero(adj))]
    return BipartiteInstance([f"u{u}" for u in range(n_left)], [f"v{v}" for v in range(n_right)], edges)


def shared_left_instance() -> BipartiteInstance:
    """One left-node, two right-nodes, masses and rates 1/2: ``E[X1 X2] = 3/16``."""
    return BipartiteInstance(["a"], ["r1", "r2"], [Edge("a", "r1", 0.5, 0.5), Edge("a", "r2", 0.5, 0.5)])


def star_instance(n: int = 4) -> BipartiteInstance:
    """``n`` left-nodes all pointing at a single right-node with uneven masses."""
    x = np.arange(1, n + 1, dtype=float)
    x /= x.sum()
    return BipartiteInstance([f"u{k}" for k in range(n)], ["r"],
                             [Edge(f"u{k}", "r", float(x[k]), 1.0) for k in range(n)])


def optimal_mixture(inst: SchedulingInstance, rel_tol: float = 1e-12) -> FractionalSolution:
    """Uniform mixture of every optimal assignment; its relaxation cost equals the optimum."""
    _, opt = brute_force_opt(inst)
    A = np.array(list(itertools.product(range(inst.n_machines), repeat=inst.n_jobs)), dtype=np.int64)
    best = A[objectives(inst, A) <= opt * (1 + rel_tol)]
    return from_assignments(inst, [(Assignment(a), 1.0 / len(best)) for a in best])


def demo_symmetric():
    """Two identical machines and four jobs; every optimum has a mirror image."""
    return SchedulingInstance([0.9, 0.4, 0.7, 0.2], [[3.0, 1.5, 4.0, 2.0], [3.0, 1.5, 4.0, 2.0]])


def demo_scheduling():
    """A 2 x 4 instance with a three-point mixture solution."""
    inst = SchedulingInstance([0.9, 0.4, 0.7, 0.2], [[3.0, 1.5, 8.0, 2.0], [2.0, 6.0, 1.0, 5.0]])
    mix = [(Assignment([0, 0, 1, 1]), 0.5), (Assignment([1, 0, 1, 0]), 0.3), (Assignment([0, 1, 0, 1]), 0.2)]
    return inst, from_assignments(inst, mix)
