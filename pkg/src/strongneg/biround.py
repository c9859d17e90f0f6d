"""Bipartite dependent rounding driven by correlated Exponential clocks.

Every left-node draws one correlated clock vector over its incident edges,
and every right-node keeps the incident edge with the smallest clock/mass
ratio.  Within a right-node the clocks are independent, which gives exact
marginals; within a left-node they are negatively associated, which gives
the pair anti-correlation measured by :func:`strongneg.negcorr.phi`.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, NamedTuple, Sequence

import numpy as np

from .corr_exp import sample_correlated_exponentials
from .errors import InputError
from .rng import RngStream, as_stream, block_sizes

SUM_TOL = 1e-9
NO_EDGE = -1  # marker for "the right-node's dummy edge was selected"
BLOCK = 1 << 16


class Edge(NamedTuple):
    u: Hashable
    v: Hashable
    x: float
    rho: float


class DummyLeft(NamedTuple):
    """Fresh degree-one left-node that carries a right-node's mass deficit."""

    right: Hashable


@dataclass(frozen=True)
class BipartiteInstance:
    left: list
    right: list
    edges: list

    def __post_init__(self):
        edges = [e if isinstance(e, Edge) else Edge(*e) for e in self.edges]
        object.__setattr__(self, "edges", [Edge(e.u, e.v, float(e.x), float(e.rho)) for e in edges])
        object.__setattr__(self, "left", list(self.left))
        object.__setattr__(self, "right", list(self.right))
        self.validate()

    def validate(self, tol: float = SUM_TOL) -> None:
        lset, rset = set(self.left), set(self.right)
        if len(lset) != len(self.left) or len(rset) != len(self.right):
            raise InputError("node ids must be unique")
        seen = set()
        xsum = dict.fromkeys(self.right, 0.0)
        rsum = dict.fromkeys(self.left, 0.0)
        for k, e in enumerate(self.edges):
            if e.u not in lset or e.v not in rset:
                raise InputError(f"edge {k} references an unknown node")
            if (e.u, e.v) in seen:
                raise InputError(f"duplicate edge ({e.u!r}, {e.v!r})")
            seen.add((e.u, e.v))
            for name, val in (("x", e.x), ("rho", e.rho)):
                if not (np.isfinite(val) and 0 <= val <= 1):
                    raise InputError(f"edge {k}: {name}={val} outside [0, 1]")
            xsum[e.v] += e.x
            rsum[e.u] += e.rho
        for v, s in xsum.items():
            if s > 1 + tol:
                raise InputError(f"right-node {v!r}: x sums to {s:.12g} > 1")
        for u, s in rsum.items():
            if s > 1 + tol:
                raise InputError(f"left-node {u!r}: rho sums to {s:.12g} > 1")

    def edge_keys(self) -> set:
        return {(e.u, e.v) for e in self.edges}

    def incident_left(self, u) -> list[int]:
        return [k for k, e in enumerate(self.edges) if e.u == u]

    def incident_right(self, v) -> list[int]:
        return [k for k, e in enumerate(self.edges) if e.v == v]


@dataclass(frozen=True, eq=False)
class NormalizedInstance:
    """Rounding-ready graph: every edge has mass in (0, 1) and every right-node sums to 1.

    ``edges`` lists the surviving source edges in source order followed by the
    dummy edges; ``origin[k]`` is the source edge id of ``edges[k]`` or
    :data:`NO_EDGE` for a dummy.  ``forced`` maps right-nodes settled in
    advance to the source edge id of their unit-mass edge (``None`` when the
    right-node had no positive mass at all).
    """

    source: BipartiteInstance
    edges: tuple
    origin: np.ndarray
    forced: dict
    left: list
    right: list
    _left_groups: list = field(repr=False, default_factory=list)
    _right_groups: list = field(repr=False, default_factory=list)

    @property
    def dummies(self) -> list[int]:
        return [k for k, o in enumerate(self.origin) if o == NO_EDGE]

    def edge_keys(self) -> set:
        return {(e.u, e.v) for e in self.edges}


@dataclass(frozen=True, eq=False)
class Selection:
    chosen: dict  # right-node -> source edge id, or None if the dummy edge won
    indicator: np.ndarray  # 0/1 per source edge


def normalize(inst: BipartiteInstance, tol: float = SUM_TOL) -> NormalizedInstance:
    """Drop zero-mass edges, settle unit-mass edges and pad each right-node to mass 1."""
    inst.validate(tol)
    by_right: dict = {v: [] for v in inst.right}
    for k, e in enumerate(inst.edges):
        by_right[e.v].append(k)
    forced: dict = {}
    keep: list[int] = []
    deficits: list = []
    for v in inst.right:
        ks = by_right[v]
        unit = [k for k in ks if inst.edges[k].x >= 1 - tol]
        if unit:
            forced[v] = unit[0]
            continue
        live = [k for k in ks if inst.edges[k].x > 0]
        if not live:
            forced[v] = None
            continue
        keep.extend(live)
        deficit = 1.0 - sum(inst.edges[k].x for k in live)
        if deficit > 1e-12:
            deficits.append((v, deficit))
    keep.sort()
    edges = [inst.edges[k] for k in keep]
    origin = list(keep)
    for v, deficit in deficits:
        edges.append(Edge(DummyLeft(v), v, deficit, 1.0))
        origin.append(NO_EDGE)
    used_left = {e.u for e in edges}
    left = [u for u in inst.left if u in used_left] + [DummyLeft(v) for v, _ in deficits]
    right = [v for v in inst.right if v not in forced]

    lpos = {u: i for i, u in enumerate(left)}
    lg: list[list[int]] = [[] for _ in left]
    rpos = {v: i for i, v in enumerate(right)}
    rg: list[list[int]] = [[] for _ in right]
    for k, e in enumerate(edges):
        lg[lpos[e.u]].append(k)
        rg[rpos[e.v]].append(k)
    left_groups = [(np.array(c), np.array([edges[k].rho for k in c])) for c in lg]
    right_groups = [(np.array(c), np.array([edges[k].x for k in c])) for c in rg]
    return NormalizedInstance(inst, tuple(edges), np.array(origin, dtype=np.int64), forced,
                              left, right, left_groups, right_groups)


def _round_block(norm: NormalizedInstance, stream: RngStream, n: int) -> np.ndarray:
    gen = stream.generator()
    src = norm.source
    out = np.empty((n, len(src.right)), dtype=np.int64)
    ridx = {v: i for i, v in enumerate(src.right)}
    for v, k in norm.forced.items():
        out[:, ridx[v]] = NO_EDGE if k is None else k
    if not norm.edges:
        return out
    z = np.empty((n, len(norm.edges)))
    for cols, rho in norm._left_groups:
        z[:, cols] = sample_correlated_exponentials(rho, gen, size=n)
    for v, (cols, x) in zip(norm.right, norm._right_groups):
        # argmin returns the first minimiser, i.e. the lowest edge id
        pick = cols[np.argmin(z[:, cols] / x, axis=1)]
        out[:, ridx[v]] = norm.origin[pick]
    return out


def depround_many(norm: NormalizedInstance, rng, trials: int, threads: int = 1,
                  block: int = BLOCK) -> np.ndarray:
    """Run ``trials`` independent roundings.

    Returns an int array of shape ``(trials, len(source.right))`` holding the
    source edge id chosen at each right-node (:data:`NO_EDGE` for a dummy).
    Trials are generated in fixed blocks, block ``b`` drawing from
    ``stream.split(b)``, so the output does not depend on ``threads``.
    """
    stream = as_stream(rng)
    sizes = block_sizes(int(trials), block)
    jobs = [(stream.split(b), n) for b, n in enumerate(sizes)]
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda a: _round_block(norm, *a), jobs))
    else:
        parts = [_round_block(norm, s, n) for s, n in jobs]
    if not parts:
        return np.empty((0, len(norm.source.right)), dtype=np.int64)
    return np.concatenate(parts, axis=0)


def selection_from_row(src: BipartiteInstance, row: Sequence[int]) -> Selection:
    chosen = {v: (None if k == NO_EDGE else int(k)) for v, k in zip(src.right, row)}
    ind = np.zeros(len(src.edges), dtype=np.int8)
    for k in row:
        if k != NO_EDGE:
            ind[k] = 1
    return Selection(chosen, ind)


def depround(norm: NormalizedInstance, rng) -> Selection:
    """One rounding of a normalised instance."""
    return selection_from_row(norm.source, depround_many(norm, rng, 1)[0])


def indicators(src: BipartiteInstance, rows: np.ndarray) -> np.ndarray:
    """Expand ``depround_many`` output into a ``(trials, n_edges)`` 0/1 matrix."""
    ind = np.zeros((rows.shape[0], len(src.edges)), dtype=np.int8)
    t, c = np.nonzero(rows != NO_EDGE)
    ind[t, rows[t, c]] = 1
    return ind


def is_stable(inst, edge_ids) -> bool:
    """True iff no two listed edges ``(u, v)``, ``(u', v')`` have ``(u, v')`` in the graph."""
    edges = inst.edges
    ids = list(edge_ids)
    for k in ids:
        if not 0 <= k < len(edges):
            raise InputError(f"unknown edge id {k}")
    keys = inst.edge_keys()
    for a, b in combinations(ids, 2):
        ea, eb = edges[a], edges[b]
        if (ea.u, eb.v) in keys or (eb.u, ea.v) in keys:
            return False
    return True


def stable_sets(inst, max_size: int = 3, edge_ids=None) -> list[tuple[int, ...]]:
    """Enumerate stable edge sets with 2..max_size members (among ``edge_ids``)."""
    ids = list(range(len(inst.edges))) if edge_ids is None else list(edge_ids)
    keys = inst.edge_keys()
    edges = inst.edges
    compatible = {}
    for a, b in combinations(ids, 2):
        ea, eb = edges[a], edges[b]
        compatible[a, b] = (ea.u, eb.v) not in keys and (eb.u, ea.v) not in keys
    out = [p for p, ok in compatible.items() if ok]
    if max_size >= 3:
        for a, b, c in combinations(ids, 3):
            if compatible[a, b] and compatible[a, c] and compatible[b, c]:
                out.append((a, b, c))
    if max_size > 3:
        raise InputError("stable-set enumeration is capped at size 3")
    return out


def same_left_pairs(inst: BipartiteInstance) -> list[tuple[int, int]]:
    """Pairs of positive-mass edges sharing a left-node."""
    out = []
    for u in inst.left:
        ks = [k for k in inst.incident_left(u) if inst.edges[k].x > 0]
        out.extend(combinations(ks, 2))
    return out
