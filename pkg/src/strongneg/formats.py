"""Versioned JSON schemas for instances, fractional solutions and parameter sets."""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .biround import BipartiteInstance, Edge
from .errors import InputError
from .params import ParameterSet
from .relax import FractionalSolution
from .schedule import SchedulingInstance

FORMAT = 1


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object")
    if doc.get("format", FORMAT) != FORMAT:
        raise InputError(f"{path}: unsupported format {doc.get('format')!r}")
    return doc


def _field(doc: dict, key: str, where: str):
    if key not in doc:
        raise InputError(f"{where}: missing field {key!r}")
    return doc[key]


def instance_to_dict(inst: SchedulingInstance) -> dict:
    return {"format": FORMAT, "machines": inst.n_machines,
            "jobs": [{"w": float(inst.weights[j]), "p": [float(v) for v in inst.p[:, j]]}
                     for j in range(inst.n_jobs)]}


def instance_from_dict(doc: dict) -> SchedulingInstance:
    M = _field(doc, "machines", "instance")
    jobs = _field(doc, "jobs", "instance")
    if not isinstance(M, int) or M < 1 or not isinstance(jobs, list):
        raise InputError("instance: machines must be a positive integer and jobs a list")
    try:
        w = [float(_field(j, "w", f"job {k}")) for k, j in enumerate(jobs)]
        p = [[float(v) for v in _field(j, "p", f"job {k}")] for k, j in enumerate(jobs)]
    except (TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"instance: bad job entry ({exc})") from None
    if any(len(row) != M for row in p):
        raise InputError(f"instance: every job needs {M} processing times")
    return SchedulingInstance(w, np.array(p, dtype=float).reshape(len(jobs), M).T)


def bipartite_to_dict(inst: BipartiteInstance) -> dict:
    return {"format": FORMAT, "left": list(inst.left), "right": list(inst.right),
            "edges": [{"u": e.u, "v": e.v, "x": e.x, "rho": e.rho} for e in inst.edges]}


def bipartite_from_dict(doc: dict) -> BipartiteInstance:
    left = _field(doc, "left", "bipartite")
    right = _field(doc, "right", "bipartite")
    edges = _field(doc, "edges", "bipartite")
    if not all(isinstance(v, list) for v in (left, right, edges)):
        raise InputError("bipartite: left, right and edges must be lists")
    for v in left + right:
        if not isinstance(v, (str, int)) or isinstance(v, bool):
            raise InputError("bipartite: node ids must be strings or integers")
    try:
        es = [Edge(e["u"], e["v"], float(e["x"]), float(e["rho"])) for e in edges]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"bipartite: bad edge entry ({exc})") from None
    return BipartiteInstance(left, right, es)


def fractional_to_dict(sol: FractionalSolution) -> dict:
    return {"format": FORMAT, "machines": [{"matrix": m.tolist()} for m in sol.matrices]}


def fractional_from_dict(doc: dict) -> FractionalSolution:
    machines = _field(doc, "machines", "fractional")
    if not isinstance(machines, list) or not machines:
        raise InputError("fractional: machines must be a non-empty list")
    try:
        arr = np.array([_field(m, "matrix", f"machine {i}") for i, m in enumerate(machines)], dtype=float)
    except (TypeError, ValueError, AttributeError) as exc:
        raise InputError(f"fractional: matrices are not numeric and square ({exc})") from None
    return FractionalSolution(arr)


def params_to_dict(p: ParameterSet) -> dict:
    return {"format": FORMAT, **p.to_dict()}


def params_from_dict(doc: dict) -> ParameterSet:
    return ParameterSet.from_dict(doc.get("params", doc))


def read_instance(path) -> SchedulingInstance:
    return instance_from_dict(load(path))


def read_bipartite(path) -> BipartiteInstance:
    return bipartite_from_dict(load(path))


def read_fractional(path) -> FractionalSolution:
    return fractional_from_dict(load(path))


def read_params(path) -> ParameterSet:
    return params_from_dict(load(path))
