"""Command-line entry point.

Exit status is 0 when every check passes, 1 when a check or an internal
invariant fails and 2 on malformed input.  Reports go to stdout as JSON;
``--report`` additionally writes the CSV table.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import constants, formats, mcverify
from .biround import depround_many, normalize, selection_from_row
from .errors import InputError, InternalError, InvalidParameterSet
from .instances import demo_scheduling, random_mixture, random_scheduling_instance, shared_left_instance
from .params import DEFAULT
from .relax import check_feasibility
from .rng import RngStream
from .schedule import run_pipeline

log = logging.getLogger("strongneg")


def _emit(doc: dict, out: str | None) -> None:
    text = formats.dumps(doc)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _write_report(rep: mcverify.TestReport, path: str | None) -> None:
    if path:
        Path(path).write_text(rep.to_csv())


def _params(path: str | None):
    return formats.read_params(path) if path else DEFAULT


def cmd_round(args) -> int:
    inst = formats.read_bipartite(args.instance)
    if args.trials == 1:
        row = depround_many(normalize(inst), RngStream(args.seed), 1)[0]
        sel = selection_from_row(inst, row)
        _emit({"format": 1, "chosen": [[v, k] for v, k in sel.chosen.items()]}, args.json)
        return 0
    if args.trials < 1000:
        raise InputError("--trials must be 1 or at least 1000")
    rep = mcverify.test_depround(inst, mcverify.StatContract(args.trials, args.delta), args.seed,
                                 threads=args.threads)
    _write_report(rep, args.report)
    _emit(rep.to_dict(), args.json)
    return 0 if rep.ok else 1


def cmd_schedule(args) -> int:
    inst = formats.read_instance(args.instance)
    sol = formats.read_fractional(args.fractional)
    if (sol.n_machines, sol.n_jobs) != (inst.n_machines, inst.n_jobs):
        raise InputError("fractional solution does not match the instance size")
    feas = check_feasibility(sol)
    if not feas.ok:
        _emit({"format": 1, "feasibility": feas.to_dict()}, args.json)
        log.error("infeasible fractional solution: %s", feas.summary())
        return 1
    res = run_pipeline(inst, sol, _params(args.params), args.seed)
    _emit({"format": 1, **res.to_dict()}, args.json)
    return 0


def _verify_suite(args, suite: str) -> mcverify.TestReport:
    contract = mcverify.StatContract(args.trials, args.delta, args.bound)
    if suite == "sampler":
        rho = args.rho or [0.25] * 4
        return mcverify.test_sampler(rho, contract, args.seed)
    if suite == "depround":
        inst = formats.read_bipartite(args.bipartite) if args.bipartite else shared_left_instance()
        return mcverify.test_depround(inst, contract, args.seed, threads=args.threads)
    if args.instance:
        if not args.fractional:
            raise InputError("--instance needs --fractional")
        inst, sol = formats.read_instance(args.instance), formats.read_fractional(args.fractional)
    else:
        inst, sol = demo_scheduling()
    return mcverify.test_scheduling(inst, sol, _params(args.params), contract, args.seed,
                                    ratio=args.ratio, threads=args.threads)


def cmd_verify(args) -> int:
    suites = ["sampler", "depround", "scheduling"] if args.suite == "all" else [args.suite]
    reps = [_verify_suite(args, s) for s in suites]
    if len(reps) == 1:
        rep = reps[0]
    else:
        rep = mcverify.TestReport("all", args.seed, reps[0].contract)
        for r in reps:
            rep.extend(r, prefix=f"{r.suite}/")
    _write_report(rep, args.report)
    _emit(rep.to_dict(), args.json)
    return 0 if rep.ok else 1


def _grid(name: str) -> constants.GridSpec:
    return constants.GridSpec.search() if name == "search" else constants.GridSpec()


def cmd_constants(args) -> int:
    params = _params(args.params)
    try:
        dc = constants.derive_constants(params, _grid(args.grid), threads=args.threads)
    except InvalidParameterSet as exc:
        raise InputError(f"parameter set is not admissible: {exc}") from None
    internal = constants.verify_internal_inequalities(params, dc)
    one_var = constants.verify_appendix_a()
    ok = internal.ok and one_var.ok
    _emit({"format": 1, "params": params.to_dict(), "constants": dc.to_dict(),
           "internal": internal.to_dict(), "one_variable": one_var.to_dict(), "ok": ok}, args.json)
    return 0 if ok else 1


def cmd_search(args) -> int:
    res = constants.parameter_search(args.target, budget=args.budget, seed=args.seed, threads=args.threads)
    doc = {"format": 1, **res.to_dict()}
    _emit(doc, args.json)
    if args.out:
        Path(args.out).write_text(formats.dumps(formats.params_to_dict(res.params)))
    return 0 if res.reached else 1


def cmd_gen(args) -> int:
    stream = RngStream(args.seed)
    inst = random_scheduling_instance(args.machines, args.jobs, stream.split(0))
    _emit(formats.instance_to_dict(inst), args.out)
    if args.fractional:
        sol = random_mixture(inst, args.components, stream.split(1))
        Path(args.fractional).write_text(formats.dumps(formats.fractional_to_dict(sol)))
    return 0


def _positive(kind):
    def parse(s):
        v = kind(s)
        if v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {s}")
        return v
    return parse


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="strongneg", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True):
        if seed:
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=_positive(int), default=1)
        p.add_argument("--json", help="write the JSON report here instead of stdout")
        return p

    p = common(sub.add_parser("round", help="dependent rounding on a bipartite instance"))
    p.add_argument("--instance", required=True)
    p.add_argument("--trials", type=_positive(int), default=10**5)
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--report")
    p.set_defaults(fn=cmd_round)

    p = common(sub.add_parser("schedule", help="round a fractional solution into a schedule"))
    p.add_argument("--instance", required=True)
    p.add_argument("--fractional", required=True)
    p.add_argument("--params")
    p.set_defaults(fn=cmd_schedule)

    p = common(sub.add_parser("verify", help="Monte Carlo verification suites"))
    p.add_argument("--suite", choices=["sampler", "depround", "scheduling", "all"], default="all")
    p.add_argument("--rho", type=float, nargs="+", help="rate vector for the sampler suite")
    p.add_argument("--bipartite", help="bipartite instance for the depround suite")
    p.add_argument("--instance")
    p.add_argument("--fractional")
    p.add_argument("--params")
    p.add_argument("--ratio", type=float, default=1.40)
    p.add_argument("--trials", type=int, default=10**5)
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--bound", choices=mcverify.BOUNDS, default="hoeffding")
    p.add_argument("--report")
    p.set_defaults(fn=cmd_verify)

    p = common(sub.add_parser("constants", help="derive and check the analysis constants"), seed=False)
    p.add_argument("--params")
    p.add_argument("--grid", choices=["fine", "search"], default="fine")
    p.set_defaults(fn=cmd_constants)

    p = common(sub.add_parser("search", help="search for a parameter set meeting a target ratio"))
    p.add_argument("--target", type=float, default=1.40)
    p.add_argument("--budget", type=_positive(int), default=300)
    p.add_argument("--out", help="also write the winning parameter set here")
    p.set_defaults(fn=cmd_search)

    p = sub.add_parser("gen", help="generate a random scheduling instance")
    p.add_argument("--machines", type=_positive(int), required=True)
    p.add_argument("--jobs", type=_positive(int), required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive(int), default=1)  # accepted for uniformity
    p.add_argument("--out", help="instance file (default stdout)")
    p.add_argument("--fractional", help="also write a random mixture solution here")
    p.add_argument("--components", type=_positive(int), default=3)
    p.set_defaults(fn=cmd_gen)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.fn(args)
    except InputError as exc:
        log.error("%s", exc)
        return 2
    except InternalError as exc:
        log.error("internal invariant violated: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
