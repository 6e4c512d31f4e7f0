"""``netcap`` command line."""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import constructions as C
from . import graph as G
from .norms import NormParams, norm_report, parse_exponent
from .rademacher import (
    NetClass, antisym_bound, empirical_rademacher_lower, exact_rademacher_hull,
    linear_rademacher_bound, linear_rademacher_exact, network_rademacher_bound, shatter_check,
)
from .rebalance import balance_layers, unitize_units
from .transforms import DEFAULT_MAX_NODES, convex_combine, layerize, treeify
from .verify import DEFAULT_SEED, SUITES, TOL_FUNCTION, report_csv, run_suite, shatter_sweep


def _jsonable(obj):
    if isinstance(obj, float) and not np.isfinite(obj):
        return "inf" if obj > 0 else "-inf"
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _emit(args, payload, rows=None):
    """Write JSON (or CSV when rows are given and --format csv) to --report or stdout."""
    if args.format == "csv" and rows is not None:
        text = report_csv(rows) if not isinstance(rows, str) else rows
    else:
        text = json.dumps(_jsonable(payload), indent=1, sort_keys=True) + "\n"
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params(args) -> NormParams:
    return NormParams(args.p, parse_exponent(args.q))


def _load_layered(path) -> G.LayeredNet:
    net = G.load(path)
    return net if isinstance(net, G.LayeredNet) else G.to_layered(net)


def _load_dag(path) -> G.Network:
    net = G.load(path)
    return G.to_dag(net) if isinstance(net, G.LayeredNet) else net


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _points(data, key="points"):
    return np.asarray(data[key] if isinstance(data, dict) else data, dtype=float)


def cmd_norms(args):
    _emit(args, norm_report(G.load(args.net), _params(args)).to_dict())


def cmd_balance(args):
    out = balance_layers(_load_layered(args.net), _params(args))
    G.save(out, args.out)
    _emit(args, {"out": args.out, "depth": out.depth})


def cmd_unitize(args):
    out = unitize_units(_load_dag(args.net), args.p)
    G.save(out, args.out)
    _emit(args, {"out": args.out, "nodes": len(out.nodes), "edges": len(out.edges)})


def cmd_treeify(args):
    res = treeify(_load_dag(args.net), max_nodes=args.max_nodes)
    G.save(res.net, args.out)
    _emit(args, {"out": args.out, "copies": res.copies, "nodes": len(res.net.nodes),
                 "origin": {str(k): list(v) for k, v in sorted(res.origin.items())}})


def cmd_layerize(args):
    res = layerize(_load_dag(args.net), args.depth, max_nodes=args.max_nodes)
    G.save(res.layered, args.out)
    _emit(args, {"out": args.out, "subdivisions": res.subdivisions,
                 "domain": "nonnegative-inputs" if res.nonneg_inputs else "all-inputs"})


def cmd_combine(args):
    out = convex_combine(_load_layered(args.a), _load_layered(args.b), args.alpha,
                         _params(args), construction=args.construction)
    G.save(out, args.out)
    _emit(args, {"out": args.out, "widths": out.widths})


def cmd_shatter(args):
    spec = C.ShatterSpec(args.D, args.depth, args.H, _params(args))
    X = C.with_bias(C.hypercube(args.D))
    if args.labels == "all":
        labelings = list(C.all_labelings(spec.m))
    else:
        labelings = [np.asarray(y, dtype=float) for y in np.atleast_2d(_load_json(args.labels))]
    chk = shatter_check(lambda y: C.shattering_net(spec, y), X, labelings)
    reports = [C.shatter_report(spec, y) for y in labelings]
    payload = {
        "D": spec.D, "d": spec.d, "H": spec.H, "params": spec.params.to_dict(),
        "labelings": len(labelings), "worst_margin": chk.worst, "passed": chk.passed,
        "gamma_formula": C.shattering_gamma_formula(spec),
        "gamma_measured_max": max(r.gamma_measured for r in reports),
    }
    _emit(args, payload, rows=[r.row() for r in reports])
    return 0 if chk.passed else 1


def cmd_halfspaces(args):
    rep = C.halfspace_report(np.asarray(_load_json(args.normals), dtype=float), _params(args))
    _emit(args, rep.row(), rows=[rep.row()])
    return 0 if rep.worst_margin >= 1.0 else 1


def cmd_rademacher(args):
    data = _load_json(args.input)
    mode = args.mode
    if mode == "exact-hull":
        rep = exact_rademacher_hull(_points(data, "vertices"))
    elif mode == "linear":
        rep = linear_rademacher_exact(_points(data), args.p, args.gamma, seed=args.seed)
    elif mode == "bound-linear":
        rep = linear_rademacher_bound(_points(data), args.p, args.gamma)
    elif mode == "bound-thm1":
        rep = network_rademacher_bound(args.depth, args.H, args.p, parse_exponent(args.q),
                                       args.gamma, _points(data), which=args.which)
    elif mode == "bound-antisym":
        rep = antisym_bound(args.depth, args.gamma, _points(data))
    else:
        cls = NetClass(args.depth, args.H, _params(args), args.gamma)
        rep = empirical_rademacher_lower(cls, _points(data), restarts=args.restarts,
                                         steps=args.steps, seed=args.seed, workers=args.workers)
    _emit(args, rep.to_dict())


def cmd_verify(args):
    report = run_suite(args.suite, seed=args.seed, workers=args.workers, tol=args.tol_rel)
    if args.format == "csv":
        _emit(args, None, rows=report_csv(report))
    else:
        text = report.to_json(timing=args.timing) + "\n"
        if args.report:
            with open(args.report, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    n_fail = len(report.failures)
    print(f"{args.suite}: {len(report.cases) - n_fail} passed, {n_fail} failed "
          f"({report.wall_time:.1f}s)", file=sys.stderr)
    return 1 if n_fail else 0


def cmd_sweep(args):
    Hs = [int(h) for h in args.H.split(",")]
    rows = shatter_sweep(args.D, args.depth, Hs, _params(args))
    _emit(args, rows, rows=rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--tol-rel", type=float, default=TOL_FUNCTION)
    common.add_argument("--report", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    norm = argparse.ArgumentParser(add_help=False)
    norm.add_argument("--p", type=float, default=2.0)
    norm.add_argument("--q", default="2", help="number or 'inf'")

    parser = argparse.ArgumentParser(prog="netcap", description="Norm-based capacity tools for relu networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("norms", parents=[common, norm], help="mu, gamma and path norm of a network")
    s.add_argument("--net", required=True)
    s.set_defaults(func=cmd_norms)

    s = sub.add_parser("balance", parents=[common, norm], help="equalize layer group norms")
    s.add_argument("--net", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_balance)

    s = sub.add_parser("unitize", parents=[common], help="unit incoming l_p norm per unit")
    s.add_argument("--net", required=True)
    s.add_argument("--p", type=float, default=2.0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_unitize)

    s = sub.add_parser("treeify", parents=[common], help="duplicate shared units into a tree")
    s.add_argument("--net", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES)
    s.set_defaults(func=cmd_treeify)

    s = sub.add_parser("layerize", parents=[common], help="subdivide edges into a layered net")
    s.add_argument("--net", required=True)
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--max-nodes", type=int, default=DEFAULT_MAX_NODES)
    s.set_defaults(func=cmd_layerize)

    s = sub.add_parser("combine", parents=[common, norm], help="net computing a convex combination")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--construction", choices=("optimal", "literal"), default="optimal")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_combine)

    s = sub.add_parser("shatter", parents=[common, norm], help="hypercube shattering nets")
    s.add_argument("--D", type=int, required=True)
    s.add_argument("--depth", type=int, default=2)
    s.add_argument("--H", type=int, default=1)
    s.add_argument("--labels", default="all", help="JSON file of sign vectors, or 'all'")
    s.set_defaults(func=cmd_shatter)

    s = sub.add_parser("halfspaces", parents=[common, norm], help="halfspace-intersection net")
    s.add_argument("--normals", required=True, help="JSON k x D matrix of +1/-1")
    s.set_defaults(func=cmd_halfspaces)

    s = sub.add_parser("rademacher", parents=[common, norm], help="Rademacher complexities and bounds")
    s.add_argument("--mode", required=True,
                   choices=("exact-hull", "linear", "bound-linear", "bound-thm1", "bound-antisym", "opt-lower"))
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--gamma", type=float, default=1.0, help="norm bound (gamma, mu or cap)")
    s.add_argument("--depth", type=int, default=1)
    s.add_argument("--H", type=int, default=1)
    s.add_argument("--which", choices=("gamma", "mu"), default="gamma")
    s.add_argument("--restarts", type=int, default=32)
    s.add_argument("--steps", type=int, default=200)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_rademacher)

    s = sub.add_parser("verify", parents=[common], help="run invariant suites")
    s.add_argument("--suite", required=True, choices=list(SUITES) + ["all"])
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--timing", action="store_true", help="include wall time in the report")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", parents=[common, norm], help="gamma vs H for the shattering recursion")
    s.add_argument("--D", type=int, default=2)
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--H", default="1,2,4,8")
    s.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = args.func(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"netcap {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
