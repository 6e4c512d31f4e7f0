"""Seeded invariant suites behind ``netcap verify``."""

from __future__ import annotations

import csv
import io
import json
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import constructions as C
from .graph import (
    depth, forward, random_dag, random_layered, to_dag,
)
from .norms import (
    INF, NormParams, gamma_pq, layer_norms, mu_pq, nu_p, path_norm,
    path_norm_bruteforce, per_unit_gamma,
)
from .rademacher import (
    NetClass, empirical_rademacher_lower, exact_rademacher_hull, linear_rademacher_bound,
    linear_rademacher_exact, network_rademacher_bound,
)
from .rebalance import balance_layers, balance_units, unitize_units
from .transforms import conic_combine, convex_combine, convexity_condition, is_tree, layerize, treeify

TOL_FUNCTION = 1e-9
TOL_NORM = 1e-12
DEFAULT_SEED = 42


@dataclass(frozen=True)
class Case:
    id: str
    description: str
    status: str
    measured: float
    expected: float
    tolerance: float
    claim: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class VerifyReport:
    suite: str
    seed: int
    cases: list[Case] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def failures(self) -> list[Case]:
        return [c for c in self.cases if c.status == "fail"]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self, timing: bool = False) -> dict:
        out = {
            "suite": self.suite,
            "seed": self.seed,
            "summary": {
                s: sum(c.status == s for c in self.cases) for s in ("pass", "fail", "skip")
            },
            "cases": [c.to_dict() for c in self.cases],
        }
        if timing:
            out["wall_time"] = self.wall_time
        return out

    def to_json(self, timing: bool = False) -> str:
        return json.dumps(self.to_dict(timing), indent=1, sort_keys=True)


def substream(seed: int, name: str) -> np.random.Generator:
    """Independent generator per named stream, so suites never perturb each other."""
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


class _Collector:
    def __init__(self, prefix: str, claim: str, tol: float = TOL_FUNCTION):
        self.prefix = prefix
        self.tol = tol
        self.claim = claim
        self.cases: list[Case] = []

    def _add(self, key, desc, ok, measured, expected, tol):
        self.cases.append(Case(f"{self.prefix}/{key}", desc, "pass" if ok else "fail",
                               float(measured), float(expected), float(tol), self.claim))

    def eq(self, key, desc, measured, expected, rtol, atol=0.0):
        err = abs(measured - expected)
        ok = err <= rtol * max(abs(expected), abs(measured)) + atol
        self._add(key, desc, ok, measured, expected, rtol)

    def le(self, key, desc, lhs, rhs, rtol):
        self._add(key, desc, lhs <= rhs + rtol * abs(rhs), lhs, rhs, rtol)

    def exact(self, key, desc, measured, expected):
        self._add(key, desc, measured == expected, measured, expected, 0.0)

    def true(self, key, desc, flag):
        self._add(key, desc, bool(flag), float(bool(flag)), 1.0, 0.0)

    def outputs(self, key, desc, a, b, rtol=None, atol=1e-12):
        """Worst |a-b| / (rtol|b| + atol) over a batch; passes when <= 1."""
        rtol = self.tol if rtol is None else rtol
        a, b = np.asarray(a), np.asarray(b)
        ratio = float(np.max(np.abs(a - b) / (rtol * np.abs(b) + atol)))
        self._add(key, desc, ratio <= 1.0, ratio, 1.0, rtol)


def _gauss(rng, n, D):
    return rng.standard_normal((n, D))


P_VALUES = (1.0, 1.5, 2.0)
Q_VALUES = (1.0, 2.0, INF)


def suite_balancing(seed: int, n: int = 216, tol: float = TOL_FUNCTION) -> list[Case]:
    rng = substream(seed, "balancing")
    col = _Collector("balancing", "layer balancing: mu = d^(1/q) gamma^(1/d); gamma <= (mu/d^(1/q))^d", tol)
    combos = [(p, q) for p in P_VALUES for q in Q_VALUES]
    for i in range(n):
        d = 1 + i % 5
        H = 1 + (i // 5) % 6
        p, q = combos[i % len(combos)]
        params = NormParams(p, q)
        D = int(rng.integers(1, 5))
        L = random_layered(rng, d, H, D, scale=float(np.exp(rng.uniform(-1, 1))))
        # random per-layer imbalance
        L = type(L)(tuple(W * float(np.exp(rng.uniform(-2, 2))) for W in L.matrices))
        B = balance_layers(L, params)
        g = gamma_pq(L, params)
        tag = f"{i}:d={d},H={H},p={p},q={q}"
        dq = d ** params.inv_q
        col.le(f"{i}/eq5", f"gamma <= (mu/d^(1/q))^d before balancing [{tag}]",
               g, (mu_pq(L, params) / dq) ** d, 1e-9)
        col.eq(f"{i}/claim1", f"mu after balancing equals d^(1/q) gamma^(1/d) [{tag}]",
               mu_pq(B, params), dq * g ** (1.0 / d), TOL_NORM)
        col.le(f"{i}/mu-drop", f"balancing never increases mu [{tag}]",
               mu_pq(B, params), mu_pq(L, params), TOL_NORM)
        col.eq(f"{i}/gamma", f"gamma unchanged [{tag}]", gamma_pq(B, params), g, TOL_NORM)
        X = _gauss(rng, 200, D)
        col.outputs(f"{i}/forward", f"function preserved [{tag}]", forward(B, X), forward(L, X))
    return col.cases


def suite_path_equivalence(seed: int, n: int = 200, n_dag: int = 100, tol: float = TOL_FUNCTION) -> list[Case]:
    rng = substream(seed, "path-equivalence")
    col = _Collector("path-equivalence", "unit-normalized layered nets: phi_p = gamma_{p,inf}", tol)
    for i in range(n):
        d = int(rng.integers(1, 5))
        H = int(rng.integers(1, 7))
        D = int(rng.integers(1, 5))
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        net = to_dag(random_layered(rng, d, H, D))
        U = unitize_units(net, p)
        tag = f"{i}:d={d},H={H},p={p}"
        col.eq(f"{i}/phi-gamma", f"path norm equals per-unit gamma after unitizing [{tag}]",
               path_norm(U, p), per_unit_gamma(U, p), col.tol)
        col.eq(f"{i}/phi-kept", f"unitizing keeps the path norm [{tag}]",
               path_norm(U, p), path_norm(net, p), TOL_NORM)
        X = _gauss(rng, 200, D)
        col.outputs(f"{i}/forward", f"function preserved [{tag}]", forward(U, X), forward(net, X))
    for i in range(n_dag):
        D = int(rng.integers(1, 4))
        net = random_dag(rng, D, int(rng.integers(1, 5)), max_edges=12)
        p = float(rng.choice([1.0, 2.0, 3.0]))
        col.eq(f"dp{i}/bruteforce", f"path-norm DP equals path enumeration [{len(net.edges)} edges, p={p}]",
               path_norm(net, p), path_norm_bruteforce(net, p), TOL_NORM)
    return col.cases


def suite_transforms(seed: int, n: int = 100, tol: float = TOL_FUNCTION) -> list[Case]:
    rng = substream(seed, "transforms")
    col = _Collector("transforms", "layerize and treeify keep the function and the path norm", tol)
    for i in range(n):
        D = int(rng.integers(1, 4))
        net = random_dag(rng, D, int(rng.integers(1, 4)), edge_prob=0.6)
        d = depth(net)
        p = float(rng.choice([1.0, 2.0]))
        res = layerize(net, d)
        tag = f"{i}:d={d},edges={len(net.edges)},subdiv={res.subdivisions}"
        col.eq(f"layerize{i}/phi", f"layerize keeps phi_{p} [{tag}]",
               path_norm(res.layered, p), path_norm(net, p), TOL_NORM)
        col.true(f"layerize{i}/depth", f"layered result has depth d [{tag}]", res.layered.depth == d)
        X = _gauss(rng, 200, D)
        if res.nonneg_inputs:
            X = np.abs(X)
        col.outputs(f"layerize{i}/forward", f"function preserved on the validated domain [{tag}]",
                    forward(res.layered, X), forward(net, X))
    for i in range(n):
        D = int(rng.integers(1, 4))
        net = random_dag(rng, D, int(rng.integers(1, 5)), max_edges=12)
        p = float(rng.choice([1.0, 2.0]))
        tr = treeify(net)
        tag = f"{i}:edges={len(net.edges)},copies={tr.copies}"
        col.true(f"treeify{i}/tree", f"internal out-degree one [{tag}]", is_tree(tr.net))
        col.eq(f"treeify{i}/phi", f"treeify keeps phi_{p} [{tag}]",
               path_norm(tr.net, p), path_norm(net, p), TOL_NORM)
        X = _gauss(rng, 200, D)
        col.outputs(f"treeify{i}/forward", f"function preserved [{tag}]",
                    forward(tr.net, X), forward(net, X))
    return col.cases


CONVEX_PARAMS = {
    2: [(2.0, 2.0), (1.5, 3.0), (2.0, INF), (1.0, INF), (3.0, 2.0), (3.0, 1.5)],
    3: [(2.0, 4.0), (2.0, INF), (1.0, INF), (3.0, 3.0), (4.0, 3.0), (1.5, 6.0)],
}


def suite_convexity(seed: int, n: int = 120, tol: float = TOL_FUNCTION) -> list[Case]:
    rng = substream(seed, "convexity")
    col = _Collector("convexity", "side-by-side combination: alpha f + (1-alpha) g with gamma <= max", tol)
    for i in range(n):
        d = 2 + i % 2
        p, q = CONVEX_PARAMS[d][(i // 2) % len(CONVEX_PARAMS[d])]
        params = NormParams(p, q)
        D = int(rng.integers(1, 5))
        U = random_layered(rng, d, int(rng.integers(1, 5)), D)
        V = random_layered(rng, d, int(rng.integers(1, 5)), D, scale=float(np.exp(rng.uniform(-1, 1))))
        alpha = float(rng.uniform())
        W = convex_combine(U, V, alpha, params)
        tag = f"{i}:d={d},p={p},q={q},alpha={alpha:.3f}"
        X = _gauss(rng, 200, D)
        col.outputs(f"{i}/forward", f"combined output is the convex combination [{tag}]",
                    forward(W, X), alpha * forward(U, X) + (1 - alpha) * forward(V, X))
        gu, gv = gamma_pq(U, params), gamma_pq(V, params)
        col.true(f"{i}/condition", f"parameters satisfy the convexity condition [{tag}]",
                 convexity_condition(d, params))
        col.le(f"{i}/gamma", f"gamma(W) <= max(gamma(U), gamma(V)) [{tag}]",
               gamma_pq(W, params), max(gu, gv), col.tol)
        col.true(f"{i}/width", f"hidden widths add up layer by layer [{tag}]",
                 W.widths == [a + b for a, b in zip(U.widths, V.widths)])
        Wp = convex_combine(U, V, alpha, params, construction="literal")
        norms_w = layer_norms(Wp, params)
        for k in range(d - 1):
            col.eq(f"{i}/literal-layer{k + 1}", f"literal construction layer norm [{tag}]",
                   norms_w[k], (gu ** (params.q / d) + gv ** (params.q / d)) ** params.inv_q
                   if params.q != INF else max(gu, gv) ** (1.0 / d), TOL_NORM)
        S = conic_combine(U, V, 1.0, 1.0, params)
        col.le(f"{i}/triangle", f"gamma(f+g) <= gamma(f) + gamma(g) [{tag}]",
               gamma_pq(S, params), gu + gv, col.tol)
    return col.cases


def suite_shattering(seed: int, n_halfspace: int = 20, tol: float = TOL_FUNCTION) -> list[Case]:
    rng = substream(seed, "shattering")
    col = _Collector("shattering", "unit-margin shattering of the hypercube; halfspace intersections", tol)
    from .rademacher import shatter_check

    for D in (1, 2, 3):
        X = C.with_bias(C.hypercube(D))
        spec = C.ShatterSpec(D, 2, 1, NormParams(2, 2))
        chk = shatter_check(lambda y: C.shattering_net(spec, y), X)
        col.le(f"D{D}/all-labelings", f"all {len(chk.margins)} labelings of {{-1,1}}^{D} with margin >= 1",
               1.0 - 1e-9, chk.worst, 0.0)
    spec1 = C.ShatterSpec(1, 2, 1, NormParams(2, 2))
    col.eq("D1/gamma", "D=1, d=2 net gamma matches D^(1/p) m^(1/p+1/q)",
           gamma_pq(C.shattering_layered(spec1, [1, -1]), spec1.params),
           C.shattering_gamma_formula(spec1), TOL_NORM)
    # deep recursion reproduces the depth-2 output exactly
    for D, d, H in [(2, 3, 2), (2, 4, 3), (3, 5, 2)]:
        labels = rng.choice([-1.0, 1.0], size=2**D)
        X = C.with_bias(C.hypercube(D))
        base = forward(C.shattering_layered(C.ShatterSpec(D, 2, 1), labels), X)
        deep = forward(C.shattering_layered(C.ShatterSpec(D, d, H), labels), X)
        col.outputs(f"deep/D{D}d{d}H{H}", "deeper nets compute the depth-2 function",
                    deep, base, rtol=0.0, atol=1e-12)
    params = NormParams(2, 4)
    Hs = [1, 2, 4, 8]
    labels = np.array([1.0, -1.0, -1.0, 1.0])
    gammas = [gamma_pq(C.shattering_layered(C.ShatterSpec(2, 4, H, params), labels), params)
              for H in Hs]
    slope = float(np.polyfit(np.log(Hs), np.log(gammas), 1)[0])
    target = -(4 - 2) * (1 - 1 / params.p - params.inv_q)
    col.eq("width/slope", "log gamma vs log H slope for D=2, d=4, p=2, q=4",
           slope, target, 0.0, atol=0.25)
    col.true("width/monotone", "gamma strictly decreasing in H",
             all(a > b for a, b in zip(gammas, gammas[1:])))
    for k in (1, 2, 3):
        for D in (1, 2, 3, 4):
            for r in range(n_halfspace):
                N = rng.choice([-1.0, 1.0], size=(k, D))
                X = C.hypercube(D)
                y = np.where(C.in_all_halfspaces(N, X), 1.0, -1.0)
                out = forward(C.halfspace_intersection_net(N), C.with_bias(X))
                col.le(f"halfspace/k{k}D{D}/{r}", f"intersection of {k} halfspaces in D={D} with margin >= 1",
                       1.0, float(np.min(out * y)), 0.0)
            rep = C.halfspace_report(N, NormParams(2, 2))
            col.le(f"halfspace/k{k}D{D}/gamma", "bias-free core gamma <= 4 D^(1/p) k^2",
                   rep.gamma_core, rep.gamma_bound, TOL_NORM)
    return col.cases


SANDWICH_PARAMS = [(1.0, INF), (2.0, 2.0), (2.0, INF), (1.5, 2.0), (3.0, 2.0), (1.0, 1.0)]


def suite_rademacher_sandwich(seed: int, n: int = 54, restarts: int = 8, steps: int = 200, tol: float = TOL_FUNCTION) -> list[Case]:
    rng = substream(seed, "rademacher-sandwich")
    col = _Collector("rademacher-sandwich", "lower bound <= exact <= upper bounds", tol)
    H, Hp = C.counterexample_sets()
    rh, rhp = exact_rademacher_hull(H), exact_rademacher_hull(Hp)
    col.exact("hull/H", "per-sign-vector sup total over the 8 sign vectors for H",
              rh.details["sup_total"], 12.0)
    col.exact("hull/H+", "per-sign-vector sup total for the rectified symmetric hull",
              rhp.details["sup_total"], 13.0)
    col.le("hull/order", "R(H) < R(H+) strictly", rh.value, np.nextafter(rhp.value, -np.inf), 0.0)
    for i in range(n):
        d = 1 + i % 2
        Hw = int(rng.integers(1, 5))
        p, q = SANDWICH_PARAMS[(i // 2) % len(SANDWICH_PARAMS)]
        m = int(rng.integers(2, 11))
        D = int(rng.integers(1, 5))
        X = rng.standard_normal((m, D))
        gamma = float(np.exp(rng.uniform(-1, 1)))
        cls = NetClass(d, Hw, NormParams(p, q), gamma)
        lo = empirical_rademacher_lower(cls, X, restarts=restarts, steps=steps,
                                        seed=int(rng.integers(2**31)))
        tag = f"{i}:d={d},H={Hw},p={p},q={q},m={m},D={D}"
        if d == 1:
            ex = linear_rademacher_exact(X, p, gamma).value
            col.le(f"{i}/lower<=exact", f"search value <= exact linear complexity [{tag}]",
                   lo.value, ex, TOL_NORM)
            col.eq(f"{i}/recovery", f"search recovers the exact linear complexity [{tag}]",
                   lo.value, ex, 1e-6)
            col.le(f"{i}/exact<=linear-bound", f"exact <= closed-form linear bound [{tag}]",
                   ex, linear_rademacher_bound(X, p, gamma).value, TOL_NORM)
        bound = network_rademacher_bound(d, Hw, p, q, gamma, X)
        for key, val in sorted(bound.details["evaluations"].items()):
            col.le(f"{i}/lower<={key}", f"search value <= {key} bound [{tag}]", lo.value, val, TOL_NORM)
    return col.cases


def suite_convexnn_equivalence(seed: int, n: int = 100, tol: float = TOL_FUNCTION) -> list[Case]:
    rng = substream(seed, "convexnn-equivalence")
    col = _Collector("convexnn-equivalence", "two-layer overall l2: mu_{2,2}^2 = 2 nu_2 at the balanced optimum", tol)
    params = NormParams(2, 2)
    for i in range(n):
        D = int(rng.integers(1, 6))
        H = int(rng.integers(1, 7))
        L = random_layered(rng, 2, H, D)
        L = type(L)((L.matrices[0] * float(np.exp(rng.uniform(-2, 2))), L.matrices[1]))
        B = balance_units(L, 2.0)
        tag = f"{i}:D={D},H={H}"
        col.eq(f"{i}/mu2=2nu", f"mu^2 after unit balancing equals 2 nu [{tag}]",
               mu_pq(B, params) ** 2, 2.0 * nu_p(L, 2.0), col.tol)
        col.le(f"{i}/2nu<=mu2", f"2 nu never exceeds mu^2 of any realization [{tag}]",
               2.0 * nu_p(L, 2.0), mu_pq(L, params) ** 2, TOL_NORM)
        col.eq(f"{i}/nu-kept", f"nu unchanged by unit balancing [{tag}]",
               nu_p(B, 2.0), nu_p(L, 2.0), TOL_NORM)
        X = _gauss(rng, 200, D)
        col.outputs(f"{i}/forward", f"function preserved [{tag}]", forward(B, X), forward(L, X))
    return col.cases


SUITES = {
    "balancing": suite_balancing,
    "path-equivalence": suite_path_equivalence,
    "transforms": suite_transforms,
    "convexity": suite_convexity,
    "shattering": suite_shattering,
    "rademacher-sandwich": suite_rademacher_sandwich,
    "convexnn-equivalence": suite_convexnn_equivalence,
}


def _run_one(name: str, seed: int, tol: float) -> list[Case]:
    return SUITES[name](seed, tol=tol)


def run_suite(suite: str, seed: int = DEFAULT_SEED, workers: int = 1,
              tol: float = TOL_FUNCTION) -> VerifyReport:
    if suite != "all" and suite not in SUITES:
        raise KeyError(f"unknown suite {suite!r}; choose from {', '.join(list(SUITES) + ['all'])}")
    names = list(SUITES) if suite == "all" else [suite]
    t0 = time.perf_counter()
    if workers > 1 and len(names) > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_run_one, names, [seed] * len(names), [tol] * len(names)))
    else:
        parts = [_run_one(nm, seed, tol) for nm in names]
    cases = [c for part in parts for c in part]
    return VerifyReport(suite, seed, cases, time.perf_counter() - t0)


CSV_COLUMNS = ("id", "description", "measured", "expected", "status")


def fmt_float(x) -> str:
    return format(float(x), ".17g")


def report_csv(report: VerifyReport | list[dict], columns=None) -> str:
    """CSV text; floats with 17 significant digits."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(report, VerifyReport):
        columns = CSV_COLUMNS
        rows = [c.to_dict() for c in report.cases]
    else:
        rows = list(report)
        columns = columns or (tuple(rows[0]) if rows else ())
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt_float(r[k]) if isinstance(r[k], float) else r[k] for k in columns])
    return buf.getvalue()


def shatter_sweep(D: int, d: int, Hs, params: NormParams, labels=None) -> list[dict]:
    """Rows (D, d, H, p, q, gamma_measured, gamma_formula) for the width recursion."""
    if labels is None:
        labels = np.where(np.arange(2**D) % 3 == 0, 1.0, -1.0)
    rows = []
    for H in Hs:
        spec = C.ShatterSpec(D, d, H, params)
        rows.append({
            "D": D, "d": d, "H": H, "p": params.p, "q": params.q,
            "gamma_measured": gamma_pq(C.shattering_layered(spec, labels), params),
            "gamma_formula": C.shattering_gamma_formula(spec),
        })
    return rows
