"""Acceptance criteria 1-11, one test each."""

import itertools
import re
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from netcap.constructions import counterexample_sets
from netcap.rademacher import exact_rademacher_hull


def cases(report, pattern):
    rx = re.compile(pattern)
    return [c for c in report.cases if rx.fullmatch(c.id)]


def summarize(selected):
    fails = [c.id for c in selected if c.status != "pass"]
    return not fails, f"{len(selected) - len(fails)}/{len(selected)} cases" + (
        f", first failure {fails[0]}" if fails else "")


def hull_total(vertices):
    """Independent oracle: exact rational sum over xi of max_j |<xi, v_j>|."""
    V = [[Fraction(x).limit_denominator() for x in v] for v in vertices]
    m = len(V[0])
    return sum(max(abs(sum(s * x for s, x in zip(xi, v))) for v in V)
               for xi in itertools.product((-1, 1), repeat=m))


def test_criterion_01_hull_counterexample(record, full_report):
    H, Hp = counterexample_sets()
    assert hull_total(H) == 12 and hull_total(Hp) == 13
    rh, rhp = exact_rademacher_hull(H), exact_rademacher_hull(Hp)
    elapsed = min(_timed(lambda: exact_rademacher_hull(Hp)) for _ in range(20))
    ok = (rh.details["sup_total"] == 12 and rhp.details["sup_total"] == 13
          and rh.value < rhp.value and rh.value == 12 / 24 and rhp.value == 13 / 24
          and elapsed < 1e-3)
    assert record(1, ok, f"totals 12 and 13, R(H)=12/24 < R(H+)=13/24, {elapsed * 1e6:.0f} us")


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def test_criterion_02_balancing(record, full_report):
    claim = cases(full_report, r"balancing/\d+/claim1")
    eq5 = cases(full_report, r"balancing/\d+/eq5")
    assert all(c.tolerance <= 1e-12 for c in claim)
    grid = {re.search(r"d=(\d+),H=(\d+),p=([\d.]+),q=([\w.]+)", c.description).groups() for c in claim}
    span = ({g[0] for g in grid} == {"1", "2", "3", "4", "5"}
            and {g[1] for g in grid} == {str(h) for h in range(1, 7)}
            and {(g[2], g[3]) for g in grid} == {(p, q) for p in ("1.0", "1.5", "2.0")
                                                  for q in ("1.0", "2.0", "inf")})
    ok, detail = summarize(claim + eq5)
    ok = ok and span and len(claim) >= 200
    assert record(2, ok, f"{len(claim)} nets; {detail}")


def test_criterion_03_unitize_path_norm(record, full_report):
    sel = cases(full_report, r"path-equivalence/\d+/(phi-gamma|forward)")
    nets = len(cases(full_report, r"path-equivalence/\d+/phi-gamma"))
    ok, detail = summarize(sel)
    assert record(3, ok and nets >= 200, f"{nets} nets; {detail}")


def test_criterion_04_layerize(record, full_report):
    sel = cases(full_report, r"transforms/layerize\d+/.*")
    nets = len(cases(full_report, r"transforms/layerize\d+/phi"))
    skip = sum(int(re.search(r"subdiv=(\d+)", c.description).group(1)) > 0
               for c in cases(full_report, r"transforms/layerize\d+/phi"))
    ok, detail = summarize(sel)
    assert record(4, ok and nets >= 100 and skip > 0,
                  f"{nets} DAGs ({skip} needing subdivision); {detail}")


def test_criterion_05_treeify(record, full_report):
    sel = cases(full_report, r"transforms/treeify\d+/.*")
    nets = len(cases(full_report, r"transforms/treeify\d+/tree"))
    ok, detail = summarize(sel)
    assert record(5, ok and nets >= 100, f"{nets} DAGs; {detail}")


def test_criterion_06_convex_combination(record, full_report):
    sel = cases(full_report, r"convexity/\d+/(forward|gamma|condition)")
    pairs = len(cases(full_report, r"convexity/\d+/gamma"))
    ok, detail = summarize(sel)
    assert record(6, ok and pairs >= 100, f"{pairs} pairs; {detail}")


def test_criterion_07_shattering(record, full_report):
    shat = cases(full_report, r"shattering/D[123]/all-labelings")
    slope = cases(full_report, r"shattering/width/slope")
    ok, detail = summarize(shat + slope)
    assert record(7, ok and len(shat) == 3 and len(slope) == 1,
                  f"D=1,2,3 exhaustive, slope {slope[0].measured:.4f} vs {slope[0].expected:.4f}; {detail}")


def test_criterion_08_halfspaces(record, full_report):
    sel = cases(full_report, r"shattering/halfspace/k\dD\d/\d+")
    per = {c.id.rsplit("/", 1)[0] for c in sel}
    ok, detail = summarize(sel)
    assert record(8, ok and len(per) == 12 and len(sel) == 240, f"{len(per)} (k, D) cells; {detail}")


def test_criterion_09_rademacher_sandwich(record, full_report):
    sel = cases(full_report, r"rademacher-sandwich/\d+/.*")
    n = len({c.id.split("/")[1] for c in sel})
    ok, detail = summarize(sel)
    assert record(9, ok and n >= 50, f"{n} instances; {detail}")


def test_criterion_10_convex_nn(record, full_report):
    sel = cases(full_report, r"convexnn-equivalence/\d+/mu2=2nu")
    ok, detail = summarize(sel)
    assert record(10, ok and len(sel) >= 100, f"{len(sel)} nets; {detail}")


def test_criterion_11_determinism(record, tmp_path):
    t0 = time.perf_counter()
    outs = []
    for k in range(2):
        path = tmp_path / f"run{k}.json"
        proc = subprocess.run(
            [sys.executable, "-m", "netcap", "verify", "--suite", "all", "--seed", "42",
             "--workers", "4", "--report", str(path)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(path.read_bytes())
    elapsed = time.perf_counter() - t0
    ok = outs[0] == outs[1] and elapsed < 300
    assert record(11, ok, f"byte-identical={outs[0] == outs[1]}, two runs in {elapsed:.1f}s")
