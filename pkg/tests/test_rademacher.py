import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netcap import constructions as C
from netcap.norms import INF, NormParams
from netcap.rademacher import (
    NetClass, RademacherReport, antisym_bound, empirical_rademacher_lower, exact_rademacher_hull,
    linear_rademacher_bound, linear_rademacher_exact, network_rademacher_bound, path_norm_bound,
    shatter_check, sign_vectors, width_factor,
)


def linear_oracle(X, p, gamma):
    ps = INF if p == 1 else p / (p - 1)
    vals = []
    for xi in itertools.product((-1, 1), repeat=len(X)):
        v = sum(s * np.asarray(x, float) for s, x in zip(xi, X))
        vals.append(np.max(np.abs(v)) if ps == INF else np.sum(np.abs(v) ** ps) ** (1 / ps))
    return gamma * float(np.mean(vals)) / len(X)


def test_hull_examples():
    H, Hp = C.counterexample_sets()
    assert exact_rademacher_hull(H).details["sup_total"] == 12
    assert exact_rademacher_hull(Hp).details["sup_total"] == 13
    assert exact_rademacher_hull(H).value == pytest.approx(12 / 24)
    assert exact_rademacher_hull(Hp).value == pytest.approx(13 / 24)
    assert exact_rademacher_hull([(0, 0, 0)]).value == 0.0


def test_hull_too_large():
    with pytest.raises(ValueError):
        exact_rademacher_hull([np.ones(25)])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 8), k=st.integers(1, 5))
def test_hull_invariances(seed, m, k):
    rng = np.random.default_rng(seed)
    V = rng.standard_normal((k, m))
    base = exact_rademacher_hull(V).value
    inner = rng.dirichlet(np.ones(k)) @ V
    assert exact_rademacher_hull(np.vstack([V, inner])).value == pytest.approx(base, rel=1e-12)
    assert exact_rademacher_hull(-V).value == pytest.approx(base, rel=1e-12)


def test_sign_vectors_half_covers_antipodes():
    full = {tuple(r) for r in sign_vectors(4)}
    half = sign_vectors(4, half=True)
    assert len(full) == 16 and len(half) == 8
    assert {tuple(r) for r in half} | {tuple(-r) for r in half} == full


def test_linear_exact_examples():
    x = np.array([[3.0, 4.0]])
    assert linear_rademacher_exact(x, 2).value == pytest.approx(5.0)
    assert linear_rademacher_exact(np.eye(2), 2).value == pytest.approx(math.sqrt(2) / 2)
    X = np.random.default_rng(0).standard_normal((5, 3))
    assert linear_rademacher_exact(2.5 * X, 1.5).value == pytest.approx(
        2.5 * linear_rademacher_exact(X, 1.5).value, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 8), D=st.integers(1, 4),
       p=st.sampled_from([1.0, 1.5, 2.0, 3.0]))
def test_linear_exact_matches_oracle_and_bound(seed, m, D, p):
    X = np.random.default_rng(seed).standard_normal((m, D))
    ex = linear_rademacher_exact(X, p, 1.7).value
    assert ex == pytest.approx(linear_oracle(X, p, 1.7), rel=1e-12)
    assert ex <= linear_rademacher_bound(X, p, 1.7).value * (1 + 1e-12)


def test_linear_monte_carlo_needs_seed_and_is_close():
    X = np.random.default_rng(1).standard_normal((26, 2))
    with pytest.raises(ValueError):
        linear_rademacher_exact(X, 2)
    rep = linear_rademacher_exact(X, 2, seed=3, draws=20000)
    assert rep.method == "monte-carlo" and rep.stderr > 0
    assert rep.value == linear_rademacher_exact(X, 2, seed=3, draws=20000).value


def test_linear_bound_examples():
    X = np.array([[2.0], [-1.0], [0.5]])
    b = linear_rademacher_bound(X, 2, 1.0).value
    assert b == pytest.approx(math.sqrt(2 * 4.0 / 3))
    assert linear_rademacher_bound(X, 2, 2.0).value == pytest.approx(2 * b)
    forms = linear_rademacher_bound(np.eye(3), 3, 1.0).details["forms"]
    assert set(forms) == {"linear-p>2-matrix", "linear-p>2-max"}


def test_network_bound_examples():
    X = np.random.default_rng(2).standard_normal((6, 3))
    lin = linear_rademacher_bound(X, 2, 1.0).value
    d1 = network_rademacher_bound(1, 5, 2, 2, 1.0, X, form="sized")
    assert d1.details["evaluations"]["sized/linear-p<=2"] == pytest.approx(lin)
    both = network_rademacher_bound(3, 4, 2, 2, 1.0, X)
    assert both.details["front_factors"]["sized"] == pytest.approx(both.details["front_factors"]["size-free"])
    r = network_rademacher_bound(2, 4, 2, INF, 1.0, X, form="sized")
    assert r.details["front_factors"]["sized"] == pytest.approx(4.0)
    assert width_factor(2, 4, NormParams(2, INF)) == pytest.approx(4.0)
    with pytest.raises(ValueError, match="q <= p\\*"):
        network_rademacher_bound(2, 4, 2, INF, 1.0, X, form="size-free")
    with pytest.raises(ValueError, match="condition violated"):
        network_rademacher_bound(0, 4, 2, 2, 1.0, X)


def test_antisym_examples():
    X = np.random.default_rng(3).standard_normal((4, 2))
    assert antisym_bound(1, 1.0, X).value == pytest.approx(antisym_bound(4, 1.0, X).value)
    assert antisym_bound(3, 2.0, X).value == pytest.approx(8 * antisym_bound(3, 1.0, X).value)
    for d in (2, 3, 4):
        mu = 1.5
        sized_mu = network_rademacher_bound(d, 3, 1, INF, mu, X, which="mu", form="sized")
        front = sized_mu.details["front_factors"]["sized"]
        lin = sized_mu.details["linear"]["linear-p<=2"]
        assert antisym_bound(d, mu, X).value < front * lin
    assert path_norm_bound(2, 1.0, X).value > 0


def test_report_rejects_bad_values():
    with pytest.raises(ValueError):
        RademacherReport(-1.0, "exact-enum")
    with pytest.raises(ValueError):
        RademacherReport(1.0, "guess")


@pytest.mark.parametrize("p,q", [(1.0, INF), (2.0, 2.0), (1.5, 3.0), (3.0, 2.0)])
def test_search_recovers_linear_value(p, q):
    X = np.random.default_rng(4).standard_normal((6, 3))
    lo = empirical_rademacher_lower(NetClass(1, 1, NormParams(p, q), 1.3), X, restarts=4, steps=50)
    ex = linear_rademacher_exact(X, p, 1.3).value
    assert lo.value <= ex * (1 + 1e-12)
    assert lo.value == pytest.approx(ex, rel=1e-6)


def test_search_zero_cap_and_caps():
    X = np.ones((3, 2))
    assert empirical_rademacher_lower(NetClass(2, 2, NormParams(2, 2), 0.0), X).value == 0.0
    with pytest.raises(ValueError):
        empirical_rademacher_lower(NetClass(2, 2, NormParams(2, 2), 1.0), np.ones((17, 2)))


def test_search_deterministic_across_workers():
    X = np.random.default_rng(5).standard_normal((9, 2))
    cls = NetClass(2, 3, NormParams(2, INF), 1.0)
    one = empirical_rademacher_lower(cls, X, restarts=4, steps=30, seed=7, workers=1, chunk_size=32)
    two = empirical_rademacher_lower(cls, X, restarts=4, steps=30, seed=7, workers=3, chunk_size=32)
    assert one.value == two.value


def test_search_below_every_upper_bound():
    rng = np.random.default_rng(6)
    for d, p, q in [(2, 2.0, 2.0), (2, 1.0, INF), (2, 3.0, 2.0)]:
        X = rng.standard_normal((7, 3))
        lo = empirical_rademacher_lower(NetClass(d, 3, NormParams(p, q), 1.0), X, restarts=4, steps=60)
        bound = network_rademacher_bound(d, 3, p, q, 1.0, X)
        assert lo.value > 0
        assert all(lo.value <= v * (1 + 1e-12) for v in bound.details["evaluations"].values())


def test_shatter_check_positive_and_negative_control():
    spec = C.ShatterSpec(2)
    X = C.with_bias(C.hypercube(2))
    good = shatter_check(lambda y: C.shattering_net(spec, y), X)
    assert good.passed and len(good.margins) == 16
    const = shatter_check(lambda y: C.shattering_net(spec, y), X, labelings=[np.ones(4)])
    assert const.passed
    flipped = shatter_check(lambda y: C.shattering_net(spec, -y), X)
    assert not flipped.passed and flipped.worst <= -1
    assert flipped.failures == list(range(16))
