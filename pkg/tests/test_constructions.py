import itertools

import numpy as np
import pytest

from netcap import constructions as C
from netcap.graph import forward
from netcap.norms import NormParams, gamma_pq
from netcap.rademacher import shatter_check


def test_hypercube_and_bias():
    X = C.hypercube(2)
    assert X.tolist() == [[-1, -1], [-1, 1], [1, -1], [1, 1]]
    assert C.with_bias(X)[:, 0].tolist() == [1, 1, 1, 1]
    assert sum(1 for _ in C.all_labelings(3)) == 8


def test_first_layer_units_are_vertex_indicators():
    for D in (1, 2, 3, 4):
        L = C.shattering_layered(C.ShatterSpec(D), np.ones(2**D))
        Z = np.maximum(C.with_bias(C.hypercube(D)) @ L.matrices[0].T, 0)
        assert np.array_equal(Z, np.eye(2**D))


def test_d1_example():
    spec = C.ShatterSpec(1, 2, 1, NormParams(2, 2))
    L = C.shattering_layered(spec, [1, -1])
    out = forward(L, C.with_bias(C.hypercube(1)))
    assert out.tolist() == [1.0, -1.0]
    assert C.shattering_gamma_formula(spec) == pytest.approx(2.0)
    assert gamma_pq(L, spec.params) == pytest.approx(2.0)


def test_all_labelings_d3_exhaustive():
    spec = C.ShatterSpec(3)
    chk = shatter_check(lambda y: C.shattering_net(spec, y), C.with_bias(C.hypercube(3)))
    assert len(chk.margins) == 256 and chk.passed and chk.worst >= 1 - 1e-9


def test_bias_free_first_layer_fails_at_d3():
    """Without the bias offset, neighboring vertices leak into each other's unit."""
    X = C.hypercube(3)
    Z = np.maximum(X @ X.T, 0)
    worst = min(float(np.min((Z @ y) * y)) for y in itertools.product((-1.0, 1.0), repeat=8))
    assert worst < 1


@pytest.mark.parametrize("D,d,H", [(1, 3, 1), (2, 4, 3), (3, 5, 2), (2, 6, 4)])
def test_deep_recursion_preserves_function(D, d, H):
    X = C.with_bias(C.hypercube(D))
    y = np.random.default_rng(D * d * H).choice([-1.0, 1.0], 2**D)
    base = forward(C.shattering_layered(C.ShatterSpec(D), y), X)
    deep = forward(C.shattering_layered(C.ShatterSpec(D, d, H), y), X)
    np.testing.assert_allclose(deep, base, atol=1e-12)
    assert np.array_equal(base, y)


def test_width_slope_and_monotone():
    P = NormParams(2, 4)
    Hs = [1, 2, 4, 8]
    y = np.array([1.0, -1.0, -1.0, 1.0])
    g = [gamma_pq(C.shattering_layered(C.ShatterSpec(2, 4, H, P), y), P) for H in Hs]
    slope = np.polyfit(np.log(Hs), np.log(g), 1)[0]
    assert slope == pytest.approx(C.shattering_gamma_exponent(C.ShatterSpec(2, 4, 1, P)), abs=0.25)
    assert all(a > b for a, b in zip(g, g[1:]))


def test_shatter_errors():
    with pytest.raises(ValueError):
        C.shattering_layered(C.ShatterSpec(5), np.ones(32))
    with pytest.raises(ValueError):
        C.shattering_layered(C.ShatterSpec(2), [1, 1, 1])
    with pytest.raises(ValueError):
        C.shattering_layered(C.ShatterSpec(1), [1, 0.5])
    with pytest.raises(ValueError):
        C.ShatterSpec(2, 1)


def test_halfspace_examples():
    rep = C.halfspace_report([[1.0, 1.0]], NormParams(2, 2))
    assert rep.worst_margin >= 1
    rng = np.random.default_rng(0)
    N = rng.choice([-1.0, 1.0], size=(2, 3))
    X = C.hypercube(3)
    y = np.where(C.in_all_halfspaces(N, X), 1.0, -1.0)
    assert np.min(forward(C.halfspace_intersection_net(N), C.with_bias(X)) * y) >= 1


@pytest.mark.parametrize("k,D", [(k, D) for k in (1, 2, 3) for D in (1, 2, 3, 4)])
def test_halfspace_outputs_are_exactly_plus_minus_odd(k, D):
    rng = np.random.default_rng(10 * k + D)
    N = rng.choice([-1.0, 1.0], size=(k, D))
    X = C.hypercube(D)
    out = forward(C.halfspace_intersection_layered(N), C.with_bias(X))
    inside = C.in_all_halfspaces(N, X)
    assert np.all(out[inside] == 1.0)
    assert np.all(out[~inside] <= -1.0)
    rep = C.halfspace_report(N, NormParams(2, 2))
    assert rep.gamma_core <= rep.gamma_bound * (1 + 1e-12)
    assert rep.bias_slack == pytest.approx(rep.gamma_measured - rep.gamma_bound)


def test_counterexample_sets():
    H, Hp = C.counterexample_sets()
    assert H == [(1, 0, 1), (0, 1, 1)]
    assert Hp == [(1, 0, 1), (0, 1, 1), (0.5, 0, 0)]
    assert (len(H), len(Hp)) == (2, 3)
