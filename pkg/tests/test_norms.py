import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from netcap import graph as G
from netcap.graph import LayeredNet
from netcap.norms import (
    INF, NormParams, dual_exponent, gamma_pq, group_norm, layer_norms, log_gamma, lp_norm, mu_pq, norm_report,
    nu_p, parse_exponent, path_norm, path_norm_bruteforce, per_unit_gamma,
)
from test_graph import chain, diamond

EX = LayeredNet((np.array([[1.0, 1.0], [1.0, -1.0]]), np.array([[2.0, 2.0]])))


def mu_oracle(mats, p, q):
    """Direct double loop over units, no numpy reductions."""
    norms = [sum(abs(float(w)) ** p for w in row) ** (1 / p) for W in mats for row in W]
    if q == INF:
        return max(norms)
    return sum(n**q for n in norms) ** (1 / q)


def test_params():
    P = NormParams(2, INF)
    assert P.p_star == 2 and P.inv_q == 0.0
    assert NormParams(1, 2).p_star == INF
    assert P.to_dict()["q"] == "inf"
    assert parse_exponent("inf") == INF and parse_exponent("3") == 3.0
    for bad in ((0.5, 2), (INF, 2), (2, 0.5)):
        with pytest.raises(ValueError):
            NormParams(*bad)
    assert dual_exponent(4) == pytest.approx(4 / 3)


def test_lp_norm_extreme_p_does_not_overflow():
    assert lp_norm([1e200, 1e200], 4.0) == pytest.approx(1e200 * 2**0.25)
    assert lp_norm([0.0, 0.0], 3.0) == 0.0


def test_mu_examples():
    single = LayeredNet((np.array([[3.0, 4.0]]),))
    for q in (1.0, 2.0, INF):
        assert mu_pq(single, NormParams(2, q)) == pytest.approx(5.0)
    assert mu_pq(EX, NormParams(1, 1)) == pytest.approx(8.0)
    dead = LayeredNet((np.array([[3.0, 4.0], [0.0, 0.0]]), np.array([[1.0, 0.0]])))
    assert mu_pq(dead, NormParams(2, INF)) == pytest.approx(5.0)


def test_mu_on_dag_matches_layered():
    assert mu_pq(G.to_dag(EX), NormParams(1.5, 3)) == pytest.approx(mu_pq(EX, NormParams(1.5, 3)))


def test_gamma_examples():
    assert gamma_pq(EX, NormParams(1, 1)) == pytest.approx(16.0)
    assert layer_norms(EX, NormParams(1, 1)) == pytest.approx([4.0, 4.0])
    assert gamma_pq(LayeredNet((np.array([[3.0, 4.0]]),)), NormParams(2, 2)) == pytest.approx(5.0)
    zero = LayeredNet((np.zeros((2, 2)), np.ones((1, 2))))
    assert gamma_pq(zero, NormParams(2, 2)) == 0.0


def test_gamma_deep_net_no_overflow():
    mats = tuple([np.full((3, 3), 1e30)] * 20 + [np.full((1, 3), 1e30)])
    g = gamma_pq(LayeredNet(mats), NormParams(2, INF))
    assert g == INF
    assert log_gamma(LayeredNet(mats), NormParams(2, INF)) == pytest.approx(21 * math.log(math.sqrt(3) * 1e30))


def test_path_norm_examples():
    assert path_norm(chain([2.0, 3.0]), 1) == pytest.approx(6.0)
    assert path_norm(diamond(), 1) == pytest.approx(5.0)
    assert path_norm(diamond(), 2) == pytest.approx(math.sqrt(13))


def test_nu_examples():
    assert nu_p(LayeredNet((np.array([[3.0, 4.0]]), np.array([[2.0]]))), 2) == pytest.approx(10.0)
    assert nu_p(LayeredNet((np.eye(2), np.array([[3.0, -1.0]]))), 2) == pytest.approx(4.0)
    dead = LayeredNet((np.array([[0.6, 0.8], [0.0, 0.0]]), np.array([[1.0, 7.0]])))
    assert nu_p(dead, 2) == pytest.approx(1.0)
    with pytest.raises(G.GraphError):
        nu_p(G.random_layered(np.random.default_rng(0), 3, 2, 2), 2)


def test_norm_report_gamma_only_for_layered():
    assert "gamma" in norm_report(EX, NormParams(2, 2)).to_dict()
    assert "gamma" not in norm_report(diamond(), NormParams(2, 2)).to_dict()


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), d=st.integers(1, 4), H=st.integers(1, 4),
       p=st.sampled_from([1.0, 1.5, 2.0, 3.0]), q=st.sampled_from([1.0, 2.0, 3.0, INF]))
def test_mu_matches_oracle_and_eq5(seed, d, H, p, q):
    L = G.random_layered(np.random.default_rng(seed), d, H, 3)
    P = NormParams(p, q)
    mu = mu_pq(L, P)
    assert mu == pytest.approx(mu_oracle(L.matrices, p, q), rel=1e-12)
    assert gamma_pq(L, P) <= (mu / d ** P.inv_q) ** d * (1 + 1e-9)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), alpha=st.floats(0.01, 100.0), d=st.integers(1, 4))
def test_gamma_homogeneity(seed, alpha, d):
    L = G.random_layered(np.random.default_rng(seed), d, 3, 2)
    scaled = LayeredNet(tuple(W * alpha ** (1 / d) for W in L.matrices))
    P = NormParams(2, 3)
    assert gamma_pq(scaled, P) == pytest.approx(alpha * gamma_pq(L, P), rel=1e-12)


@settings(max_examples=80, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.sampled_from([1.0, 2.0, 3.5]))
def test_path_dp_matches_enumeration(seed, p):
    net = G.random_dag(np.random.default_rng(seed), 2, 4, max_edges=12)
    assert path_norm(net, p) == pytest.approx(path_norm_bruteforce(net, p), rel=1e-12)


def test_group_norm_is_q_norm_of_row_norms():
    W = np.array([[3.0, 4.0], [6.0, 8.0]])
    assert group_norm(W, NormParams(2, 1)) == pytest.approx(15.0)
    assert group_norm(W, NormParams(2, INF)) == pytest.approx(10.0)
    assert per_unit_gamma(EX, 2) == pytest.approx(math.sqrt(2) * math.sqrt(8))
