"""Explicit networks: hypercube shattering, halfspace intersections, hull counterexample."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .graph import LayeredNet, Network, to_dag
from .norms import NormParams, gamma_pq

MAX_SHATTER_DIM = 4


def hypercube(D: int) -> np.ndarray:
    """All 2**D points of {-1, +1}**D, in lexicographic order (-1 before +1)."""
    return np.array(list(itertools.product((-1.0, 1.0), repeat=D))).reshape(2**D, D)


def with_bias(X) -> np.ndarray:
    """Prepend the constant-1 bias coordinate to each row."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return np.hstack([np.ones((X.shape[0], 1)), X])


def all_labelings(m: int):
    """Every sign vector in {-1, +1}**m, as float arrays."""
    for bits in itertools.product((-1.0, 1.0), repeat=m):
        yield np.array(bits)


@dataclass(frozen=True)
class ShatterSpec:
    D: int
    d: int = 2
    H: int = 1
    params: NormParams = NormParams(2.0, 2.0)

    def __post_init__(self):
        if self.D < 1:
            raise ValueError("D must be >= 1")
        if self.d < 2:
            raise ValueError("shattering nets need depth >= 2")
        if self.H < 1:
            raise ValueError("H must be >= 1")

    @property
    def m(self) -> int:
        return 2**self.D


def shattering_layered(spec: ShatterSpec, labels, max_dim: int = MAX_SHATTER_DIM) -> LayeredNet:
    """Layered relu net with output labels[i] on hypercube vertex i.

    Inputs carry a leading bias coordinate. Layer 1 has one unit per vertex
    u with weights (-(D-1), u); it outputs 1 on x = u and 0 elsewhere.
    Depth 2 reads the labels off directly. Deeper nets replace the output
    by H copies of its positive part and H copies of its negative part,
    recombined with weights +1/H and -1/H, once per extra layer.
    """
    D, d, H = spec.D, spec.d, spec.H
    if D > max_dim:
        raise ValueError(f"D={D} exceeds the cap of {max_dim} (2**D first-layer units)")
    labels = np.asarray(labels, dtype=float).ravel()
    if labels.shape != (spec.m,):
        raise ValueError(f"need {spec.m} labels, got {labels.size}")
    if not np.all(np.abs(labels) == 1.0):
        raise ValueError("labels must be +1 or -1")
    V = hypercube(D)
    W1 = np.hstack([np.full((spec.m, 1), -(D - 1.0)), V])
    if d == 2:
        return LayeredNet((W1, labels[None, :]))
    mats = [W1, np.vstack([np.tile(labels, (H, 1)), np.tile(-labels, (H, 1))])]
    avg = np.concatenate([np.full(H, 1.0 / H), np.full(H, -1.0 / H)])
    for _ in range(d - 3):
        mats.append(np.vstack([np.tile(avg, (H, 1)), np.tile(-avg, (H, 1))]))
    mats.append(avg[None, :])
    return LayeredNet(tuple(mats))


def shattering_net(spec: ShatterSpec, labels, max_dim: int = MAX_SHATTER_DIM) -> Network:
    return to_dag(shattering_layered(spec, labels, max_dim), bias_input=True)


def shattering_gamma_formula(spec: ShatterSpec) -> float:
    """D^(1/p) m^(1/p+1/q) H^(-(d-2)[1/p* - 1/q]_+), the bias-free norm accounting."""
    p, inv_q = spec.params.p, spec.params.inv_q
    excess = max(1.0 - 1.0 / p - inv_q, 0.0)
    return spec.D ** (1 / p) * spec.m ** (1 / p + inv_q) * spec.H ** (-(spec.d - 2) * excess)


def shattering_gamma_exponent(spec: ShatterSpec) -> float:
    """Slope of log gamma vs log H for the paired construction: (d-2)(1/q - 1/p*)."""
    p, inv_q = spec.params.p, spec.params.inv_q
    return (spec.d - 2) * (inv_q - (1.0 - 1.0 / p))


@dataclass(frozen=True)
class ShatterReport:
    D: int
    d: int
    H: int
    p: float
    q: float
    gamma_measured: float
    gamma_formula: float
    worst_margin: float

    def row(self) -> dict:
        return dict(self.__dict__)


def shatter_report(spec: ShatterSpec, labels) -> ShatterReport:
    net = shattering_layered(spec, labels)
    X = with_bias(hypercube(spec.D))
    from .graph import forward

    margin = float(np.min(forward(net, X) * np.asarray(labels, dtype=float)))
    return ShatterReport(
        spec.D, spec.d, spec.H, spec.params.p, spec.params.q,
        gamma_pq(net, spec.params), shattering_gamma_formula(spec), margin,
    )


# Intersections of homogeneous halfspaces <w_i, x> > 0 over the hypercube.

def _check_normals(normals) -> np.ndarray:
    N = np.atleast_2d(np.asarray(normals, dtype=float))
    if N.size == 0 or not np.all(np.abs(N) == 1.0):
        raise ValueError("normals must be a non-empty matrix of +1/-1 entries")
    return N


def halfspace_intersection_layered(normals) -> LayeredNet:
    """Depth-2 relu net with output +1 inside all k halfspaces, <= -1 outside.

    Units [<w_i,x>]_+ and [<w_i,x> - 1]_+ give a 0/1 indicator per
    halfspace on integer inputs; a constant unit fed by the bias supplies
    the affine shift in 2*sum - 2k + 1.
    """
    N = _check_normals(normals)
    k, D = N.shape
    rows = []
    for w in N:
        rows.append(np.concatenate([[0.0], w]))
        rows.append(np.concatenate([[-1.0], w]))
    rows.append(np.concatenate([[1.0], np.zeros(D)]))
    out = np.concatenate([np.tile([2.0, -2.0], k), [1.0 - 2.0 * k]])
    return LayeredNet((np.array(rows), out[None, :]))


def halfspace_intersection_net(normals) -> Network:
    return to_dag(halfspace_intersection_layered(normals), bias_input=True)


def halfspace_core_layered(normals) -> LayeredNet:
    """The bias-free core: units <w_i,x> twice each, output weights +1/-1."""
    N = _check_normals(normals)
    k = N.shape[0]
    return LayeredNet((np.repeat(N, 2, axis=0), np.tile([1.0, -1.0], k)[None, :]))


def in_all_halfspaces(normals, X) -> np.ndarray:
    N = _check_normals(normals)
    return np.all(np.atleast_2d(X) @ N.T > 0, axis=1)


@dataclass(frozen=True)
class HalfspaceReport:
    k: int
    D: int
    p: float
    q: float
    worst_margin: float
    gamma_core: float
    gamma_formula: float
    gamma_bound: float
    gamma_measured: float
    bias_slack: float

    def row(self) -> dict:
        return dict(self.__dict__)


def halfspace_report(normals, params: NormParams) -> HalfspaceReport:
    from .graph import forward

    N = _check_normals(normals)
    k, D = N.shape
    X = hypercube(D)
    y = np.where(in_all_halfspaces(N, X), 1.0, -1.0)
    net = halfspace_intersection_layered(N)
    margin = float(np.min(forward(net, with_bias(X)) * y))
    p, inv_q = params.p, params.inv_q
    bound = 4.0 * D ** (1 / p) * k**2
    measured = gamma_pq(net, params)
    return HalfspaceReport(
        k, D, p, params.q, margin,
        gamma_core=gamma_pq(halfspace_core_layered(N), params),
        gamma_formula=D ** (1 / p) * (2 * k) ** inv_q * (2 * k) ** (1 / p),
        gamma_bound=bound,
        gamma_measured=measured,
        bias_slack=measured - bound,
    )


def counterexample_sets() -> tuple[list[tuple[float, ...]], list[tuple[float, ...]]]:
    """Evaluation-vector vertices of a non-negative hull H on m = 3 points and of
    the positive part of its symmetric hull, which has strictly larger complexity."""
    H = [(1.0, 0.0, 1.0), (0.0, 1.0, 1.0)]
    H_plus = H + [(0.5, 0.0, 0.0)]
    return H, H_plus
