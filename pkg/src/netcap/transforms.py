"""Structural rewrites: tree-ification, layerization, convex combination."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .graph import Activation, GraphError, LayeredNet, Network, to_layered
from .norms import NormParams, layer_norms
from .rebalance import prune_dead

DEFAULT_MAX_NODES = 10**6


class SizeCapExceeded(GraphError):
    pass


def _require_relu(net):
    if net.activation is not Activation.RELU:
        raise GraphError("this rewrite relies on relu homogeneity")


@dataclass(frozen=True)
class Treeified:
    net: Network
    copies: int
    origin: dict[int, tuple[int, int]] = field(default_factory=dict)
    """Fresh node id -> (original node id, consumer node id)."""


def treeify(net: Network, max_nodes: int = DEFAULT_MAX_NODES) -> Treeified:
    """Duplicate shared internal nodes until each has out-degree one.

    The first consumer of a node (in consumer-id order, walking down from
    the output) keeps the original id; every other consumer gets a fresh
    copy carrying the full incoming edge set. Input nodes are shared.
    """
    _require_relu(net)
    nodes = [(n, r) for n, r in net.nodes if r.startswith("input:")]
    edges: list[tuple[int, int, float]] = []
    used: set[int] = set()
    origin: dict[int, tuple[int, int]] = {}
    next_id = net.next_id

    def build(v: int, consumer: int | None) -> int:
        nonlocal next_id
        role = net.roles[v]
        if role.startswith("input:"):
            return v
        if v not in used:
            used.add(v)
            nid = v
        else:
            nid = next_id
            next_id += 1
            origin[nid] = (v, consumer)
        nodes.append((nid, role))
        if len(nodes) > max_nodes:
            raise SizeCapExceeded(f"treeify would exceed {max_nodes} nodes")
        for u, w in net.incoming[v]:
            edges.append((build(u, nid), nid, w))
        return nid

    build(net.output_node, None)
    out = net.replace(nodes=tuple(sorted(nodes)), edges=tuple(edges))
    return Treeified(out, len(origin), origin)


def is_tree(net: Network) -> bool:
    """True when every non-input, non-output node has out-degree exactly one."""
    return all(
        len(net.outgoing[n]) == 1 for n, r in net.nodes if r == "hidden"
    )


@dataclass(frozen=True)
class Layerized:
    layered: LayeredNet
    dag: Network
    subdivisions: int
    nonneg_inputs: bool
    """True when an edge leaving a (non-bias) input node was subdivided; the
    result then matches the original only for element-wise non-negative x."""


def _violating_edge(net: Network, d: int):
    din, dout = net.depth_from_inputs, net.depth_to_output
    for u, v, w in sorted(net.edges):
        if din[u] + dout[v] < d - 1:
            return u, v, w
    return None


def layerize(net: Network, d: int, max_nodes: int = DEFAULT_MAX_NODES) -> Layerized:
    """Subdivide short edges until every input->output path has length d.

    Edge (u->v, w) becomes u->new (sqrt|w|) and new->v (sign(w) sqrt|w|),
    chosen as the smallest (src, dst) with d_in(u) + d_out(v) < d - 1.
    Path lengths never exceed d and every path weight product keeps its
    absolute value, so phi_p is unchanged.
    """
    _require_relu(net)
    net = prune_dead(net)
    actual = max(net.depth_from_inputs.values())
    if actual != d:
        raise GraphError(f"longest path has length {actual}, expected {d}")
    bias = net.input_nodes[0] if net.bias_input else None
    inputs = set(net.input_nodes)
    count = 0
    nonneg = False
    while (edge := _violating_edge(net, d)) is not None:
        u, v, w = edge
        if len(net.nodes) + 1 > max_nodes:
            raise SizeCapExceeded(f"layerize would exceed {max_nodes} nodes")
        if u in inputs and u != bias:
            nonneg = True
        new = net.next_id
        r = math.sqrt(abs(w))
        edges = [e for e in net.edges if (e[0], e[1]) != (u, v)]
        edges += [(u, new, r), (new, v, math.copysign(r, w))]
        net = net.replace(nodes=net.nodes + ((new, "hidden"),), edges=edges)
        count += 1
    return Layerized(to_layered(net), net, count, nonneg)


def _scaled_sides(U: LayeredNet, V: LayeredNet, cu: float, cv: float, params: NormParams,
                  construction: str):
    """Per-layer matrices for the U side and V side of a side-by-side net.

    Both sides are normalized to unit layer norms; the function weights cu
    and cv and the norm budget are then spread across layers. "literal" puts
    gamma**(1/d) on every layer and cu, cv on the output layer only.
    "optimal" sets the hidden-layer scale ratio between the sides to
    t = (b/a)**(p/(q + p(d-1))) with a = cu*gamma(U), b = cv*gamma(V),
    which minimizes the product of layer norms of the combined net.
    """
    d = U.depth
    nu, nv = layer_norms(U, params), layer_norms(V, params)
    if min(nu) == 0.0 or min(nv) == 0.0:
        raise GraphError("convex_combine needs nonzero layer norms (balance-able nets)")
    gu = math.exp(math.fsum(map(math.log, nu)))
    gv = math.exp(math.fsum(map(math.log, nv)))
    Uh = [W / n for W, n in zip(U.matrices, nu)]
    Vh = [W / n for W, n in zip(V.matrices, nv)]
    if construction == "literal":
        su = [gu ** (1.0 / d)] * d
        sv = [gv ** (1.0 / d)] * d
        su[-1] *= cu
        sv[-1] *= cv
        return [s * W for s, W in zip(su, Uh)], [s * W for s, W in zip(sv, Vh)]
    if construction != "optimal":
        raise ValueError(f"unknown construction {construction!r}")
    if cu == 0.0 or cv == 0.0:
        # one side contributes nothing: give the other side a balanced split
        a, b = cu * gu, cv * gv
        su = [a ** (1.0 / d)] * d
        sv = [b ** (1.0 / d)] * d
        return [s * W for s, W in zip(su, Uh)], [s * W for s, W in zip(sv, Vh)]
    # all scales in the log domain, so extreme weights or alpha cannot overflow
    la = math.log(cu) + math.fsum(map(math.log, nu))
    lb = math.log(cv) + math.fsum(map(math.log, nv))
    p, inv_q = params.p, params.inv_q
    # t = (b/a)^(p / (q + p(d-1))), written with 1/q so q = inf gives t = 1
    lt = (lb - la) * p * inv_q / (1.0 + p * (d - 1) * inv_q)
    lhidden = inv_q * float(np.logaddexp(0.0, lt / inv_q)) if inv_q > 0 else max(0.0, lt)
    lout = float(np.logaddexp(p * la, p * (lb - (d - 1) * lt))) / p
    # overall scale c on hidden layers of both sides; pick c so layers are balanced
    lc = ((d - 1) * lhidden + lout) / d - lhidden
    Us = [math.exp(lc) * W for W in Uh[:-1]] + [math.exp(la - (d - 1) * lc) * Uh[-1]]
    Vs = [math.exp(lc + lt) * W for W in Vh[:-1]] + [math.exp(lb - (d - 1) * (lc + lt)) * Vh[-1]]
    return Us, Vs


def conic_combine(U: LayeredNet, V: LayeredNet, cu: float, cv: float, params: NormParams,
                  construction: str = "optimal") -> LayeredNet:
    """Side-by-side net computing cu*f_U + cv*f_V (cu, cv >= 0).

    With the default construction, gamma of the result is at most
    cu*gamma(U) + cv*gamma(V) whenever 1/q <= (1 - 1/p)/(d - 1).
    """
    _require_relu(U)
    _require_relu(V)
    if U.depth != V.depth:
        raise GraphError("both networks need the same depth")
    if U.num_inputs != V.num_inputs:
        raise GraphError("both networks need the same input dimension")
    if cu < 0 or cv < 0:
        raise ValueError("combination weights must be non-negative")
    Us, Vs = _scaled_sides(U, V, cu, cv, params, construction)
    d = U.depth
    if d == 1:
        return LayeredNet((Us[0] + Vs[0],), U.activation)
    mats = [np.vstack([Us[0], Vs[0]])]
    for Ui, Vi in zip(Us[1:-1], Vs[1:-1]):
        mats.append(np.block([
            [Ui, np.zeros((Ui.shape[0], Vi.shape[1]))],
            [np.zeros((Vi.shape[0], Ui.shape[1])), Vi],
        ]))
    mats.append(np.hstack([Us[-1], Vs[-1]]))
    return LayeredNet(tuple(mats), U.activation)


def convex_combine(U: LayeredNet, V: LayeredNet, alpha: float, params: NormParams,
                   construction: str = "optimal") -> LayeredNet:
    """Layered net computing alpha*f_U + (1-alpha)*f_V."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    return conic_combine(U, V, alpha, 1.0 - alpha, params, construction)


def convexity_condition(d: int, params: NormParams) -> bool:
    """1/q <= (1 - 1/p) / (d - 1); always true at depth 1."""
    if d <= 1:
        return True
    return params.inv_q <= (1.0 - 1.0 / params.p) / (d - 1) + 1e-15


def literal_combination_factor(d: int, params: NormParams) -> float:
    """2**((d-1)/q + 1/p - 1): gamma(W)/gamma for the alpha = 1/2, equal-gamma case."""
    return 2.0 ** ((d - 1) * params.inv_q + 1.0 / params.p - 1.0)

