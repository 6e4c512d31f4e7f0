"""Function-preserving rescalings that exploit ReLU positive homogeneity."""

from __future__ import annotations

import math

import numpy as np

from .graph import Activation, GraphError, LayeredNet, Network
from .norms import NormParams, layer_norms, lp_norm

# Scale factors this close to 1 are treated as 1, so balanced inputs are fixed points.
_UNIT_RTOL = 8 * np.finfo(float).eps


def _require_relu(net):
    if net.activation is not Activation.RELU:
        raise GraphError("rescaling needs a positively homogeneous (relu) activation")


def balance_layers(layered: LayeredNet, params: NormParams) -> LayeredNet:
    """Rescale every layer to group norm gamma**(1/d).

    The product of layer norms, and hence the computed function, is kept;
    mu then attains its minimum d**(1/q) * gamma**(1/d) over layer rescalings.
    """
    _require_relu(layered)
    norms = layer_norms(layered, params)
    if min(norms) == 0.0:
        return LayeredNet(tuple(np.zeros_like(W) for W in layered.matrices), layered.activation)
    logs = [math.log(n) for n in norms]
    target = math.fsum(logs) / layered.depth
    mats = []
    for W, lg in zip(layered.matrices, logs):
        s = math.exp(target - lg)
        mats.append(W if abs(s - 1.0) <= _UNIT_RTOL else W * s)
    return LayeredNet(tuple(mats), layered.activation)


def balance_units(layered: LayeredNet, p: float = 2.0) -> LayeredNet:
    """Equalize each hidden unit's incoming l_p norm with |its output weight|.

    Depth-2 only. Units whose incoming row or output weight is zero compute
    nothing useful and are zeroed out entirely. This is the per-unit
    rebalance under which mu_{2,2}^2 equals 2 nu_2.
    """
    _require_relu(layered)
    if layered.depth != 2:
        raise GraphError("balance_units needs a depth-2 network")
    W1, W2 = (np.array(W) for W in layered.matrices)
    for j in range(W1.shape[0]):
        r, a = lp_norm(W1[j], p), abs(W2[0, j])
        if r == 0.0 or a == 0.0:
            W1[j] = 0.0
            W2[0, j] = 0.0
            continue
        t = math.sqrt(r * a)
        W1[j] *= t / r
        W2[0, j] *= t / a
    return LayeredNet((W1, W2), layered.activation)


def prune_dead(net: Network) -> Network:
    """Drop nodes that lie on no input->output path (structural, not by value)."""
    from_in = net.depth_from_inputs
    to_out = net.depth_to_output
    keep = {
        n for n, r in net.nodes
        if r != "hidden" or (from_in[n] >= 0 and to_out[n] >= 0)
    }
    if len(keep) == len(net.nodes):
        return net
    nodes = tuple((n, r) for n, r in net.nodes if n in keep)
    edges = tuple((u, v, w) for u, v, w in net.edges if u in keep and v in keep)
    return net.replace(nodes=nodes, edges=edges)


def unitize_units(net: Network, p: float) -> Network:
    """One topological pass giving every live internal node unit incoming l_p norm.

    The scale c removed from a node's incoming weights is pushed onto its
    outgoing weights. Nodes with c == 0 output zero and are removed together
    with their edges; nodes left off every input->output path are pruned.
    """
    _require_relu(net)
    w = {(u, v): wt for u, v, wt in net.edges}
    out_of = {n: [v for v, _ in net.outgoing[n]] for n, _ in net.nodes}
    in_of = {n: [u for u, _ in net.incoming[n]] for n, _ in net.nodes}
    dropped = set()
    for v in net.topological_order:
        if net.roles[v] != "hidden":
            continue
        srcs = [u for u in in_of[v] if u not in dropped]
        c = lp_norm([w[(u, v)] for u in srcs], p)
        if c == 0.0:
            dropped.add(v)
            continue
        if abs(c - 1.0) <= _UNIT_RTOL:
            continue
        for u in srcs:
            w[(u, v)] /= c
        for x in out_of[v]:
            w[(v, x)] *= c
    nodes = tuple((n, r) for n, r in net.nodes if n not in dropped)
    edges = tuple(
        (u, v, w[(u, v)]) for u, v, _ in net.edges if u not in dropped and v not in dropped
    )
    return prune_dead(net.replace(nodes=nodes, edges=edges))
