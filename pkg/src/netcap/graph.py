"""Feedforward ReLU networks as weighted DAGs and as layered matrix stacks."""

from __future__ import annotations

import heapq
import json
from collections import defaultdict
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Iterable, Sequence, Union

import numpy as np


class GraphError(ValueError):
    """Raised for structurally invalid networks or incompatible inputs."""


class Activation(str, Enum):
    RELU = "relu"
    RAMP = "ramp"
    IDENTITY = "identity"

    def __call__(self, z):
        if self is Activation.RELU:
            return np.maximum(z, 0.0)
        if self is Activation.RAMP:
            return np.minimum(np.maximum(z, 0.0), 1.0)
        return z


INPUT_PREFIX = "input:"


def _input_index(role: str) -> int | None:
    if role.startswith(INPUT_PREFIX):
        return int(role[len(INPUT_PREFIX):])
    return None


@dataclass(frozen=True)
class Network:
    """A single-output feedforward network on a DAG.

    ``nodes`` holds ``(node_id, role)`` pairs where role is ``"input:i"``,
    ``"hidden"`` or ``"output"``; ``edges`` holds ``(src, dst, weight)``.
    Hidden nodes apply ``activation``; the output node is always linear.
    With ``bias_input`` set, input coordinate 0 is pinned to 1.
    """

    num_inputs: int
    nodes: tuple[tuple[int, str], ...]
    edges: tuple[tuple[int, int, float], ...]
    activation: Activation = Activation.RELU
    bias_input: bool = False

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple((int(n), str(r)) for n, r in self.nodes))
        object.__setattr__(
            self, "edges", tuple((int(u), int(v), float(w)) for u, v, w in self.edges)
        )
        object.__setattr__(self, "activation", Activation(self.activation))
        self._validate()

    def _validate(self):
        ids = [n for n, _ in self.nodes]
        if len(set(ids)) != len(ids):
            raise GraphError("duplicate node ids")
        seen_inputs = set()
        outputs = 0
        for n, role in self.nodes:
            idx = _input_index(role)
            if idx is not None:
                if not 0 <= idx < self.num_inputs or idx in seen_inputs:
                    raise GraphError(f"bad input role {role!r} on node {n}")
                seen_inputs.add(idx)
            elif role == "output":
                outputs += 1
            elif role != "hidden":
                raise GraphError(f"unknown role {role!r}")
        if len(seen_inputs) != self.num_inputs:
            raise GraphError("every input coordinate needs exactly one input node")
        if outputs != 1:
            raise GraphError(f"expected exactly one output node, got {outputs}")
        roles = dict(self.nodes)
        pairs = set()
        for u, v, w in self.edges:
            if u not in roles or v not in roles:
                raise GraphError(f"edge ({u},{v}) references a missing node")
            if (u, v) in pairs:
                raise GraphError(f"duplicate edge ({u},{v})")
            if not np.isfinite(w):
                raise GraphError(f"non-finite weight on edge ({u},{v})")
            pairs.add((u, v))
            if roles[v].startswith(INPUT_PREFIX):
                raise GraphError(f"input node {v} has an incoming edge")
            if roles[u] == "output":
                raise GraphError(f"output node {u} has an outgoing edge")
        self.topological_order  # raises on cycles

    # structural queries

    @cached_property
    def roles(self) -> dict[int, str]:
        return dict(self.nodes)

    @cached_property
    def output_node(self) -> int:
        return next(n for n, r in self.nodes if r == "output")

    @cached_property
    def input_nodes(self) -> list[int]:
        """Input node ids ordered by coordinate index."""
        pairs = [(_input_index(r), n) for n, r in self.nodes if r.startswith(INPUT_PREFIX)]
        return [n for _, n in sorted(pairs)]

    @cached_property
    def hidden_nodes(self) -> list[int]:
        return sorted(n for n, r in self.nodes if r == "hidden")

    @cached_property
    def incoming(self) -> dict[int, list[tuple[int, float]]]:
        inc = defaultdict(list)
        for u, v, w in self.edges:
            inc[v].append((u, w))
        return {n: sorted(inc.get(n, [])) for n, _ in self.nodes}

    @cached_property
    def outgoing(self) -> dict[int, list[tuple[int, float]]]:
        out = defaultdict(list)
        for u, v, w in self.edges:
            out[u].append((v, w))
        return {n: sorted(out.get(n, [])) for n, _ in self.nodes}

    @cached_property
    def topological_order(self) -> list[int]:
        """Kahn's algorithm, smallest ready node id first."""
        indeg = {n: 0 for n, _ in self.nodes}
        succ = defaultdict(list)
        for u, v, _ in self.edges:
            indeg[v] += 1
            succ[u].append(v)
        ready = [n for n, k in indeg.items() if k == 0]
        heapq.heapify(ready)
        order = []
        while ready:
            n = heapq.heappop(ready)
            order.append(n)
            for v in succ[n]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    heapq.heappush(ready, v)
        if len(order) != len(indeg):
            raise GraphError("graph contains a cycle")
        return order

    @cached_property
    def depth_from_inputs(self) -> dict[int, int]:
        """Longest path length from any input node (-1 if unreachable)."""
        dist = {n: (0 if r.startswith(INPUT_PREFIX) else -1) for n, r in self.nodes}
        for u in self.topological_order:
            if dist[u] < 0:
                continue
            for v, _ in self.outgoing[u]:
                dist[v] = max(dist[v], dist[u] + 1)
        return dist

    @cached_property
    def depth_to_output(self) -> dict[int, int]:
        """Longest path length to the output node (-1 if it cannot reach it)."""
        dist = {n: -1 for n, _ in self.nodes}
        dist[self.output_node] = 0
        for u in reversed(self.topological_order):
            for v, _ in self.outgoing[u]:
                if dist[v] >= 0:
                    dist[u] = max(dist[u], dist[v] + 1)
        return dist

    @property
    def next_id(self) -> int:
        return max(n for n, _ in self.nodes) + 1

    def replace(self, nodes=None, edges=None) -> "Network":
        return Network(
            num_inputs=self.num_inputs,
            nodes=self.nodes if nodes is None else nodes,
            edges=self.edges if edges is None else edges,
            activation=self.activation,
            bias_input=self.bias_input,
        )


@dataclass(frozen=True)
class LayeredNet:
    """Layered network ``W_d σ(W_{d-1} σ(... σ(W_1 x)))``.

    Row ``j`` of ``matrices[k]`` holds the incoming weights of unit ``j`` in
    layer ``k + 1``. The last matrix has a single row.
    """

    matrices: tuple[np.ndarray, ...]
    activation: Activation = Activation.RELU

    def __post_init__(self):
        mats = []
        for W in self.matrices:
            W = np.array(W, dtype=float, ndmin=2)
            if W.ndim != 2:
                raise GraphError("layer weights must be 2-D")
            if not np.all(np.isfinite(W)):
                raise GraphError("non-finite layer weight")
            W.setflags(write=False)
            mats.append(W)
        if not mats:
            raise GraphError("a layered net needs at least one matrix")
        for a, b in zip(mats, mats[1:]):
            if b.shape[1] != a.shape[0]:
                raise GraphError(f"incompatible layer shapes {a.shape} -> {b.shape}")
        if mats[-1].shape[0] != 1:
            raise GraphError("the last layer must have a single output row")
        object.__setattr__(self, "matrices", tuple(mats))
        object.__setattr__(self, "activation", Activation(self.activation))

    @property
    def depth(self) -> int:
        return len(self.matrices)

    @property
    def num_inputs(self) -> int:
        return self.matrices[0].shape[1]

    @property
    def widths(self) -> list[int]:
        return [W.shape[0] for W in self.matrices[:-1]]

    def __eq__(self, other):
        if not isinstance(other, LayeredNet):
            return NotImplemented
        return (
            self.activation == other.activation
            and self.depth == other.depth
            and all(a.shape == b.shape and np.array_equal(a, b)
                    for a, b in zip(self.matrices, other.matrices))
        )

    __hash__ = None


AnyNet = Union[Network, LayeredNet]


def forward(net: AnyNet, x) -> float | np.ndarray:
    """Evaluate the network on one input vector or a batch of row vectors."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != net.num_inputs:
        raise GraphError(f"expected inputs of length {net.num_inputs}, got {X.shape[1]}")
    if isinstance(net, LayeredNet):
        out = _forward_layered(net, X)
    else:
        if net.bias_input and not np.all(X[:, 0] == 1.0):
            raise GraphError("bias coordinate x[0] must equal 1")
        out = _forward_dag(net, X)
    return float(out[0]) if single else out


def _forward_layered(net: LayeredNet, X: np.ndarray) -> np.ndarray:
    h = X.T
    for W in net.matrices[:-1]:
        h = net.activation(W @ h)
    return (net.matrices[-1] @ h)[0]


def _forward_dag(net: Network, X: np.ndarray) -> np.ndarray:
    values: dict[int, np.ndarray] = {}
    for n, idx in zip(net.input_nodes, range(net.num_inputs)):
        values[n] = X[:, idx]
    zero = np.zeros(X.shape[0])
    for v in net.topological_order:
        if v in values:
            continue
        z = zero.copy()
        for u, w in net.incoming[v]:
            z += w * values[u]
        values[v] = z if v == net.output_node else net.activation(z)
    return values[net.output_node]


def depth(net: AnyNet) -> int:
    """Length of the longest directed path (number of layers)."""
    if isinstance(net, LayeredNet):
        return net.depth
    dist = net.depth_from_inputs
    return max(dist.values())


def width(net: AnyNet) -> int:
    """Maximum in-degree over all vertices."""
    if isinstance(net, LayeredNet):
        return max(W.shape[1] for W in net.matrices)
    return max((len(v) for v in net.incoming.values()), default=0)


def topological_order(net: Network) -> list[int]:
    return list(net.topological_order)


def to_dag(layered: LayeredNet, bias_input: bool = False) -> Network:
    """Materialize every layer entry, zeros included, as a DAG edge."""
    D = layered.num_inputs
    nodes = [(i, f"input:{i}") for i in range(D)]
    prev = list(range(D))
    next_id = D
    edges = []
    for k, W in enumerate(layered.matrices):
        last = k == layered.depth - 1
        cur = list(range(next_id, next_id + W.shape[0]))
        next_id += W.shape[0]
        nodes += [(n, "output" if last else "hidden") for n in cur]
        for j, v in enumerate(cur):
            for i, u in enumerate(prev):
                edges.append((u, v, W[j, i]))
        prev = cur
    return Network(D, tuple(nodes), tuple(edges), layered.activation, bias_input)


def to_layered(net: Network) -> LayeredNet:
    """Recover layer matrices from a sublayered DAG.

    Nodes go to layer ``depth_from_inputs``; missing edges become zeros.
    Every edge must join consecutive layers and the output must sit at the
    deepest layer.
    """
    dist = net.depth_from_inputs
    d = dist[net.output_node]
    if d < 1:
        raise GraphError("output node is not reachable from the inputs")
    layers: list[list[int]] = [[] for _ in range(d + 1)]
    layers[0] = list(net.input_nodes)
    for n in net.hidden_nodes:
        if not 1 <= dist[n] < d:
            raise GraphError(f"node {n} does not fit in a layer of a depth-{d} net")
        layers[dist[n]].append(n)
    layers[d] = [net.output_node]
    pos = {n: (k, j) for k, layer in enumerate(layers) for j, n in enumerate(layer)}
    mats = [np.zeros((len(layers[k]), len(layers[k - 1]))) for k in range(1, d + 1)]
    for u, v, w in net.edges:
        (ku, ju), (kv, jv) = pos[u], pos[v]
        if kv != ku + 1:
            raise GraphError(f"edge ({u},{v}) skips a layer; layerize it first")
        mats[kv - 1][jv, ju] = w
    return LayeredNet(tuple(mats), net.activation)


# JSON round-trip. json writes floats with repr, which is exact for doubles.

def network_to_dict(net: Network) -> dict:
    return {
        "inputs": net.num_inputs,
        "bias_input": net.bias_input,
        "activation": net.activation.value,
        "nodes": [{"id": n, "role": r} for n, r in net.nodes],
        "edges": [{"src": u, "dst": v, "w": w} for u, v, w in net.edges],
    }


def network_from_dict(data: dict) -> Network:
    return Network(
        num_inputs=int(data["inputs"]),
        nodes=tuple((d["id"], d["role"]) for d in data["nodes"]),
        edges=tuple((e["src"], e["dst"], e["w"]) for e in data["edges"]),
        activation=data.get("activation", "relu"),
        bias_input=bool(data.get("bias_input", False)),
    )


def layered_to_dict(net: LayeredNet) -> dict:
    return {
        "activation": net.activation.value,
        "layers": [W.tolist() for W in net.matrices],
    }


def layered_from_dict(data: dict) -> LayeredNet:
    return LayeredNet(
        tuple(np.array(layer, dtype=float, ndmin=2) for layer in data["layers"]),
        data.get("activation", "relu"),
    )


def net_to_dict(net: AnyNet) -> dict:
    return layered_to_dict(net) if isinstance(net, LayeredNet) else network_to_dict(net)


def net_from_dict(data: dict) -> AnyNet:
    return layered_from_dict(data) if "layers" in data else network_from_dict(data)


def dumps(net: AnyNet) -> str:
    return json.dumps(net_to_dict(net), indent=1)


def loads(text: str) -> AnyNet:
    return net_from_dict(json.loads(text))


def load(path) -> AnyNet:
    with open(path) as fh:
        return net_from_dict(json.load(fh))


def save(net: AnyNet, path) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(net))
        fh.write("\n")


def random_layered(
    rng: np.random.Generator,
    depth: int,
    width: int | Sequence[int],
    num_inputs: int,
    activation: Activation = Activation.RELU,
    scale: float = 1.0,
) -> LayeredNet:
    """Gaussian weights; ``width`` may be one number or a per-hidden-layer list."""
    widths = [width] * (depth - 1) if np.isscalar(width) else list(width)
    dims = [num_inputs] + widths + [1]
    mats = tuple(scale * rng.standard_normal((dims[k + 1], dims[k])) for k in range(depth))
    return LayeredNet(mats, activation)


def random_dag(
    rng: np.random.Generator,
    num_inputs: int,
    num_hidden: int,
    max_edges: int | None = None,
    edge_prob: float = 0.5,
) -> Network:
    """Random live relu DAG with nodes in id order, pruned of dead nodes.

    Every hidden node receives at least one edge from an earlier node and
    sends at least one edge to a later node, so skip connections appear
    naturally.
    """
    D, n_h = num_inputs, num_hidden
    ids = list(range(D + n_h + 1))
    out = ids[-1]
    edges: dict[tuple[int, int], float] = {}

    def w():
        return float(rng.standard_normal())

    for h in range(D, D + n_h):
        edges[(int(rng.integers(0, h)), h)] = w()
    for h in range(D, D + n_h):
        edges[(h, int(rng.integers(h + 1, out + 1)))] = w()
    edges.setdefault((int(rng.integers(0, D)), out), w())
    for u in range(D + n_h):
        for v in range(max(u + 1, D), out + 1):
            if (u, v) not in edges and rng.random() < edge_prob:
                edges[(u, v)] = w()
    keys = sorted(edges)
    if max_edges is not None and len(keys) > max_edges:
        required = set()
        for h in range(D, D + n_h):
            required.add(next(k for k in keys if k[1] == h))
            required.add(next(k for k in keys if k[0] == h))
        optional = [k for k in keys if k not in required]
        rng.shuffle(optional)
        budget = max(max_edges - len(required), 0)
        keys = sorted(required | set(map(tuple, optional[:budget])))
    nodes = [(i, f"input:{i}") for i in range(D)]
    nodes += [(h, "hidden") for h in range(D, D + n_h)] + [(out, "output")]
    return Network(D, tuple(nodes), tuple((u, v, edges[(u, v)]) for u, v in keys))


def insert_passthrough(net: Network, src: int, dst: int) -> Network:
    """Replace edge src->dst by src->new (weight 1) and new->dst (old weight)."""
    new = net.next_id
    edges = []
    for u, v, w in net.edges:
        if (u, v) == (src, dst):
            edges += [(u, new, 1.0), (new, v, w)]
        else:
            edges.append((u, v, w))
    return net.replace(nodes=net.nodes + ((new, "hidden"),), edges=edges)


def edges_as_dict(net: Network) -> dict[tuple[int, int], float]:
    return {(u, v): w for u, v, w in net.edges}


def iter_paths(net: Network) -> Iterable[list[tuple[int, int, float]]]:
    """Every input->output path as a list of edges (exponential; small graphs only)."""
    target = net.output_node

    def walk(u, acc):
        if u == target:
            yield list(acc)
            return
        for v, w in net.outgoing[u]:
            acc.append((u, v, w))
            yield from walk(v, acc)
            acc.pop()

    for s in net.input_nodes:
        yield from walk(s, [])
