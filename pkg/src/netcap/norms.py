"""Magnitude measures: group norms mu and gamma, path norm, and nu."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .graph import Activation, AnyNet, GraphError, LayeredNet, Network, depth

INF = math.inf


def parse_exponent(value) -> float:
    if isinstance(value, str) and value.strip().lower() in {"inf", "infinity", "∞"}:
        return INF
    return float(value)


@dataclass(frozen=True)
class NormParams:
    """Group-norm exponents: ``p`` inside each unit, ``q`` across units."""

    p: float = 2.0
    q: float = 2.0

    def __post_init__(self):
        p, q = parse_exponent(self.p), parse_exponent(self.q)
        if not (1.0 <= p < INF):
            raise ValueError(f"p must satisfy 1 <= p < inf, got {p}")
        if not q >= 1.0:
            raise ValueError(f"q must satisfy q >= 1 (inf allowed), got {q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def p_star(self) -> float:
        return dual_exponent(self.p)

    @property
    def inv_q(self) -> float:
        return 0.0 if self.q == INF else 1.0 / self.q

    def to_dict(self) -> dict:
        q = "inf" if self.q == INF else self.q
        ps = "inf" if self.p_star == INF else self.p_star
        return {"p": self.p, "q": q, "p_star": ps}


def dual_exponent(p: float) -> float:
    if p == 1.0:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def lp_norm(v, p: float) -> float:
    """l_p norm scaled by the max entry so large p cannot overflow."""
    a = np.abs(np.asarray(v, dtype=float)).ravel()
    if a.size == 0:
        return 0.0
    top = a.max()
    if top == 0.0:
        return 0.0
    if p == INF:
        return float(top)
    if p == 1.0:
        return float(a.sum())
    return float(top * np.sum((a / top) ** p) ** (1.0 / p))


def group_norm(W, params: NormParams) -> float:
    """||W||_{p,q}: l_q over rows of the per-row l_p norms."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    rows = [lp_norm(r, params.p) for r in W]
    return lp_norm(rows, params.q)


def unit_norms(net: AnyNet, p: float) -> list[float]:
    """l_p norm of the incoming weight vector of every non-input node."""
    if isinstance(net, LayeredNet):
        return [lp_norm(r, p) for W in net.matrices for r in W]
    return [
        lp_norm([w for _, w in net.incoming[v]], p)
        for v, role in net.nodes
        if not role.startswith("input:")
    ]


def mu_pq(net: AnyNet, params: NormParams) -> float:
    return lp_norm(unit_norms(net, params.p), params.q)


def layer_norms(layered: LayeredNet, params: NormParams) -> list[float]:
    return [group_norm(W, params) for W in layered.matrices]


def log_gamma(layered: LayeredNet, params: NormParams) -> float:
    """log of the product of layer group norms; -inf when any layer is zero."""
    norms = layer_norms(layered, params)
    if min(norms) == 0.0:
        return -INF
    return float(math.fsum(math.log(n) for n in norms))


def _exp(x: float) -> float:
    """exp that saturates to inf instead of raising."""
    return math.exp(x) if x < 709.0 else float(np.exp(x)) if x < 710.0 else INF


def gamma_pq(layered: LayeredNet, params: NormParams) -> float:
    if not isinstance(layered, LayeredNet):
        raise TypeError("gamma_pq is defined for layered networks only")
    return _exp(log_gamma(layered, params))


def _log_path_mass(net: Network, p: float) -> float:
    """log of the sum over input->output paths of prod |w|^p, by DP."""
    logpsi = {n: -INF for n, _ in net.nodes}
    for n in net.input_nodes:
        logpsi[n] = 0.0
    for v in net.topological_order:
        inc = net.incoming[v]
        if not inc:
            continue
        terms = [
            p * math.log(abs(w)) + logpsi[u]
            for u, w in inc
            if w != 0.0 and logpsi[u] > -INF
        ]
        if terms:
            logpsi[v] = float(np.logaddexp.reduce(terms)) if len(terms) > 1 else terms[0]
    return logpsi[net.output_node]


def path_norm(net: AnyNet, p: float) -> float:
    """phi_p: l_p aggregation over all paths of the per-path weight products."""
    if isinstance(net, LayeredNet):
        from .graph import to_dag

        net = to_dag(net)
    if p < 1.0:
        raise ValueError("p must be >= 1")
    return _exp(_log_path_mass(net, p) / p)


def path_norm_bruteforce(net: Network, p: float) -> float:
    """Literal sum over enumerated paths. Exponential; for cross-checks."""
    from .graph import iter_paths

    total = 0.0
    for path in iter_paths(net):
        total += math.prod(abs(w) ** p for _, _, w in path)
    return total ** (1.0 / p)


def nu_p(layered: LayeredNet, p: float) -> float:
    """l_1 norm of the output weights once hidden units have unit l_p rows.

    Rows that are identically zero compute the zero function, so their
    output weight is dropped.
    """
    if not isinstance(layered, LayeredNet) or layered.depth != 2:
        raise GraphError("nu_p needs a depth-2 layered network")
    if layered.activation is not Activation.RELU:
        raise GraphError("nu_p needs relu activation")
    W1, W2 = layered.matrices
    rows = np.array([lp_norm(r, p) for r in W1])
    return float(np.sum(np.abs(W2[0]) * rows))


def per_unit_gamma(net: AnyNet, p: float) -> float:
    """gamma_{p,inf} of a layered net or of a sublayered DAG."""
    from .graph import to_layered

    layered = net if isinstance(net, LayeredNet) else to_layered(net)
    return gamma_pq(layered, NormParams(p, INF))


@dataclass(frozen=True)
class NormReport:
    mu: float
    phi: float
    depth: int
    params: NormParams
    gamma: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["params"] = self.params.to_dict()
        if self.gamma is None:
            out.pop("gamma")
        return out


def norm_report(net: AnyNet, params: NormParams) -> NormReport:
    return NormReport(
        mu=mu_pq(net, params),
        phi=path_norm(net, params.p),
        depth=depth(net),
        params=params,
        gamma=gamma_pq(net, params) if isinstance(net, LayeredNet) else None,
    )
