"""Rademacher complexity: exact enumeration, closed-form bounds, search lower bounds.

Every value here uses one definition, E_xi (1/m) sup_f |sum_i xi_i f(x_i)|
with xi uniform on {-1, +1}**m.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from .norms import INF, NormParams, dual_exponent

DEFINITION = "E_xi (1/m) sup_f |sum_i xi_i f(x_i)|"
MAX_EXACT_M = 24
MAX_SEARCH_M = 16
MC_DRAWS = 100_000

METHODS = (
    "exact-enum",
    "closed-form-linear",
    "upper-bound-thm1",
    "upper-bound-cor2",
    "upper-bound-antisym",
    "upper-bound-linear-lemma",
    "upper-bound-path",
    "opt-lower-bound",
    "monte-carlo",
)


@dataclass(frozen=True)
class RademacherReport:
    value: float
    method: str
    seed: int | None = None
    stderr: float | None = None
    details: dict = field(default_factory=dict)
    definition: str = DEFINITION

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"report value must be finite and >= 0, got {self.value}")

    def to_dict(self) -> dict:
        out = {"value": self.value, "method": self.method, "definition": self.definition}
        if self.seed is not None:
            out["seed"] = self.seed
        if self.stderr is not None:
            out["stderr"] = self.stderr
        if self.details:
            out["details"] = self.details
        return out


def _as_points(S) -> np.ndarray:
    X = np.atleast_2d(np.asarray(S, dtype=float))
    if X.shape[0] < 1:
        raise ValueError("need at least one sample point")
    return X


def sign_vectors(m: int, start: int = 0, stop: int | None = None, half: bool = False) -> np.ndarray:
    """Rows of {-1,+1}**m for integer codes in [start, stop), bit j -> coordinate j.

    With ``half`` the first coordinate is pinned to +1 (codes range over
    2**(m-1)); the other half are negations and give identical sups.
    """
    free = m - 1 if half else m
    stop = 2**free if stop is None else stop
    codes = np.arange(start, stop, dtype=np.int64)
    bits = (codes[:, None] >> np.arange(free, dtype=np.int64)) & 1
    signs = 1.0 - 2.0 * bits
    if half:
        signs = np.hstack([np.ones((signs.shape[0], 1)), signs])
    return signs


def _chunks(total: int, size: int) -> list[tuple[int, int]]:
    return [(a, min(a + size, total)) for a in range(0, total, size)]


def exact_rademacher_hull(vertices) -> RademacherReport:
    """Complexity of conv(vertices), each vertex an evaluation vector in R^m.

    A linear functional's sup over a polytope sits at a vertex, so the
    per-sign-vector sup is max_j |<xi, v_j>|.
    """
    V = _as_points(vertices)
    m = V.shape[1]
    if m > MAX_EXACT_M:
        raise ValueError(f"m={m} exceeds the enumeration cap {MAX_EXACT_M}")
    total = 0.0
    for a, b in _chunks(2**m, 1 << 16):
        xi = sign_vectors(m, a, b)
        total += float(np.abs(xi @ V.T).max(axis=1).sum())
    n = 2**m
    return RademacherReport(
        total / (n * m), "exact-enum",
        details={"sup_total": total, "num_sign_vectors": n, "m": m},
    )


def _dual_norm_rows(A: np.ndarray, p: float) -> np.ndarray:
    ps = dual_exponent(p)
    if ps == INF:
        return np.abs(A).max(axis=1)
    return np.sum(np.abs(A) ** ps, axis=1) ** (1.0 / ps)


def linear_rademacher_exact(S, p: float, gamma: float = 1.0, seed: int | None = None,
                            draws: int = MC_DRAWS) -> RademacherReport:
    """gamma * E_xi (1/m) ||sum_i xi_i x_i||_{p*}, the class {x -> <w,x> : ||w||_p <= gamma}.

    Exact enumeration up to MAX_EXACT_M points, Monte Carlo (with standard
    error) beyond that.
    """
    X = _as_points(S)
    m = X.shape[0]
    if m <= MAX_EXACT_M:
        n = 2 ** (m - 1)
        acc = 0.0
        for a, b in _chunks(n, 1 << 15):
            acc += math.fsum(_dual_norm_rows(sign_vectors(m, a, b, half=True) @ X, p))
        return RademacherReport(gamma * acc / (n * m), "closed-form-linear",
                                details={"enumerated": True, "m": m})
    if seed is None:
        raise ValueError("Monte Carlo estimation needs a seed")
    rng = np.random.default_rng(seed)
    vals = np.empty(draws)
    for a, b in _chunks(draws, 1 << 14):
        xi = rng.choice([-1.0, 1.0], size=(b - a, m))
        vals[a:b] = _dual_norm_rows(xi @ X, p)
    vals *= gamma / m
    return RademacherReport(float(vals.mean()), "monte-carlo", seed=seed,
                            stderr=float(vals.std(ddof=1) / math.sqrt(draws)),
                            details={"draws": draws, "m": m})


def _linear_constant(p: float, D: int) -> float:
    """min{p*, 4 log(2D)}."""
    return min(dual_exponent(p), 4.0 * math.log(2 * D))


def linear_bound_forms(X: np.ndarray, p: float, gamma: float) -> dict[str, float]:
    """All closed-form linear-class bounds valid at this p, keyed by form."""
    if p < 1:
        raise ValueError("linear bounds need p >= 1")
    m, D = X.shape
    ps = dual_exponent(p)
    max_dual = float(_dual_norm_rows(X, p).max())
    forms = {}
    if p <= 2:
        forms["linear-p<=2"] = math.sqrt(gamma**2 * _linear_constant(p, D) * max_dual**2 / m)
    else:
        col = np.sqrt(np.sum(X**2, axis=0))
        x2ps = float(np.sum(col**ps) ** (1.0 / ps))
        forms["linear-p>2-matrix"] = math.sqrt(2.0) * gamma * x2ps / m
        forms["linear-p>2-max"] = math.sqrt(2.0) * gamma * max_dual / m ** (1.0 / p)
    return forms


def linear_rademacher_bound(S, p: float, gamma: float = 1.0) -> RademacherReport:
    """Closed-form upper bounds for l_p-bounded linear predictors; the tightest is the value."""
    X = _as_points(S)
    forms = linear_bound_forms(X, p, gamma)
    return RademacherReport(min(forms.values()), "upper-bound-linear-lemma",
                            details={"forms": forms})


def width_factor(d: int, H: int, params: NormParams) -> float:
    """(2 H^[1/p* - 1/q]_+)^(d-1)."""
    excess = max(1.0 - 1.0 / params.p - params.inv_q, 0.0)
    return (2.0 * H**excess) ** (d - 1)


def network_rademacher_bound(d: int, H: int, p: float, q: float, value: float, S,
                             which: str = "gamma", form: str = "auto") -> RademacherReport:
    """Upper bounds for depth-d, width-H relu nets with gamma_pq (or mu_pq) <= value.

    ``form`` is "sized" (width-dependent), "size-free" (width-free, needs q <= p*)
    or "auto" (tightest applicable). Each form is evaluated with the exact
    unit-norm linear complexity when m is small enough to enumerate, and
    with the closed-form linear bounds otherwise; all evaluations are kept
    in ``details``.
    """
    params = NormParams(p, q)
    if d < 1:
        raise ValueError("condition violated: d >= 1")
    if H < 1:
        raise ValueError("condition violated: H >= 1")
    if which not in ("gamma", "mu"):
        raise ValueError("which must be 'gamma' or 'mu'")
    if value < 0:
        raise ValueError("condition violated: norm bound >= 0")
    X = _as_points(S)
    m = X.shape[0]
    ps = params.p_star
    size_free_ok = params.q <= ps
    if form == "size-free" and not size_free_ok:
        raise ValueError(f"condition violated: q <= p* (q={params.q}, p*={ps})")
    if form not in ("auto", "sized", "size-free"):
        raise ValueError(f"unknown form {form!r}")

    d_q = d ** params.inv_q
    fronts = {}
    if form in ("auto", "sized"):
        if which == "gamma":
            fronts["sized"] = value * width_factor(d, H, params)
        else:
            excess = max(1.0 - 1.0 / params.p - params.inv_q, 0.0)
            fronts["sized"] = value**d * (2.0 * H**excess / d_q) ** (d - 1)
    if form in ("auto", "size-free") and size_free_ok:
        if which == "gamma":
            fronts["size-free"] = value * 2.0 ** (d - 1)
        else:
            fronts["size-free"] = (2.0 * value / d_q) ** d

    linear = dict(linear_bound_forms(X, p, 1.0))
    if m <= MAX_EXACT_M:
        linear["exact"] = linear_rademacher_exact(X, p, 1.0).value
    evaluations = {
        f"{name}/{lin}": front * lv
        for name, front in fronts.items()
        for lin, lv in linear.items()
    }
    best = min(evaluations, key=evaluations.get)
    method = "upper-bound-cor2" if best.startswith("size-free") else "upper-bound-thm1"
    return RademacherReport(
        evaluations[best], method,
        details={"front_factors": fronts, "linear": linear, "evaluations": evaluations,
                 "selected": best, "which": which, "d": d, "H": H, "params": params.to_dict()},
    )


def antisym_bound(d: int, mu: float, S) -> RademacherReport:
    """sqrt(4 mu^(2d) log(2D) max||x||_inf^2 / m) for per-unit l_1 bounded nets
    with an odd 1-Lipschitz activation. No 4^(d-1) factor."""
    if d < 1 or mu < 0:
        raise ValueError("need d >= 1 and mu >= 0")
    X = _as_points(S)
    m, D = X.shape
    sup = float(np.abs(X).max())
    val = math.sqrt(4.0 * mu ** (2 * d) * math.log(2 * D) * sup**2 / m)
    return RademacherReport(val, "upper-bound-antisym",
                            details={"note": "assumes sigma(-z) = -sigma(z); the [0,1] ramp is not odd"})


def path_norm_bound(d: int, phi: float, S) -> RademacherReport:
    """sqrt(4^(d-1) phi^2 4 log(2D) max||x||_inf^2 / m) for any depth-d DAG with phi_1 <= phi."""
    X = _as_points(S)
    m, D = X.shape
    sup = float(np.abs(X).max())
    val = math.sqrt(4.0 ** (d - 1) * phi**2 * 4.0 * math.log(2 * D) * sup**2 / m)
    return RademacherReport(val, "upper-bound-path")


# Optimization lower bound.

@dataclass(frozen=True)
class NetClass:
    """Depth-d, width-H relu layered nets with gamma_pq(W) <= gamma_cap."""

    d: int
    H: int
    params: NormParams
    gamma_cap: float


def _batched_group_norm(W: np.ndarray, params: NormParams) -> np.ndarray:
    """Group norm of each matrix in a (B, rows, cols) stack."""
    A = np.abs(W)
    top = A.max(axis=(1, 2))
    safe = np.where(top > 0, top, 1.0)
    A = A / safe[:, None, None]
    rows = np.sum(A**params.p, axis=2) ** (1.0 / params.p)
    if params.q == INF:
        g = rows.max(axis=1)
    else:
        g = np.sum(rows**params.q, axis=1) ** (1.0 / params.q)
    return g * top


def _forward_batch(Ws, X):
    """Returns pre-activations and activations per layer; output is (B, m)."""
    acts = [np.broadcast_to(X.T, (Ws[0].shape[0],) + X.T.shape)]
    pres = []
    for W in Ws[:-1]:
        z = W @ acts[-1]
        pres.append(z)
        acts.append(np.maximum(z, 0.0))
    out = (Ws[-1] @ acts[-1])[:, 0, :]
    return out, pres, acts


def _objective(Ws, X, xi):
    out, pres, acts = _forward_batch(Ws, X)
    return np.einsum("bm,bm->b", out, xi), pres, acts


def _gradient(Ws, xi, s, pres, acts):
    g = (np.sign(s)[:, None] * xi)[:, None, :]  # (B, 1, m)
    grads = [None] * len(Ws)
    for k in range(len(Ws) - 1, -1, -1):
        grads[k] = g @ np.swapaxes(acts[k], 1, 2)
        if k:
            g = (np.swapaxes(Ws[k], 1, 2) @ g) * (pres[k - 1] > 0)
    return grads


def _project(Ws, cls: NetClass):
    """Rescale every layer to norm cap**(1/d); homogeneity keeps the function's shape."""
    target = cls.gamma_cap ** (1.0 / cls.d)
    out = []
    for W in Ws:
        n = _batched_group_norm(W, cls.params)
        s = np.where(n > 0, target / np.where(n > 0, n, 1.0), 0.0)
        out.append(W * s[:, None, None])
    return out


def _best_output_layer(Ws, X, xi, cls: NetClass):
    """Exact maximizer of |sum xi_i f(x_i)| over the output row, lower layers fixed."""
    _, _, acts = _forward_batch(Ws, X)
    a = np.einsum("bhm,bm->bh", acts[-1], xi)
    lower = np.ones(a.shape[0])
    for W in Ws[:-1]:
        lower *= _batched_group_norm(W, cls.params)
    budget = np.where(lower > 0, cls.gamma_cap / np.where(lower > 0, lower, 1.0), 0.0)
    p = cls.params.p
    if p == 1.0:
        w = np.zeros_like(a)
        j = np.argmax(np.abs(a), axis=1)
        rows = np.arange(a.shape[0])
        w[rows, j] = np.sign(a[rows, j])
    else:
        ps = dual_exponent(p)
        top = np.abs(a).max(axis=1, keepdims=True)
        u = np.abs(a) / np.where(top > 0, top, 1.0)
        w = np.sign(a) * u ** (ps - 1.0)
        norm = np.sum(np.abs(w) ** p, axis=1) ** (1.0 / p)
        w = w / np.where(norm > 0, norm, 1.0)[:, None]
    return Ws[:-1] + [(budget[:, None] * w)[:, None, :]]


def _search_chunk(cls: NetClass, X: np.ndarray, xi: np.ndarray, restarts: int, steps: int,
                  rng: np.random.Generator) -> np.ndarray:
    """Best |sum xi f| found per sign vector in the chunk."""
    n_xi, m = xi.shape
    D = X.shape[1]
    dims = [D] + [cls.H] * (cls.d - 1) + [1]
    B = n_xi * restarts
    XI = np.repeat(xi, restarts, axis=0)
    Ws = [rng.standard_normal((B, dims[k + 1], dims[k])) for k in range(cls.d)]
    Ws = _best_output_layer(_project(Ws, cls), X, XI, cls)
    s, pres, acts = _objective(Ws, X, XI)
    best = np.abs(s)
    scale = cls.gamma_cap ** (1.0 / cls.d)
    for t in range(steps):
        eta = 0.5 * 0.9**t * scale
        if t % 2 == 0:
            grads = _gradient(Ws, XI, s, pres, acts)
            dirs = [G + 0.1 * np.linalg.norm(G, axis=(1, 2), keepdims=True)
                    * rng.standard_normal(G.shape) / math.sqrt(G[0].size) for G in grads]
        else:
            dirs = [rng.standard_normal(W.shape) for W in Ws]
        dirs = [Z / np.maximum(np.linalg.norm(Z, axis=(1, 2), keepdims=True), 1e-300)
                for Z in dirs]
        cand = _project([W + eta * Z for W, Z in zip(Ws, dirs)], cls)
        cand = _best_output_layer(cand, X, XI, cls)
        cs, cpres, cacts = _objective(cand, X, XI)
        better = np.abs(cs) > best
        if better.any():
            sel = better[:, None, None]
            Ws = [np.where(sel, C, W) for C, W in zip(cand, Ws)]
            s = np.where(better, cs, s)
            best = np.abs(s)
            pres = [np.where(sel, C, P) for C, P in zip(cpres, pres)]
            acts = [acts[0]] + [np.where(sel, C, A) for C, A in zip(cacts[1:], acts[1:])]
    return best.reshape(n_xi, restarts).max(axis=1)


def empirical_rademacher_lower(cls: NetClass, S, restarts: int = 32, steps: int = 200,
                               seed: int = 0, workers: int = 1,
                               chunk_size: int = 64) -> RademacherReport:
    """Lower bound on the class complexity by multi-restart local search.

    For each sign vector the sup is approached from inside the class
    (every candidate is rescaled onto gamma_pq = cap), so the average of the
    best values found never exceeds the true complexity. Sign vectors are
    split into fixed chunks, each with its own seed stream, so the result
    is identical for any number of workers.
    """
    X = _as_points(S)
    m = X.shape[0]
    if m > MAX_SEARCH_M:
        raise ValueError(f"m={m} exceeds the search cap {MAX_SEARCH_M}")
    if cls.d < 1 or cls.H < 1:
        raise ValueError("need d >= 1 and H >= 1")
    details = {"restarts": restarts, "steps": steps, "d": cls.d, "H": cls.H,
               "gamma_cap": cls.gamma_cap, "params": cls.params.to_dict()}
    if cls.gamma_cap == 0.0:
        return RademacherReport(0.0, "opt-lower-bound", seed=seed, details=details)
    n = 2 ** (m - 1)
    spans = _chunks(n, chunk_size)
    root = np.random.SeedSequence(seed)
    streams = root.spawn(len(spans))

    def run(i):
        a, b = spans[i]
        rng = np.random.default_rng(streams[i])
        return _search_chunk(cls, X, sign_vectors(m, a, b, half=True), restarts, steps, rng)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(len(spans))))
    else:
        parts = [run(i) for i in range(len(spans))]
    vals = np.concatenate(parts)
    return RademacherReport(math.fsum(vals) / (n * m), "opt-lower-bound", seed=seed,
                            details=details)


# Unit-margin shattering.

@dataclass(frozen=True)
class ShatterCheck:
    margins: tuple[float, ...]
    tol: float

    @property
    def worst(self) -> float:
        return min(self.margins)

    @property
    def passed(self) -> bool:
        return all(mg >= 1.0 - self.tol for mg in self.margins)

    @property
    def failures(self) -> list[int]:
        return [i for i, mg in enumerate(self.margins) if mg < 1.0 - self.tol]


def shatter_check(builder: Callable[[np.ndarray], object], S,
                  labelings: str | Iterable = "all", tol: float = 1e-9) -> ShatterCheck:
    """Build a net per labeling and record min_i f(x_i) y_i.

    ``S`` is passed to the net as-is (include any bias coordinate).
    """
    from .constructions import all_labelings
    from .graph import forward

    X = _as_points(S)
    m = X.shape[0]
    if isinstance(labelings, str):
        if labelings != "all":
            raise ValueError("labelings must be 'all' or an iterable of sign vectors")
        if m > 16:
            raise ValueError("exhaustive labelings need |S| <= 16")
        labelings = all_labelings(m)
    margins = []
    for y in labelings:
        y = np.asarray(y, dtype=float)
        margins.append(float(np.min(forward(builder(y), X) * y)))
    return ShatterCheck(tuple(margins), tol)
