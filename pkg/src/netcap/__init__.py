"""Norm-based capacity control for feedforward ReLU networks."""

from .graph import Activation, GraphError, LayeredNet, Network, forward, to_dag, to_layered
from .norms import NormParams, gamma_pq, mu_pq, nu_p, path_norm

__all__ = [
    "Activation", "GraphError", "LayeredNet", "Network", "NormParams",
    "forward", "gamma_pq", "mu_pq", "nu_p", "path_norm", "to_dag", "to_layered",
]
__version__ = "0.1.0"
