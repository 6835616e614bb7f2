"""Exponential random graphs on a handful of nodes, by exhaustive enumeration.

Graph codes are edge bitmasks over the upper-triangle pairs in row-major
order: bit ``p`` is set when pair ``p`` of ``np.triu_indices(n, 1)`` is an
edge.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp

from .graph import Graph, GraphError

MAX_EXHAUSTIVE_N = 7
OBSERVABLES = ("edges", "triangles", "three_chains")


def count_triangles(g: Graph) -> int:
    """Number of 3-cliques of the binarized graph."""
    b = (g.adj > 0).astype(np.int64)
    return int(np.trace(b @ b @ b) // 6)


def count_three_chains(g: Graph) -> int:
    """Paths on three nodes (two-stars), ``sum_i C(d_i, 2)``."""
    d = np.count_nonzero(g.adj, axis=1).astype(np.int64)
    return int(np.sum(d * (d - 1) // 2))


def code_to_graph(code: int, n: int) -> Graph:
    iu, ju = np.triu_indices(n, 1)
    bits = (int(code) >> np.arange(iu.size)) & 1
    a = np.zeros((n, n))
    a[iu[bits == 1], ju[bits == 1]] = 1.0
    return Graph(a + a.T)


def graph_to_code(g: Graph) -> int:
    iu, ju = np.triu_indices(g.n, 1)
    bits = g.adj[iu, ju] > 0
    return int(sum(1 << int(p) for p in np.flatnonzero(bits)))


def _adjacency_block(n: int, codes: np.ndarray) -> np.ndarray:
    """``(len(codes), n, n)`` adjacency stack for the given graph codes."""
    m = n * (n - 1) // 2
    iu, ju = np.triu_indices(n, 1)
    bits = ((codes[:, None] >> np.arange(m)) & 1).astype(np.int64)
    a = np.zeros((codes.size, n, n), dtype=np.int64)
    a[:, iu, ju] = bits
    a[:, ju, iu] = bits
    return a


def observable_table(n: int, observables: Sequence[str] = OBSERVABLES, chunk: int = 1 << 15) -> np.ndarray:
    """``(2^M, len(observables))`` counts for every graph code."""
    if n > MAX_EXHAUSTIVE_N:
        raise GraphError(f"exhaustive enumeration limited to n <= {MAX_EXHAUSTIVE_N}, got {n}")
    for name in observables:
        if name not in OBSERVABLES:
            raise ValueError(f"unknown observable {name!r}")
    total = 1 << (n * (n - 1) // 2)
    out = np.empty((total, len(observables)), dtype=np.int64)
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total))
        a = _adjacency_block(n, codes)
        deg = a.sum(axis=2)
        for j, name in enumerate(observables):
            if name == "edges":
                out[codes, j] = deg.sum(axis=1) // 2
            elif name == "triangles":
                out[codes, j] = np.einsum("gij,gjk,gki->g", a, a, a) // 6
            else:
                out[codes, j] = np.sum(deg * (deg - 1) // 2, axis=1)
    return out


@dataclass(frozen=True)
class ErgEnsemble:
    """``P(G) = exp(-sum_i lambda_i xi_i(G)) / Z`` over all graphs on ``n`` nodes."""

    n: int
    lambdas: tuple[float, ...]
    observables: tuple[str, ...] = ("triangles", "three_chains")

    def __post_init__(self):
        if len(self.lambdas) != len(self.observables):
            raise ValueError("need one coupling per observable")
        if self.n > MAX_EXHAUSTIVE_N:
            raise GraphError(f"exhaustive enumeration limited to n <= {MAX_EXHAUSTIVE_N}, got {self.n}")
        if self.n < 2:
            raise GraphError("need at least two nodes")


def erg_log_probabilities(ens: ErgEnsemble) -> tuple[np.ndarray, np.ndarray]:
    """Log-probabilities and observable table, both indexed by graph code."""
    xi = observable_table(ens.n, ens.observables)
    energy = xi @ np.asarray(ens.lambdas, dtype=float)
    logp = -energy - logsumexp(-energy)
    return logp, xi


def erg_distribution(ens: ErgEnsemble) -> dict[int, float]:
    """Map from graph code to probability."""
    logp, _ = erg_log_probabilities(ens)
    return dict(enumerate(np.exp(logp).tolist()))


def erg_expectations(ens: ErgEnsemble) -> np.ndarray:
    """``<xi_i>`` under the ensemble, in the order of ``ens.observables``."""
    logp, xi = erg_log_probabilities(ens)
    return np.exp(logp) @ xi


def fixture_graphs() -> dict[str, Graph]:
    """Six-node minimal-energy configurations with unit weights."""

    def clique(nodes):
        return [(u, v) for i, u in enumerate(nodes) for v in nodes[i + 1:]]

    return {
        "TwoTriangles": Graph.from_edges(6, clique([0, 1, 2]) + clique([3, 4, 5])),
        "K4PlusTwoIsolated": Graph.from_edges(6, clique([0, 1, 2, 3])),
        "K5PlusOneIsolated": Graph.from_edges(6, clique([0, 1, 2, 3, 4])),
    }
