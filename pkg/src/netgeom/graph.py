"""Graph representation, random-graph generators and degree statistics.

All graphs are simple, undirected and weighted, stored as a dense symmetric
adjacency matrix with a zero diagonal. Generators take an explicit integer
seed and are deterministic for a given seed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.optimize import brentq
from scipy.sparse.csgraph import connected_components
from scipy.special import gammaln


class GraphError(ValueError):
    """Invalid graph, degree sequence or generator input."""


class GenerationError(RuntimeError):
    """A randomized generator ran out of retries."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Simple undirected weighted graph on nodes ``0..n-1``.

    Parameters
    ----------
    adj : array_like
        Symmetric ``n x n`` matrix of non-negative edge weights with a
        zero diagonal. An entry is an edge iff it is strictly positive.
    """

    adj: np.ndarray

    def __post_init__(self):
        a = np.array(self.adj, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError(f"adjacency must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise GraphError("adjacency has non-finite entries")
        if np.any(a < 0):
            raise GraphError("negative edge weights are not allowed")
        if np.any(np.diag(a) != 0):
            raise GraphError("self-loops are not allowed (non-zero diagonal)")
        if not np.array_equal(a, a.T):
            raise GraphError("adjacency must be symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "adj", a)

    @classmethod
    def empty(cls, n: int) -> "Graph":
        return cls(np.zeros((n, n)))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[float]]) -> "Graph":
        """Build from ``(u, v)`` or ``(u, v, w)`` tuples, default weight 1."""
        a = np.zeros((n, n))
        for e in edges:
            u, v = int(e[0]), int(e[1])
            w = float(e[2]) if len(e) > 2 else 1.0
            if u == v:
                raise GraphError(f"self-loop at node {u}")
            a[u, v] = a[v, u] = w
        return cls(a)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def k(self) -> int:
        """Number of edges."""
        return int(np.count_nonzero(np.triu(self.adj, 1)))

    def edges(self) -> list[tuple[int, int, float]]:
        iu, ju = np.nonzero(np.triu(self.adj, 1))
        return [(int(i), int(j), float(self.adj[i, j])) for i, j in zip(iu, ju)]

    def binarized(self) -> "Graph":
        return Graph((self.adj > 0).astype(float))

    def permuted(self, perm: Sequence[int]) -> "Graph":
        """Relabel so that new node ``i`` is old node ``perm[i]``."""
        p = np.asarray(perm)
        return Graph(self.adj[np.ix_(p, p)])

    def components(self) -> list[np.ndarray]:
        """Connected components as sorted index arrays, in order of first node."""
        if self.n == 0:
            return []
        _, labels = connected_components(self.adj > 0, directed=False)
        order = []
        seen = {}
        for i, lab in enumerate(labels):
            if lab not in seen:
                seen[lab] = len(order)
                order.append([])
            order[seen[lab]].append(i)
        return [np.array(c) for c in order]

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return self.adj.shape == other.adj.shape and np.array_equal(self.adj, other.adj)

    def __repr__(self):
        return f"Graph(n={self.n}, k={self.k})"


@dataclass(frozen=True)
class DegreeSequence:
    degrees: tuple[int, ...]

    def __post_init__(self):
        d = tuple(int(x) for x in self.degrees)
        if any(x < 0 for x in d):
            raise GraphError("degrees must be non-negative")
        object.__setattr__(self, "degrees", d)

    @property
    def n(self) -> int:
        return len(self.degrees)

    @property
    def total(self) -> int:
        return sum(self.degrees)

    def is_graphical(self) -> bool:
        return is_graphical(self.degrees)

    def __len__(self):
        return len(self.degrees)

    def __iter__(self):
        return iter(self.degrees)


@dataclass(frozen=True)
class Constant:
    """Every edge gets weight ``r``."""

    r: float = 0.2

    def __post_init__(self):
        if not self.r > 0:
            raise GraphError("weight r must be positive")


@dataclass(frozen=True)
class Jittered:
    """Weight ``r + omega`` with ``omega ~ N(0, var)``, redrawn until positive."""

    r: float = 0.2
    var: float = 0.1

    def __post_init__(self):
        if not self.r > 0:
            raise GraphError("mean weight r must be positive")
        if self.var < 0:
            raise GraphError("variance must be non-negative")


WeightScheme = Union[Constant, Jittered]


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def is_graphical(degrees: Sequence[int]) -> bool:
    """Erdos-Gallai test for realizability as a simple graph."""
    d = sorted((int(x) for x in degrees), reverse=True)
    n = len(d)
    if any(x < 0 for x in d) or sum(d) % 2:
        return False
    if n and d[0] > n - 1:
        return False
    prefix = 0
    for k in range(1, n + 1):
        prefix += d[k - 1]
        tail = sum(min(x, k) for x in d[k:])
        if prefix > k * (k - 1) + tail:
            return False
    return True


def gen_uniform_random_graph(n: int, k: int, seed) -> Graph:
    """Uniform sample from all graphs on ``n`` nodes with exactly ``k`` edges."""
    m = n * (n - 1) // 2
    if n < 0 or not 0 <= k <= m:
        raise GraphError(f"edge count k={k} outside [0, {m}] for n={n}")
    rng = _rng(seed)
    iu, ju = np.triu_indices(n, 1)
    pick = rng.choice(m, size=k, replace=False)
    a = np.zeros((n, n))
    a[iu[pick], ju[pick]] = 1.0
    return Graph(a + a.T)


def gen_configuration_model(ds, seed, max_retries: int = 100_000) -> Graph:
    """Stub matching with whole-graph restart on any self-loop or multi-edge.

    Conditioning on a simple outcome makes the result uniform over the
    simple realizations of ``ds``.
    """
    degrees = np.asarray(tuple(ds), dtype=int)
    if degrees.sum() % 2:
        raise GraphError("degree sequence has odd sum")
    if not is_graphical(degrees):
        raise GraphError(f"degree sequence is not graphical: {tuple(degrees)}")
    n = len(degrees)
    rng = _rng(seed)
    stubs = np.repeat(np.arange(n), degrees)
    if stubs.size == 0:
        return Graph.empty(n)
    for _ in range(max_retries):
        rng.shuffle(stubs)
        u, v = stubs[0::2], stubs[1::2]
        if np.any(u == v):
            continue
        lo, hi = np.minimum(u, v), np.maximum(u, v)
        codes = lo * n + hi
        if np.unique(codes).size != codes.size:
            continue
        a = np.zeros((n, n))
        a[lo, hi] = 1.0
        return Graph(a + a.T)
    raise GenerationError(f"no simple realization after {max_retries} stub matchings")


def powerlaw_pmf(gamma: float, d_min: int, d_max: int, offset: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of ``P(d) ~ (d + offset)^-gamma`` on ``[d_min, d_max]``.

    ``offset = 0`` is the plain truncated power law.
    """
    if d_min < 1 or d_max < d_min:
        raise GraphError(f"empty degree support [{d_min}, {d_max}]")
    if d_min + offset <= 0:
        raise GraphError("offset must keep d + offset positive on the support")
    d = np.arange(d_min, d_max + 1)
    logw = -gamma * np.log(d + offset)
    w = np.exp(logw - logw.max())
    return d, w / w.sum()


def powerlaw_offset_for_mean(gamma: float, mean: float, d_min: int, d_max: int) -> float:
    """Offset such that the expected degree of :func:`powerlaw_pmf` equals ``mean``.

    The mean is increasing in the offset, from ``d_min`` (offset -> -d_min)
    towards the uniform mean.
    """

    def excess(s):
        d, p = powerlaw_pmf(gamma, d_min, d_max, s)
        return float(d @ p) - mean

    lo = -d_min + 1e-12
    if excess(lo) >= 0:
        raise GraphError(f"mean {mean} is below what gamma={gamma} can reach")
    hi = 1.0
    while excess(hi) < 0:
        hi *= 2
        if hi > 1e9:
            raise GraphError(f"mean {mean} unreachable on [{d_min}, {d_max}]")
    return brentq(excess, lo, hi, xtol=1e-12)


def gen_powerlaw_sequence(
    n: int,
    gamma: float,
    d_min: int = 1,
    d_max: int | None = None,
    seed=None,
    offset: float = 0.0,
) -> DegreeSequence:
    """``n`` i.i.d. degrees from a truncated power law, parity-corrected.

    If the sum is odd one random entry below ``d_max`` is incremented.
    """
    if gamma <= 1:
        raise GraphError("gamma must exceed 1")
    d_max = n - 1 if d_max is None else d_max
    support, p = powerlaw_pmf(gamma, d_min, d_max, offset)
    rng = _rng(seed)
    deg = rng.choice(support, size=n, p=p)
    if deg.sum() % 2:
        room = np.flatnonzero(deg < d_max)
        if room.size:
            deg[rng.choice(room)] += 1
        else:
            deg[rng.integers(n)] -= 1
    return DegreeSequence(tuple(int(x) for x in deg))


def assign_weights(g: Graph, scheme: WeightScheme, seed=None) -> Graph:
    """Replace every edge weight by a draw from ``scheme``; symmetric."""
    iu, ju = np.nonzero(np.triu(g.adj, 1))
    a = np.zeros_like(g.adj)
    if isinstance(scheme, Constant):
        w = np.full(iu.size, scheme.r)
    elif isinstance(scheme, Jittered):
        rng = _rng(seed)
        sd = np.sqrt(scheme.var)
        w = scheme.r + sd * rng.standard_normal(iu.size)
        bad = w <= 0
        while np.any(bad):
            w[bad] = scheme.r + sd * rng.standard_normal(int(bad.sum()))
            bad = w <= 0
    else:
        raise TypeError(f"unknown weight scheme {scheme!r}")
    a[iu, ju] = w
    a[ju, iu] = w
    return Graph(a)


def randomize_preserving_nk(g: Graph, seed) -> Graph:
    """Uniform random graph with the same node and edge counts, unit weights."""
    return gen_uniform_random_graph(g.n, g.k, seed)


def degree_sequence(g: Graph) -> DegreeSequence:
    """Unweighted degrees (count of non-zero entries per row)."""
    return DegreeSequence(tuple(int(x) for x in np.count_nonzero(g.adj, axis=1)))


def heterogeneity(g: Graph) -> float:
    """Sum over edges of ``(1/sqrt(d_i) - 1/sqrt(d_j))**2`` on binarized degrees."""
    d = np.count_nonzero(g.adj, axis=1).astype(float)
    iu, ju = np.nonzero(np.triu(g.adj, 1))
    if iu.size == 0:
        return 0.0
    return float(np.sum((1 / np.sqrt(d[iu]) - 1 / np.sqrt(d[ju])) ** 2))


def gibbs_rg_entropy(n: int, k: int) -> float:
    """``ln[ C(C(n,2), k) / n! ]`` via log-gamma."""
    m = n * (n - 1) // 2
    if not 0 <= k <= m:
        raise GraphError(f"edge count k={k} outside [0, {m}]")
    return float(gammaln(m + 1) - gammaln(k + 1) - gammaln(m - k + 1) - gammaln(n + 1))
