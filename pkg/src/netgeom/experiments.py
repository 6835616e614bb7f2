"""Reproduction harness: model tables, real networks and transition fits."""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.stats import spearmanr

from .entropy import GRAPH, EntropyResult, McConfig, degree_sequence_entropy, fixed_graph_entropy, normalized_entropy, stream_seed
from .erg import count_triangles, fixture_graphs
from .graph import Constant, Graph, GraphError, WeightScheme, assign_weights, heterogeneity, randomize_preserving_nk
from .ingest import read_graph

# published reference values, used only for side-by-side columns
REFERENCE_REGULAR = {2: 1.0265, 6: 3.8498}
REFERENCE_HUBS = {
    (8,): 1.6140, (8, 8): 2.1263, (8, 8, 8): 2.2120, (8, 8, 8, 8): 2.8473, (8, 8, 8, 8, 8): 3.2298,
    (10,): 1.9156, (10, 10): 2.3878, (14,): 2.7631,
}
HETEROGENEITY_LEADS = [(8,), (7, 3), (6, 4), (5, 5), (6, 3, 3)]
REFERENCE_HETEROGENEITY = {(8,): (1.6140, 1.0), (7, 3): (1.3070, 0.8088), (6, 4): (1.0941, 0.7074),
                           (5, 5): (1.0924, 0.6754), (6, 3, 3): (1.0357, 0.4970)}
REFERENCE_ERG = {"TwoTriangles": 0.568, "K4PlusTwoIsolated": 1.006, "K5PlusOneIsolated": 1.303}
REAL_NETWORKS = {
    # name: (file, n, k, reference S~, reference S~ of randomized)
    "Net Science": ("netscience.gml", 413, 948, 1.376, 0.4454),
    "Les Miserables": ("lesmis.gml", 77, 254, 1.670, 1.6655),
    "Dolphins": ("dolphins.gml", 62, 159, 2.852, 1.7246),
    "Word Net": ("adjnoun.gml", 112, 425, 3.010, 1.4537),
}
REFERENCE_LESMIS_BINARY = 2.644
DATA_ENV = "NETGEOM_DATA"


class DatasetMissing(FileNotFoundError):
    pass


def regular_sequence(n: int, d: int) -> tuple[int, ...]:
    return (d,) * n


def lead_sequence(leads: Sequence[int], n: int = 50, base: int = 2) -> tuple[int, ...]:
    """``leads`` followed by ``base`` repeated to length ``n``."""
    if len(leads) > n:
        raise GraphError("more leading degrees than nodes")
    return tuple(leads) + (base,) * (n - len(leads))


def canonical_hub_graph(degrees: Sequence[int]) -> Graph:
    """Deterministic simple realization where every node of degree > 2 attaches
    only to distinct degree-2 nodes, and the degree-2 nodes close into paths.

    Raises if the sequence is not of that shape (too few degree-2 nodes).
    """
    d = np.asarray(degrees, dtype=int)
    n = d.size
    if np.any(d < 2):
        raise GraphError("canonical wiring needs all degrees >= 2")
    hubs = [i for i in range(n) if d[i] > 2]
    twos = [i for i in range(n) if d[i] == 2]
    need = int(d[hubs].sum()) if hubs else 0
    if need > len(twos) or need % 2:
        raise GraphError("not enough degree-2 nodes for canonical hub wiring")
    edges = []
    it = iter(twos)
    touched = []
    for h in hubs:
        for _ in range(d[h]):
            v = next(it)
            edges.append((h, v))
            touched.append(v)
    free = list(it)
    if touched:
        # one path through all untouched nodes between the first two touched ones
        chain = [touched[0]] + free + [touched[1]]
        edges += list(zip(chain[:-1], chain[1:]))
        edges += [(touched[i], touched[i + 1]) for i in range(2, len(touched), 2)]
    elif free:
        if len(free) < 3:
            raise GraphError("a 2-regular graph needs at least three nodes")
        edges += list(zip(free, free[1:] + free[:1]))
    g = Graph.from_edges(n, edges)
    if not np.array_equal(np.count_nonzero(g.adj, axis=1), d):
        raise GraphError("canonical wiring failed to realize the sequence")
    return g


@dataclass(frozen=True)
class TableRow:
    label: str
    n: int
    k: int
    result: EntropyResult
    reference: float = float("nan")
    h: float = float("nan")
    extra: str = ""


def table_regular(cfg: McConfig, n: int = 50, ds: Sequence[int] = (2, 6), scheme: WeightScheme = Constant(0.2)):
    rows = []
    for i, d in enumerate(ds):
        res = degree_sequence_entropy(regular_sequence(n, d), cfg, scheme, key=100 + i)
        rows.append(TableRow(f"d={d}", n, n * d // 2, res, REFERENCE_REGULAR.get(d, float("nan"))))
    return rows


def table_hubs(cfg: McConfig, n: int = 50, hub_sets=None, scheme: WeightScheme = Constant(0.2)):
    hub_sets = list(REFERENCE_HUBS) if hub_sets is None else hub_sets
    rows = []
    for i, leads in enumerate(hub_sets):
        seq = lead_sequence(leads, n)
        res = degree_sequence_entropy(seq, cfg, scheme, key=200 + i)
        rows.append(TableRow("(" + ",".join(map(str, leads)) + ",2,...,2)", n, sum(seq) // 2, res,
                             REFERENCE_HUBS.get(tuple(leads), float("nan"))))
    return rows


def table_heterogeneity(cfg: McConfig, n: int = 50, scheme: WeightScheme = Constant(0.2)):
    rows = []
    for i, leads in enumerate(HETEROGENEITY_LEADS):
        seq = lead_sequence(leads, n)
        h = heterogeneity(canonical_hub_graph(seq))
        res = degree_sequence_entropy(seq, cfg, scheme, key=300 + i)
        rows.append(TableRow("(" + ",".join(map(str, leads)) + ",2,...,2)", n, sum(seq) // 2, res,
                             REFERENCE_HETEROGENEITY[leads][0], h))
    return rows


def heterogeneity_column(n: int = 50) -> list[float]:
    """``h`` of the canonical wiring for each heterogeneity sequence; no sampling."""
    return [heterogeneity(canonical_hub_graph(lead_sequence(leads, n))) for leads in HETEROGENEITY_LEADS]


def table_erg(cfg: McConfig):
    rows = []
    for name, g in fixture_graphs().items():
        res = fixed_graph_entropy(g, cfg)
        rows.append(TableRow(name, g.n, g.k, res, REFERENCE_ERG[name], extra=f"triangles={count_triangles(g)}"))
    return rows


def data_dirs(extra: Sequence[os.PathLike] = ()) -> list[Path]:
    dirs = [Path(p) for p in extra]
    if os.environ.get(DATA_ENV):
        dirs += [Path(p) for p in os.environ[DATA_ENV].split(os.pathsep)]
    dirs += [Path.cwd() / "data", Path.cwd() / "tests" / "data"]
    return dirs


def load_real_network(name: str, dirs: Sequence[os.PathLike] = (), binarize: bool = False) -> Graph:
    fname = REAL_NETWORKS[name][0]
    for d in data_dirs(dirs):
        p = d / fname
        if p.is_file():
            return read_graph(p, binarize=binarize).graph
    raise DatasetMissing(f"dataset {fname!r} for {name!r} not found; set ${DATA_ENV} to a directory containing it")


def table_real(cfg: McConfig, names: Sequence[str] = ("Les Miserables", "Dolphins", "Word Net"), dirs=(), binarized_lesmis=True):
    rows = []
    for name in names:
        try:
            g = load_real_network(name, dirs)
        except DatasetMissing as exc:
            rows.append(TableRow(name, REAL_NETWORKS[name][1], REAL_NETWORKS[name][2], None, REAL_NETWORKS[name][3], extra=str(exc)))
            continue
        rows.append(TableRow(name, g.n, g.k, fixed_graph_entropy(g, cfg), REAL_NETWORKS[name][3]))
        if name == "Les Miserables" and binarized_lesmis:
            gb = g.binarized()
            rows.append(TableRow(name + " (binarized)", gb.n, gb.k, fixed_graph_entropy(gb, cfg), REFERENCE_LESMIS_BINARY))
    return rows


def randomized_ensemble(g: Graph, cfg: McConfig, key: int = 0, scheme: WeightScheme | None = None):
    """Entropy over uniform random graphs with the same ``n`` and ``k`` as ``g``."""

    def ens(i):
        r = randomize_preserving_nk(g, stream_seed(cfg.seed, GRAPH, 400 + key, i))
        return r if scheme is None else assign_weights(r, scheme)

    return normalized_entropy(ens, cfg)


def table_randomized(cfg: McConfig, names: Sequence[str] = ("Les Miserables", "Dolphins", "Word Net"), dirs=()):
    rows = []
    for i, name in enumerate(names):
        try:
            g = load_real_network(name, dirs)
        except DatasetMissing as exc:
            rows.append(TableRow(name, REAL_NETWORKS[name][1], REAL_NETWORKS[name][2], None, REAL_NETWORKS[name][4], extra=str(exc)))
            continue
        rows.append(TableRow(name + " (randomized)", g.n, g.k, randomized_ensemble(g, cfg, key=i), REAL_NETWORKS[name][4]))
    return rows


# -- transition diagnostics --


def hinge_breakpoint(x, y, grid_points: int = 2001) -> float:
    """Breakpoint of the best continuous two-segment linear fit of ``y`` on ``x``.

    The SSE is flat between neighbouring data points for some data; the
    middle of the minimizing plateau is returned.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 4:
        raise ValueError("need at least four points for a two-segment fit")
    grid = np.linspace(x.min(), x.max(), grid_points)[1:-1]
    sse = np.empty(grid.size)
    for i, xb in enumerate(grid):
        design = np.column_stack([np.ones_like(x), np.minimum(x - xb, 0), np.maximum(x - xb, 0)])
        coef, *_ = np.linalg.lstsq(design, y, rcond=None)
        sse[i] = np.sum((design @ coef - y) ** 2)
    best = np.flatnonzero(sse <= sse.min() * (1 + 1e-9) + 1e-15)
    return float(grid[best[len(best) // 2]])


def spearman(x, y) -> float:
    return float(spearmanr(x, y)[0])


def max_second_difference(x, y) -> float:
    """``max |y[i+1] - 2 y[i] + y[i-1]| / h^2`` on a uniform grid ``x``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    h = np.diff(x)
    if not np.allclose(h, h[0]):
        raise ValueError("second difference needs a uniform grid")
    return float(np.max(np.abs(np.diff(y, 2))) / h[0] ** 2)
