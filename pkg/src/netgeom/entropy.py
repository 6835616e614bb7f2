"""Monte Carlo volume of the deformed manifold and the normalized entropy.

The volume is estimated by uniform sampling of the variances in a box
``[a, b]^n``. Random numbers come from counter-based substreams keyed by
``(seed, purpose, realization, chunk)``, so results are bit-identical for
any worker count.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.special import logsumexp

from .geometry import LOG2, Box, log_upsilon_weight, log_volume_elements, null_log_volume
from .graph import (
    Constant,
    GenerationError,
    Graph,
    WeightScheme,
    assign_weights,
    gen_configuration_model,
    gen_powerlaw_sequence,
    gen_uniform_random_graph,
    GraphError,
    is_graphical,
    powerlaw_offset_for_mean,
    powerlaw_pmf,
)

log = logging.getLogger(__name__)

CHUNK = 1000
# substream purposes
THETA, GRAPH, WEIGHTS, SEQUENCE = 0, 1, 2, 3

Protocol = Literal["faithful", "logdomain"]
Reference = Literal["exact", "paired"]


class NumericalFailure(ArithmeticError):
    """Every Monte Carlo point was rejected, or too many realizations failed."""


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key)))


def stream_seed(seed: int, *key: int) -> int:
    """A plain integer seed derived from a substream, for the graph generators."""
    return int(substream(seed, *key).integers(2**63))


@dataclass(frozen=True)
class McConfig:
    """Monte Carlo settings. ``box.n`` is ignored; the graph sets the dimension.

    ``threads`` only changes wall time, never results.

    ``reference`` selects the null term subtracted per realization:
    ``"exact"`` uses the closed-form null volume, ``"paired"`` estimates
    it on the same variance samples. Both target the same quantity; the
    paired difference cancels most of the sampling error of the product
    ``prod 1/theta_i`` that dominates ``log V`` beyond a few dozen nodes.
    """

    box: Box = field(default_factory=lambda: Box(0.5, 10.0, 0))
    samples: int = 100_000
    realizations: int = 1000
    protocol: Protocol = "faithful"
    overflow_cutoff: float = 1e308
    seed: int = 0
    batches: int = 100
    regularizer: bool = False
    threads: int = 1
    reference: Reference = "paired"

    def __post_init__(self):
        if self.samples < self.batches:
            raise ValueError("samples must be at least the number of batches")
        if self.batches < 2:
            raise ValueError("need at least two batches for a standard error")
        if not self.overflow_cutoff > 0:
            raise ValueError("overflow cutoff must be positive")
        if self.protocol not in ("faithful", "logdomain"):
            raise ValueError(f"unknown protocol {self.protocol!r}")
        if self.reference not in ("exact", "paired"):
            raise ValueError(f"unknown null reference {self.reference!r}")
        if self.realizations < 1:
            raise ValueError("need at least one realization")

    def replace(self, **kw) -> "McConfig":
        return replace(self, **kw)


@dataclass(frozen=True)
class VolumeEstimate:
    log_volume: float
    std_err_log: float
    samples_total: int
    rejected_degenerate: int
    rejected_overflow: int
    protocol: Protocol
    log_null_paired: float = float("nan")

    @property
    def reject_degenerate_frac(self) -> float:
        return self.rejected_degenerate / self.samples_total

    @property
    def reject_overflow_frac(self) -> float:
        return self.rejected_overflow / self.samples_total


@dataclass(frozen=True)
class EntropyResult:
    s_tilde: float
    std_err: float
    realizations: int
    per_realization: tuple[float, ...]
    n: int = 0
    reject_degenerate_frac: float = 0.0
    reject_overflow_frac: float = 0.0
    mc_std_err: float = 0.0
    mean_k: float = 0.0


def batch_stderr(log_values: Sequence[float], batches: int) -> float:
    """Batch-means standard error of ``log(mean(exp(log_values)))``.

    Uses the delta method: the SE of the log of the mean is the relative SE
    of the mean.
    """
    if batches < 2:
        raise ValueError("batch-means SE needs at least two batches")
    x = np.asarray(log_values, dtype=float)
    if x.size < batches:
        raise ValueError(f"{x.size} values cannot form {batches} batches")
    overall = logsumexp(x) - math.log(x.size)
    if not np.isfinite(overall):
        return 0.0
    ratios = np.array([math.exp(logsumexp(b) - math.log(b.size) - overall) for b in np.array_split(x, batches)])
    return float(np.std(ratios, ddof=1) / math.sqrt(batches))


def _chunk_log_values(g: Graph, cfg: McConfig, box: Box, realization: int, j: int, size: int, comps):
    rng = substream(cfg.seed, THETA, realization, j)
    thetas = rng.uniform(box.a, box.b, size=(size, g.n))
    logvol, degenerate, logdet, _ = log_volume_elements(thetas, g, comps)
    overflow = np.zeros(size, dtype=bool)
    if cfg.protocol == "faithful":
        overflow = ~degenerate & (logvol > math.log(cfg.overflow_cutoff))
    values = logvol
    if cfg.regularizer:
        values = logvol + log_upsilon_weight(logdet, thetas.sum(axis=1), g.n)
    keep = ~(degenerate | overflow)
    null_values = -np.sum(np.log(thetas), axis=1) - 0.5 * g.n * LOG2
    return values[keep], int(degenerate.sum()), int(overflow.sum()), null_values


def estimate_log_volume(g: Graph, cfg: McConfig, realization: int = 0) -> VolumeEstimate:
    """``log V(A)`` over ``cfg.box``; rejected points leave numerator and denominator."""
    box = cfg.box.with_dim(g.n)
    comps = g.components()
    parts = []
    n_chunks = -(-cfg.samples // CHUNK)
    for j in range(n_chunks):
        size = min(CHUNK, cfg.samples - j * CHUNK)
        parts.append(_chunk_log_values(g, cfg, box, realization, j, size, comps))
    values = np.concatenate([p[0] for p in parts])
    rej_d = sum(p[1] for p in parts)
    rej_o = sum(p[2] for p in parts)
    if values.size == 0:
        raise NumericalFailure(
            f"all {cfg.samples} samples rejected ({rej_d} degenerate, {rej_o} above overflow cutoff)"
        )
    log_mean = float(logsumexp(values) - math.log(values.size))
    se = batch_stderr(values, cfg.batches) if values.size >= cfg.batches else 0.0
    null_values = np.concatenate([p[3] for p in parts])
    log_null = float(logsumexp(null_values) - math.log(null_values.size)) + box.log_measure
    return VolumeEstimate(log_mean + box.log_measure, se, cfg.samples, rej_d, rej_o, cfg.protocol, log_null)


def geometric_entropy(g: Graph, cfg: McConfig, realization: int = 0) -> float:
    """``S = ln V(A)``."""
    return estimate_log_volume(g, cfg, realization).log_volume


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def normalized_entropy(ensemble: Callable[[int], Graph], cfg: McConfig) -> EntropyResult:
    """``S~ = mean_i(ln V(A_i) - ln V_0) / n`` over ``cfg.realizations`` graphs.

    ``ln V_0`` is the closed form or its paired estimate, see :class:`McConfig`.

    ``ensemble(i)`` returns realization ``i``. Realizations whose estimate
    fails are dropped with a warning; more than 10% dropped is an error.
    """
    graphs = [ensemble(i) for i in range(cfg.realizations)]
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise ValueError("all realizations must have the same number of nodes")
    log_v0 = null_log_volume(cfg.box.with_dim(n))

    def one(i):
        try:
            return estimate_log_volume(graphs[i], cfg, realization=i)
        except NumericalFailure as exc:
            return exc

    results = _pmap(one, range(cfg.realizations), cfg.threads)
    ok = [r for r in results if isinstance(r, VolumeEstimate)]
    dropped = len(results) - len(ok)
    if dropped:
        log.warning("dropped %d of %d realizations: %s", dropped, len(results),
                    next(r for r in results if not isinstance(r, VolumeEstimate)))
    if not ok or dropped > 0.1 * len(results):
        raise NumericalFailure(f"{dropped} of {len(results)} realizations failed")
    if cfg.reference == "paired":
        deltas = np.array([r.log_volume - r.log_null_paired for r in ok])
    else:
        deltas = np.array([r.log_volume - log_v0 for r in ok])
    se = float(np.std(deltas, ddof=1) / math.sqrt(len(deltas))) / n if len(deltas) > 1 else 0.0
    total = sum(r.samples_total for r in ok)
    return EntropyResult(
        s_tilde=float(np.mean(deltas)) / n if n else 0.0,
        std_err=se,
        realizations=len(ok),
        per_realization=tuple(float(d) for d in deltas),
        n=n,
        reject_degenerate_frac=sum(r.rejected_degenerate for r in ok) / total,
        reject_overflow_frac=sum(r.rejected_overflow for r in ok) / total,
        mc_std_err=float(np.sqrt(np.mean([r.std_err_log**2 for r in ok]))) / n if n else 0.0,
        mean_k=float(np.mean([g.k for g in graphs])),
    )


def fixed_graph_entropy(g: Graph, cfg: McConfig) -> EntropyResult:
    """Normalized entropy of one graph; realizations are independent MC runs."""
    return normalized_entropy(lambda i: g, cfg)


def sweep_er(n: int, ks: Sequence[int], scheme: WeightScheme, cfg: McConfig) -> list[tuple[int, EntropyResult]]:
    """Normalized entropy of fresh ``G(n, k)`` realizations for each ``k``.

    The variance samples for realization ``i`` are shared across ``k``
    (common random numbers), which keeps the curve smooth.
    """
    out = []
    for k in ks:
        def ens(i, k=k):
            g = gen_uniform_random_graph(n, k, stream_seed(cfg.seed, GRAPH, k, i))
            return assign_weights(g, scheme, stream_seed(cfg.seed, WEIGHTS, k, i))
        out.append((int(k), normalized_entropy(ens, cfg)))
    return out


def powerlaw_ensemble(
    n: int,
    gamma: float,
    scheme: WeightScheme,
    target_k_over_n: tuple[float, float],
    seed: int,
    realizations: int,
    key: int = 0,
    d_min: int = 1,
    d_max: int | None = None,
    max_tries: int = 10_000,
    matching_retries: int = 1000,
) -> list[Graph]:
    """Configuration-model graphs from power-law degree sequences with ``k/n`` in range.

    The degree law is ``(d + s)^-gamma`` with the offset ``s`` solved so the
    expected ``k/n`` sits at the middle of the target window; sequences are
    redrawn until the realized ``k/n`` falls inside it and a simple
    matching is found within ``matching_retries`` stub shuffles.
    """
    lo, hi = target_k_over_n
    if not 0 < lo <= hi <= (n - 1) / 2:
        raise ValueError(f"k/n window {target_k_over_n} outside (0, {(n - 1) / 2}]")
    d_max = n - 1 if d_max is None else d_max
    support, p = powerlaw_pmf(gamma, d_min, d_max)
    # an offset is only needed when the plain law misses the window
    offset = 0.0 if lo <= 0.5 * float(support @ p) <= hi else powerlaw_offset_for_mean(gamma, lo + hi, d_min, d_max)
    graphs = []
    for i in range(realizations):
        for attempt in range(max_tries):
            ds = gen_powerlaw_sequence(n, gamma, d_min, d_max, stream_seed(seed, SEQUENCE, key, i, attempt), offset)
            k = ds.total // 2
            if not (lo <= k / n <= hi and is_graphical(ds.degrees)):
                continue
            try:
                g = gen_configuration_model(ds, stream_seed(seed, GRAPH, key, i, attempt), max_retries=matching_retries)
            except GenerationError:
                # heavy tails can make simple matchings rare; redraw the sequence
                continue
            break
        else:
            raise GenerationError(f"gamma={gamma}: no realizable sequence with k/n in {target_k_over_n} after {max_tries} draws")
        graphs.append(assign_weights(g, scheme, stream_seed(seed, WEIGHTS, key, i)))
    return graphs


def sweep_powerlaw(
    n: int,
    gammas: Sequence[float],
    scheme: WeightScheme,
    target_k_over_n: tuple[float, float],
    cfg: McConfig,
    **kw,
) -> list[tuple[float, EntropyResult]]:
    out = []
    for gi, gamma in enumerate(gammas):
        try:
            graphs = powerlaw_ensemble(n, gamma, scheme, target_k_over_n, cfg.seed, cfg.realizations, key=gi, **kw)
        except (GenerationError, GraphError) as exc:
            log.warning("skipping gamma=%s: %s", gamma, exc)
            continue
        out.append((float(gamma), normalized_entropy(graphs.__getitem__, cfg)))
    return out


def degree_sequence_entropy(degrees: Sequence[int], cfg: McConfig, scheme: WeightScheme = Constant(0.2), key: int = 0) -> EntropyResult:
    """Normalized entropy over configuration-model wirings of one degree sequence."""
    def ens(i):
        g = gen_configuration_model(degrees, stream_seed(cfg.seed, GRAPH, key, i))
        return assign_weights(g, scheme, stream_seed(cfg.seed, WEIGHTS, key, i))
    return normalized_entropy(ens, cfg)
