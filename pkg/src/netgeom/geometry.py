"""Deformed metric of a network and its volume element.

A graph with weighted adjacency ``A`` is mapped to the matrix-valued
function ``psi(theta) = diag(theta) + A`` on the positive orthant. The
metric is ``g_ij = 0.5 * (psi^-1)_ij ** 2`` and the volume element is
``sqrt|det g|``. Everything is evaluated in the log domain because the
determinant spans hundreds of orders of magnitude near ``det psi = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import Graph

LOG2 = math.log(2.0)
# reciprocal condition number 1 / (||psi||_F ||psi^-1||_F) below this counts as singular
DEGENERACY_EPS = 1e-12


class DegenerateMetricError(ArithmeticError):
    def __init__(self, msg, det_psi_log_abs=-math.inf):
        super().__init__(msg)
        self.det_psi_log_abs = det_psi_log_abs


@dataclass(frozen=True)
class Box:
    """Hypercube ``[a, b]^n`` of variances."""

    a: float
    b: float
    n: int

    def __post_init__(self):
        if not (0 < self.a < self.b) or not math.isfinite(self.b):
            raise ValueError(f"box needs 0 < a < b < inf, got [{self.a}, {self.b}]")
        if self.n < 0:
            raise ValueError("box dimension must be non-negative")

    @property
    def log_measure(self) -> float:
        return self.n * math.log(self.b - self.a)

    def with_dim(self, n: int) -> "Box":
        return Box(self.a, self.b, n)


@dataclass(frozen=True)
class MetricEval:
    log_vol_elem: float
    degenerate: bool
    det_psi_log_abs: float
    det_psi_sign: float


def _check_theta(theta, n):
    t = np.asarray(theta, dtype=float)
    if t.shape != (n,):
        raise ValueError(f"theta must have length {n}, got shape {t.shape}")
    if not np.all(t > 0):
        raise ValueError("theta must be strictly positive")
    return t


def psi(theta, g: Graph) -> np.ndarray:
    """``diag(theta) + A``."""
    t = _check_theta(theta, g.n)
    m = np.array(g.adj, dtype=float)
    m[np.diag_indices(g.n)] = t
    return m


def _degeneracy_margin(mats, invs):
    """``log rcond - log eps`` per matrix of a stack; negative means degenerate."""
    fro = np.sqrt(np.sum(mats * mats, axis=(-2, -1)))
    fro_inv = np.sqrt(np.sum(invs * invs, axis=(-2, -1)))
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        return -np.log(fro) - np.log(fro_inv) - math.log(DEGENERACY_EPS)


def deformed_metric(theta, g: Graph) -> np.ndarray:
    """``0.5 * (psi^-1) o (psi^-1)`` (entrywise square)."""
    m = psi(theta, g)
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0:
        raise DegenerateMetricError("psi is singular", -math.inf)
    inv = np.linalg.inv(m)
    if not _degeneracy_margin(m, inv) >= 0:
        raise DegenerateMetricError(f"psi is degenerate (log|det| = {logdet})", logdet)
    inv = 0.5 * (inv + inv.T)
    return 0.5 * inv * inv


def log_volume_element(theta, g: Graph) -> MetricEval:
    """``log sqrt|det g(theta)|`` with degeneracy reported instead of raised."""
    t = _check_theta(theta, g.n)
    lv, degen, ld, sg = log_volume_elements(t[None, :], g)
    return MetricEval(float(lv[0]), bool(degen[0]), float(ld[0]), float(sg[0]))


def _block_eval(thetas, sub_adj):
    """Batched kernel for one connected block; returns (logvol, margin, logdet, sign)."""
    b, m = thetas.shape
    mats = np.broadcast_to(sub_adj, (b, m, m)).copy()
    idx = np.arange(m)
    mats[:, idx, idx] = thetas
    sign, logdet = np.linalg.slogdet(mats)
    bad = (sign == 0) | ~np.isfinite(logdet)
    if np.any(bad):
        # keep inv() from failing the whole stack
        mats[bad] = np.eye(m)
    inv = np.linalg.inv(mats)
    margin = _degeneracy_margin(mats, inv)
    _, logdet_h = np.linalg.slogdet(inv * inv)
    logvol = 0.5 * (logdet_h - m * LOG2)
    margin = np.where(bad, -np.inf, margin)
    return logvol, margin, logdet, sign


def log_volume_elements(thetas, g: Graph, components=None):
    """Vectorized :func:`log_volume_element` over a ``(B, n)`` batch of points.

    The matrix is block diagonal over connected components, so the log
    volume element and ``log|det psi|`` are sums of per-block terms and
    a point is degenerate when any block is. Isolated nodes contribute ``-log(sqrt(2) theta)``
    in closed form.

    Returns
    -------
    logvol, degenerate, logdet_psi, sign_psi : ndarray, shape (B,)
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    bsz, n = thetas.shape
    if n != g.n:
        raise ValueError(f"theta batch has dimension {n}, graph has {g.n} nodes")
    if components is None:
        components = g.components()
    logvol = np.zeros(bsz)
    margin = np.full(bsz, np.inf)
    logdet = np.zeros(bsz)
    sign = np.ones(bsz)
    singles = [int(c[0]) for c in components if len(c) == 1]
    if singles:
        t = thetas[:, singles]
        lt = np.log(t)
        logvol -= np.sum(lt, axis=1) + 0.5 * LOG2 * len(singles)
        logdet += np.sum(lt, axis=1)
    for c in components:
        if len(c) == 1:
            continue
        lv, mg, ld, sg = _block_eval(thetas[:, c], g.adj[np.ix_(c, c)])
        logvol += lv
        margin = np.minimum(margin, mg)
        logdet += ld
        sign *= sg
    degenerate = ~(margin >= 0) | np.isnan(logvol) | (logvol == np.inf)
    return logvol, degenerate, logdet, sign


def null_log_volume(box: Box) -> float:
    """Exact log volume of the empty graph's manifold over ``box``."""
    return box.n * math.log(math.log(box.b / box.a) / math.sqrt(2.0))


def _log_log1p_exp(x):
    """``log(log(1 + e^x))`` without overflow or underflow."""
    x = np.asarray(x, dtype=float)
    soft = np.logaddexp(0.0, x)
    with np.errstate(divide="ignore"):
        out = np.where(x < -30, x, np.log(np.where(soft > 0, soft, 1.0)))
    return out


def regularizer_upsilon(c) -> float:
    """``log[1 + det(C)^n] * exp(-tr C)`` for an ``n x n`` matrix.

    Returns NaN when ``1 + det^n <= 0`` (odd ``n``, ``det < -1``).
    """
    c = np.atleast_2d(np.asarray(c, dtype=float))
    n = c.shape[0]
    sign, logdet = np.linalg.slogdet(c)
    tr = float(np.trace(c))
    if sign == 0:
        return 0.0
    if sign > 0 or n % 2 == 0:
        return float(np.exp(_log_log1p_exp(n * logdet) - tr))
    x = -math.exp(n * logdet) if n * logdet < 700 else -math.inf
    if x <= -1:
        return math.nan
    return math.log1p(x) * math.exp(-tr)


def log_upsilon_weight(logdet_abs, trace, n):
    """Log of the regularizer evaluated on ``|det|``, usable as an MC weight."""
    return _log_log1p_exp(n * np.asarray(logdet_abs)) - np.asarray(trace)


# -- extended manifold: every entry of the symmetric matrix is a coordinate --


def coord_pairs(n: int) -> list[tuple[int, int]]:
    """Upper-triangle pairs ``(l, m)``, ``l <= m``, in row-major coordinate order."""
    return [(l, m) for l in range(n) for m in range(l, n)]


def coord_index(l: int, m: int, n: int) -> int:
    """0-based coordinate index of entry ``(l, m)``; ``l`` and ``m`` are 0-based."""
    if l > m:
        l, m = m, l
    return sum(n - r for r in range(l)) + (m - l)


def symmetric_basis(n: int) -> np.ndarray:
    """``(N, n, n)`` stack of coordinate basis matrices ``E_a``."""
    pairs = coord_pairs(n)
    e = np.zeros((len(pairs), n, n))
    for a, (l, m) in enumerate(pairs):
        e[a, l, m] = 1.0
        e[a, m, l] = 1.0
    return e


def zeta_to_matrix(zeta, n: int) -> np.ndarray:
    z = np.asarray(zeta, dtype=float)
    if z.shape != (n * (n + 1) // 2,):
        raise ValueError(f"zeta must have length {n * (n + 1) // 2}")
    m = np.zeros((n, n))
    iu = np.triu_indices(n)
    m[iu] = z
    return m + np.triu(m, 1).T


def matrix_to_zeta(m) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return m[np.triu_indices(m.shape[0])].copy()


def _inverse_checked(m):
    sign, logdet = np.linalg.slogdet(m)
    if sign == 0:
        raise DegenerateMetricError("matrix is singular", -math.inf)
    inv = np.linalg.inv(m)
    if not _degeneracy_margin(m, inv) >= 0:
        raise DegenerateMetricError(f"matrix is degenerate (log|det| = {logdet})", logdet)
    return inv


def extended_metric(zeta, n: int) -> np.ndarray:
    """``G_ab = 0.5 Tr(M^-1 E_a M^-1 E_b)`` on the ``n(n+1)/2`` matrix entries.

    On the diagonal coordinates this reduces to :func:`deformed_metric`.
    """
    w = _inverse_checked(zeta_to_matrix(zeta, n))
    x = np.einsum("ij,ajk->aik", w, symmetric_basis(n))
    return 0.5 * np.einsum("aij,bji->ab", x, x)


def extended_metric_and_derivatives(zeta, n: int):
    """Metric and ``dG[c, a, b] = d G_ab / d zeta_c`` in closed form."""
    w = _inverse_checked(zeta_to_matrix(zeta, n))
    x = np.einsum("ij,ajk->aik", w, symmetric_basis(n))
    g = 0.5 * np.einsum("aij,bji->ab", x, x)
    xx = np.einsum("cij,ajk->caik", x, x)
    # d/dc W = -W E_c W, so dG_ab = -0.5 Tr(X_c X_a X_b + X_a X_c X_b)
    dg = -0.5 * (np.einsum("caik,bki->cab", xx, x) + np.einsum("acik,bki->cab", xx, x))
    return g, dg
