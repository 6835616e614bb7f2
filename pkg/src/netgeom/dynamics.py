"""Geodesic flow on the manifold of symmetric matrices and its linearization.

Coordinates ``zeta`` are the upper-triangle entries of ``M = diag(theta) + A``
(see :func:`netgeom.geometry.coord_pairs`), with metric
``G_ab = 0.5 Tr(M^-1 E_a M^-1 E_b)``. The flow is integrated in arc length
``s`` as a first-order system in ``(zeta, zeta')``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .geometry import (
    DegenerateMetricError,
    _degeneracy_margin,
    extended_metric,
    extended_metric_and_derivatives,
    zeta_to_matrix,
)


def n_coords(n: int) -> int:
    return n * (n + 1) // 2


@dataclass(frozen=True)
class ExtendedState:
    zeta: np.ndarray
    zeta_dot: np.ndarray
    s: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        z = np.asarray(self.zeta, dtype=float).copy()
        zd = np.asarray(self.zeta_dot, dtype=float).copy()
        if z.ndim != 1 or z.shape != zd.shape:
            raise ValueError("zeta and zeta_dot must be vectors of equal length")
        object.__setattr__(self, "zeta", z)
        object.__setattr__(self, "zeta_dot", zd)


@dataclass(frozen=True)
class TangentState:
    phi: np.ndarray
    phi_dot: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.phi, dtype=float).copy()
        pd = np.asarray(self.phi_dot, dtype=float).copy()
        if p.shape != pd.shape:
            raise ValueError("phi and phi_dot must have equal length")
        object.__setattr__(self, "phi", p)
        object.__setattr__(self, "phi_dot", pd)

    @property
    def vector(self) -> np.ndarray:
        return np.concatenate([self.phi, self.phi_dot])


@dataclass
class Trajectory:
    states: list[ExtendedState]
    n: int
    boundary: bool = False
    message: str = ""
    tol: float = field(default=math.nan)

    def __len__(self):
        return len(self.states)

    @property
    def s(self) -> np.ndarray:
        return np.array([st.s for st in self.states])

    @property
    def zeta(self) -> np.ndarray:
        return np.array([st.zeta for st in self.states])

    @property
    def zeta_dot(self) -> np.ndarray:
        return np.array([st.zeta_dot for st in self.states])


def _check_dim(zeta, n):
    if np.asarray(zeta).shape != (n_coords(n),):
        raise ValueError(f"state must have {n_coords(n)} coordinates for n={n}")


def christoffel_at(zeta, n: int) -> np.ndarray:
    """``Gamma[i, j, k]`` at ``zeta`` from the closed-form metric derivatives."""
    g, dg = extended_metric_and_derivatives(zeta, n)
    g_inv = np.linalg.inv(g)
    # dg[c, a, b] = d_c G_ab
    lower = dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg  # [l, j, k]
    return 0.5 * np.einsum("il,ljk->ijk", g_inv, lower)


def christoffel(state: ExtendedState, n: int) -> np.ndarray:
    _check_dim(state.zeta, n)
    return christoffel_at(state.zeta, n)


def geodesic_field(y, n: int) -> np.ndarray:
    """``d/ds (zeta, zeta') = (zeta', -Gamma zeta' zeta')``."""
    m = n_coords(n)
    z, v = y[:m], y[m:]
    gam = christoffel_at(z, n)
    return np.concatenate([v, -np.einsum("ijk,j,k->i", gam, v, v)])


def speed_squared(zeta, zeta_dot, n: int) -> float:
    g = extended_metric(zeta, n)
    return float(zeta_dot @ g @ zeta_dot)


def _admissibility(z, n, strict_pd):
    """Positive inside the admissible region, crosses zero at its boundary."""
    m = zeta_to_matrix(z, n)
    if strict_pd:
        return float(np.linalg.eigvalsh(m)[0])
    try:
        inv = np.linalg.inv(m)
    except np.linalg.LinAlgError:
        return -math.inf
    return float(_degeneracy_margin(m, inv))


def geodesic_integrate(
    initial: ExtendedState,
    n: int,
    s_max: float,
    tol: float = 1e-9,
    strict_pd: bool = False,
    max_step: float = math.inf,
) -> Trajectory:
    """Integrate the geodesic equations from ``initial`` to arc length ``s_max``.

    Uses adaptive Dormand-Prince 5(4) with ``rtol = tol``. Integration stops
    early, with ``boundary=True``, when ``M`` becomes degenerate (or loses
    positive definiteness if ``strict_pd``).
    """
    _check_dim(initial.zeta, n)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    if _admissibility(initial.zeta, n, strict_pd) <= 0:
        raise DegenerateMetricError("initial state is not admissible")
    m = n_coords(n)

    def rhs(_s, y):
        try:
            return geodesic_field(y, n)
        except (DegenerateMetricError, np.linalg.LinAlgError):
            # forces a step rejection; repeated failure ends the run
            return np.full(2 * m, np.nan)

    def boundary(_s, y):
        return _admissibility(y[:m], n, strict_pd)

    boundary.terminal = True
    boundary.direction = -1

    sol = solve_ivp(
        rhs,
        (initial.s, initial.s + s_max),
        np.concatenate([initial.zeta, initial.zeta_dot]),
        method="RK45",
        rtol=tol,
        atol=tol * 1e-3,
        max_step=max_step,
        events=boundary,
    )
    states = [ExtendedState(y[:m], y[m:], float(s)) for s, y in zip(sol.t, sol.y.T)]
    hit = sol.status == 1 or sol.status == -1
    msg = "reached s_max" if sol.status == 0 else ("degeneracy boundary" if sol.status == 1 else sol.message)
    return Trajectory(states, n, boundary=hit, message=msg, tol=tol)


def arc_length_to_time(traj: Trajectory) -> list[tuple[float, float]]:
    """Physical time along the trajectory, ``dt = ds / sqrt(G(zeta', zeta'))``.

    The stored velocity is taken as the physical-time velocity; the
    integral uses the trapezoidal rule on the trajectory nodes.
    """
    if len(traj) < 2:
        raise ValueError("need at least two states")
    speed = np.sqrt([speed_squared(st.zeta, st.zeta_dot, traj.n) for st in traj.states])
    if np.any(speed <= 0) or not np.all(np.isfinite(speed)):
        raise ValueError("zero or undefined speed on the trajectory")
    s = traj.s
    inv = 1.0 / speed
    t = np.concatenate([[traj.states[0].t], traj.states[0].t + np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(s))])
    traj.states = [ExtendedState(st.zeta, st.zeta_dot, st.s, float(tt)) for st, tt in zip(traj.states, t)]
    return list(zip(s.tolist(), t.tolist()))


def field_jacobian(y, n: int, rel_step: float = 1e-6) -> np.ndarray:
    """Central finite-difference Jacobian of :func:`geodesic_field`."""
    y = np.asarray(y, dtype=float)
    h = rel_step * max(1.0, float(np.max(np.abs(y))))
    cols = []
    for j in range(y.size):
        e = np.zeros_like(y)
        e[j] = h
        cols.append((geodesic_field(y + e, n) - geodesic_field(y - e, n)) / (2 * h))
    return np.stack(cols, axis=1)


def tangent_dynamics(traj: Trajectory, phi0: TangentState, n: int, min_states: int = 10):
    """Propagate a perturbation along ``traj`` under the linearized flow.

    Each segment uses the exact exponential of the Jacobian at the segment
    midpoint; the perturbation is renormalized every step and the scale
    carried in log form, so returned states are the unrenormalized solution.

    Returns
    -------
    states : list of TangentState
    exponent : float
        ``(1/S) ln(|delta(S)| / |delta(0)|)`` over the trajectory parameter
        span ``S``; NaN when ``phi0`` is zero.
    """
    if len(traj) < min_states:
        raise ValueError(f"trajectory has {len(traj)} states, need at least {min_states}")
    m = n_coords(n)
    d0 = phi0.vector
    if d0.shape != (2 * m,):
        raise ValueError(f"perturbation must have {m} + {m} components")
    norm0 = float(np.linalg.norm(d0))
    ys = np.concatenate([traj.zeta, traj.zeta_dot], axis=1)
    s = traj.s
    if norm0 == 0:
        zero = TangentState(np.zeros(m), np.zeros(m))
        return [zero] * len(traj), math.nan
    unit = d0 / norm0
    log_scale = math.log(norm0)
    out = [TangentState(d0[:m], d0[m:])]
    for i in range(len(traj) - 1):
        jac = field_jacobian(0.5 * (ys[i] + ys[i + 1]), n)
        unit = expm(jac * (s[i + 1] - s[i])) @ unit
        nrm = float(np.linalg.norm(unit))
        log_scale += math.log(nrm)
        unit /= nrm
        vec = unit * math.exp(log_scale)
        out.append(TangentState(vec[:m], vec[m:]))
    span = s[-1] - s[0]
    return out, (log_scale - math.log(norm0)) / span
