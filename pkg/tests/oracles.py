"""Independent reference computations used by several test modules."""
import math

import mpmath
import numpy as np
from scipy import integrate


def volume_element_mp(theta, adj, dps=40):
    """``sqrt|det(0.5 (psi^-1) o (psi^-1))|`` in extended precision."""
    mpmath.mp.dps = dps
    n = len(theta)
    m = mpmath.matrix(n, n)
    for i in range(n):
        for j in range(n):
            m[i, j] = theta[i] if i == j else adj[i][j]
    inv = m ** -1
    h = mpmath.matrix(n, n)
    for i in range(n):
        for j in range(n):
            h[i, j] = inv[i, j] ** 2 / 2
    return mpmath.sqrt(abs(mpmath.det(h)))


def volume_element_np(theta, adj):
    m = np.array(adj, dtype=float)
    m[np.diag_indices(len(theta))] = theta
    w = np.linalg.inv(m)
    return math.sqrt(abs(np.linalg.det(0.5 * w * w)))


def quadrature_volume(adj, a, b):
    """Adaptive cubature of the volume element over ``[a, b]^n`` for n <= 3."""
    n = len(adj)
    f = lambda *t: volume_element_np(t, adj)
    val, err = integrate.nquad(f, [(a, b)] * n, opts={"epsrel": 1e-7, "epsabs": 0})
    return val, err
