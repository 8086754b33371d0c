"""Compiled inner loops: Gray-code enumeration and heat-bath sweeps."""

import numpy as np
from numba import njit


@njit(cache=True)
def gray_log_weights(a, y, beta, out):
    """out[b] = (beta/2) <x, A x> + <y, x> for x_k = 2*bit_k(b) - 1, b < 2^n.

    Visits states in Gray order so each step flips one spin and updates the
    local field A x in O(n).
    """
    n = a.shape[0]
    x = -np.ones(n)
    h = np.zeros(n)
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += a[i, j] * x[j]
        h[i] = s
    quad = 0.0
    lin = 0.0
    for i in range(n):
        quad += x[i] * h[i]
        lin += y[i] * x[i]
    code = 0
    out[0] = 0.5 * beta * quad + lin
    total = 1 << n
    for i in range(1, total):
        j = 0
        while not (i >> j) & 1:
            j += 1
        xj = x[j]
        quad -= 4.0 * xj * (h[j] - a[j, j] * xj)
        lin -= 2.0 * y[j] * xj
        for k in range(n):
            h[k] -= 2.0 * xj * a[k, j]
        x[j] = -xj
        code ^= 1 << j
        out[code] = 0.5 * beta * quad + lin


@njit(cache=True)
def heat_bath_sweep(a, x, field, beta, uniforms):
    """One systematic-scan heat-bath sweep on every chain, in place.

    x: (chains, n) spins as float; field: (chains, n) holding A x.
    Spin i becomes +1 with probability (1 + tanh(beta h_i)) / 2 where
    h_i = sum_{k != i} A_ik x_k.
    """
    chains, n = x.shape
    for c in range(chains):
        for i in range(n):
            hi = field[c, i] - a[i, i] * x[c, i]
            new = 1.0 if uniforms[c, i] <= 0.5 * (1.0 + np.tanh(beta * hi)) else -1.0
            if new != x[c, i]:
                d = new - x[c, i]
                for k in range(n):
                    field[c, k] += d * a[i, k]
                x[c, i] = new


@njit(cache=True)
def quadratic_forms(x, field):
    chains, n = x.shape
    out = np.empty(chains)
    for c in range(chains):
        s = 0.0
        for i in range(n):
            s += x[c, i] * field[c, i]
        out[c] = s
    return out
