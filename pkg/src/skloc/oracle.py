"""Ground truth for small systems and sample-based transport distances.

States are bit-coded: configuration b has spin x_k = +1 when bit k of b is
set and -1 otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from . import _kernels
from .amp import _entries
from .disorder import power_iteration
from .rng import stream
from .sampler import EmpiricalSample

MAX_ENUM_N = 24
MAX_TABLE_N = 20
MAX_ASSIGNMENT = 3000


@dataclass(frozen=True, eq=False)
class ExactGibbs:
    n: int
    log_weights: np.ndarray
    log_z: float

    @property
    def probabilities(self) -> np.ndarray:
        return np.exp(self.log_weights - self.log_z)


def exact_build(matrix, y=None, beta: float = 1.0) -> ExactGibbs:
    """Enumerate mu(x) proportional to exp((beta/2) <x, A x> + <y, x>)."""
    a = np.ascontiguousarray(_entries(matrix), dtype=float)
    n = a.shape[0]
    if n > MAX_ENUM_N:
        raise ValueError(f"enumeration limited to n <= {MAX_ENUM_N}, got {n}")
    y = np.zeros(n) if y is None else np.ascontiguousarray(y, dtype=float)
    if y.shape != (n,):
        raise ValueError("field length does not match the matrix")
    lw = np.empty(1 << n)
    _kernels.gray_log_weights(a, y, float(beta), lw)
    return ExactGibbs(n, lw, float(logsumexp(lw)))


@lru_cache(maxsize=8)
def spin_table(n: int) -> np.ndarray:
    """All 2^n configurations as an int8 array indexed by bit code."""
    if n > MAX_TABLE_N:
        raise ValueError(f"spin table limited to n <= {MAX_TABLE_N}")
    codes = np.arange(1 << n, dtype=np.int64)
    t = (((codes[:, None] >> np.arange(n)) & 1) * 2 - 1).astype(np.int8)
    t.setflags(write=False)
    return t


def exact_mean(g: ExactGibbs) -> np.ndarray:
    p = g.probabilities
    out = np.empty(g.n)
    for k in range(g.n):
        # bit k splits each block of 2^(k+1) codes into a low and a high half
        halves = p.reshape(-1, 2, 1 << k)
        out[k] = halves[:, 1, :].sum() - halves[:, 0, :].sum()
    return out


def exact_second_moment(g: ExactGibbs, block: int = 1 << 15) -> np.ndarray:
    """E[x x^T] under g."""
    x = spin_table(g.n)
    p = g.probabilities
    out = np.zeros((g.n, g.n))
    for s in range(0, p.size, block):
        xb = x[s:s + block].astype(float)
        out += xb.T @ (p[s:s + block, None] * xb)
    return out


def exact_covariance(g: ExactGibbs) -> np.ndarray:
    m = exact_mean(g)
    return exact_second_moment(g) - np.outer(m, m)


def exact_cov_top_eigenvalue(g: ExactGibbs, tol: float = 1e-10) -> float:
    """Largest eigenvalue of the (positive semidefinite) covariance, by power iteration."""
    if g.n > MAX_TABLE_N:
        raise ValueError(f"covariance limited to n <= {MAX_TABLE_N}")
    return power_iteration(exact_covariance(g), tol=tol, max_iter=100_000)


def log_z_sk(matrix, beta: float) -> float:
    """log of 2^{-n} sum_x exp((beta/2) <x, A x> - beta^2 n / 4), by enumeration."""
    if beta == 0:
        return 0.0
    g = exact_build(matrix, None, beta)
    n = g.n
    return g.log_z - n * np.log(2.0) - beta * beta * n / 4.0


def ais_log_weights(matrix, beta: float, seed: int, chains: int, steps: int,
                    chunk: int = 50) -> np.ndarray:
    """Log importance weights of annealed chains targeting exp((beta/2) <x, A x>).

    Anneals from the uniform measure on a linear inverse-temperature grid
    with one heat-bath sweep per temperature. E exp(logw) = 2^{-n} Z.
    """
    a = np.ascontiguousarray(_entries(matrix), dtype=float)
    n = a.shape[0]
    gen = stream(seed, "ais", n)
    x = np.where(gen.random((chains, n)) < 0.5, -1.0, 1.0)
    field = x @ a
    betas = np.linspace(0.0, beta, steps + 1)
    logw = np.zeros(chains)
    for s0 in range(1, steps + 1, chunk):
        s1 = min(s0 + chunk, steps + 1)
        u = gen.random((s1 - s0, chains, n))
        for j, k in enumerate(range(s0, s1)):
            logw += 0.5 * (betas[k] - betas[k - 1]) * _kernels.quadratic_forms(x, field)
            if k < steps:
                _kernels.heat_bath_sweep(a, x, field, betas[k], u[j])
    return logw


def log_z_sk_ais(matrix, beta: float, seed: int, chains: int = 4, steps: int = 4000) -> tuple[float, float]:
    """Annealed importance sampling estimate of log Z_SK for sizes beyond enumeration.

    Returns (estimate, standard error); the SE is the delta-method error of
    the log of the mean weight.
    """
    if beta == 0:
        return 0.0, 0.0
    n = _entries(matrix).shape[0]
    logw = ais_log_weights(matrix, beta, seed, chains, steps)
    est = float(logsumexp(logw) - np.log(chains)) - beta * beta * n / 4.0
    w = np.exp(logw - logw.max())
    se = float(np.std(w, ddof=1) / np.mean(w) / np.sqrt(chains)) if chains > 1 else float("nan")
    return est, se


def exact_sample(g: ExactGibbs, count: int, seed: int) -> EmpiricalSample:
    """I.i.d. draws by inverse CDF over the state table."""
    cdf = np.cumsum(g.probabilities)
    cdf /= cdf[-1]
    u = stream(seed, "exact-sample", g.n).random(count)
    codes = np.minimum(np.searchsorted(cdf, u, side="right"), cdf.size - 1)
    spins = (((codes[:, None] >> np.arange(g.n)) & 1) * 2 - 1).astype(np.int8)
    return EmpiricalSample(spins, np.zeros(count, dtype=np.uint64))


def conditional_plus_probability(matrix, beta: float, x: np.ndarray, i: int) -> float:
    """P(x_i = +1 | x_{-i}) under mu_A."""
    a = _entries(matrix)
    h = a[i] @ x - a[i, i] * x[i]
    return 0.5 * (1.0 + np.tanh(beta * h))


def glauber_run(matrix, beta: float, sweeps: int, seed: int, chains: int = 1) -> EmpiricalSample:
    """Final states of independent heat-bath chains started from uniform spins."""
    if sweeps < 1:
        raise ValueError("sweeps must be at least 1")
    a = np.ascontiguousarray(_entries(matrix), dtype=float)
    n = a.shape[0]
    gen = stream(seed, "glauber", n)
    x = np.where(gen.random((chains, n)) < 0.5, -1.0, 1.0)
    field = x @ a
    for _ in range(sweeps):
        _kernels.heat_bath_sweep(a, x, field, float(beta), gen.random((chains, n)))
    return EmpiricalSample(x.astype(np.int8), np.zeros(chains, dtype=np.uint64))


@dataclass(frozen=True, eq=False)
class TransportPlan:
    assignment: np.ndarray
    cost: float

    @property
    def distance(self) -> float:
        return float(np.sqrt(self.cost))


def _as_array(s) -> np.ndarray:
    return np.asarray(s.spins if isinstance(s, EmpiricalSample) else s, dtype=float)


def w2_empirical(a, b) -> TransportPlan:
    """Optimal matching of two equal-size batches under squared Euclidean cost.

    cost = (1 / (n m)) sum_i |a_i - b_sigma(i)|^2 for the optimal sigma.
    """
    xa, xb = _as_array(a), _as_array(b)
    if xa.shape != xb.shape:
        raise ValueError(f"batch shapes differ: {xa.shape} vs {xb.shape}")
    m, n = xa.shape
    if m > MAX_ASSIGNMENT:
        raise ValueError(f"assignment limited to m <= {MAX_ASSIGNMENT}")
    c = (xa * xa).sum(1)[:, None] + (xb * xb).sum(1)[None, :] - 2.0 * xa @ xb.T
    np.maximum(c, 0.0, out=c)
    rows, cols = linear_sum_assignment(c)
    sigma = np.empty(m, dtype=np.int64)
    sigma[rows] = cols
    cost = float(((xa - xb[sigma]) ** 2).sum() / (n * m))
    return TransportPlan(sigma, cost)


def w2_batches(a, b, batch: int = 2000) -> np.ndarray:
    """Squared W2 costs of consecutive equal chunks; the mean estimates W2^2 at that batch size."""
    xa, xb = _as_array(a), _as_array(b)
    if xa.shape != xb.shape:
        raise ValueError(f"batch shapes differ: {xa.shape} vs {xb.shape}")
    k = xa.shape[0] // batch
    if k == 0:
        raise ValueError("fewer samples than one batch")
    return np.array([w2_empirical(xa[i * batch:(i + 1) * batch], xb[i * batch:(i + 1) * batch]).cost
                     for i in range(k)])
