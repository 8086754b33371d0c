"""Self-checks of the exact oracles against independent computations."""

from __future__ import annotations

import itertools

import numpy as np

from .amp import amp_run
from .disorder import sample_goe, sample_planted
from .oracle import (conditional_plus_probability, exact_build, exact_cov_top_eigenvalue,
                     exact_mean, exact_sample, log_z_sk, w2_empirical)
from .rng import stream
from .state_evolution import gamma_star, mmse
from .tap import TapContext, bregman, mirror_step_check


def _check(name, value, bound, ok):
    return {"check_name": name, "value": float(value), "bound": float(bound), "pass": bool(ok)}


def _naive_log_weights(a, y, beta):
    n = a.shape[0]
    out = np.empty(1 << n)
    for b in range(1 << n):
        x = np.array([1.0 if (b >> k) & 1 else -1.0 for k in range(n)])
        out[b] = 0.5 * beta * x @ a @ x + y @ x
    return out


def run_checks(n: int = 12, seed: int = 1) -> list[dict]:
    gen = stream(seed, "verify", n)
    beta = 0.3
    checks = []

    a = sample_goe(n, seed)
    y = gen.normal(size=n)
    g = exact_build(a, y, beta)
    total = g.probabilities.sum()
    checks.append(_check("probabilities_sum_to_one", abs(total - 1), 1e-10, abs(total - 1) <= 1e-10))

    small = min(n, 8)
    a_s = sample_goe(small, seed + 1)
    y_s = gen.normal(size=small)
    gap = np.max(np.abs(exact_build(a_s, y_s, beta).log_weights - _naive_log_weights(a_s.entries, y_s, beta)))
    checks.append(_check("gray_code_matches_naive_enumeration", gap, 1e-9, gap <= 1e-9))

    gap = np.max(np.abs(exact_mean(exact_build(a, y, 0.0)) - np.tanh(y)))
    checks.append(_check("product_measure_mean_is_tanh", gap, 1e-12, gap <= 1e-12))

    lam = exact_cov_top_eigenvalue(exact_build(a, None, 0.0))
    checks.append(_check("uniform_covariance_top_eigenvalue", abs(lam - 1), 1e-8, abs(lam - 1) <= 1e-8))

    lz = log_z_sk(a, 0.0)
    checks.append(_check("log_z_sk_zero_at_infinite_temperature", abs(lz), 0.0, lz == 0.0))

    # heat-bath detailed balance on three spins
    a3 = sample_goe(3, seed + 2)
    p = exact_build(a3, None, beta).probabilities
    worst = 0.0
    for b in range(8):
        x = np.array([1.0 if (b >> k) & 1 else -1.0 for k in range(3)])
        for i in range(3):
            b2 = b ^ (1 << i)
            x2 = x.copy()
            x2[i] = -x2[i]
            p_fwd = conditional_plus_probability(a3, beta, x, i)
            p_fwd = p_fwd if x2[i] > 0 else 1 - p_fwd
            p_bwd = conditional_plus_probability(a3, beta, x2, i)
            p_bwd = p_bwd if x[i] > 0 else 1 - p_bwd
            worst = max(worst, abs(p[b] * p_fwd - p[b2] * p_bwd))
    checks.append(_check("heat_bath_detailed_balance", worst, 1e-14, worst <= 1e-14))

    s = exact_sample(g, 400, seed)
    plan = w2_empirical(s, s)
    checks.append(_check("w2_identical_batches_zero", plan.cost, 0.0, plan.cost == 0.0))

    # brute force over permutations on a tiny batch
    xa = exact_sample(g, 5, seed + 3).spins.astype(float)
    xb = exact_sample(g, 5, seed + 4).spins.astype(float)
    brute = min(((xa - xb[list(pm)]) ** 2).sum() for pm in itertools.permutations(range(5))) / (n * 5)
    got = w2_empirical(xa, xb).cost
    checks.append(_check("w2_matches_brute_force", abs(got - brute), 1e-12, abs(got - brute) <= 1e-12))

    checks.append(_check("mmse_at_zero", abs(mmse(0.0) - 1), 1e-14, abs(mmse(0.0) - 1) <= 1e-14))
    gs = gamma_star(0.45, 0.5)
    res = abs(gs - 0.45**2 * (1 - mmse(gs + 0.5)))
    checks.append(_check("gamma_star_residual", res, 1e-10, res <= 1e-10))

    m = np.tanh(gen.normal(size=n))
    ctx = TapContext(a, y, 0.3, beta)
    gap = mirror_step_check(ctx, m, 0.1)
    checks.append(_check("mirror_step_matches_explicit_step", gap, 1e-10, gap <= 1e-10))
    m2 = np.tanh(gen.normal(size=n))
    d = bregman(m, m2)
    lower = 0.5 * np.sum((m - m2) ** 2)
    upper = np.sum((np.arctanh(m) - np.arctanh(m2)) ** 2)
    checks.append(_check("bregman_lower_bound", d - lower, 0.0, d >= lower))
    checks.append(_check("bregman_upper_bound", upper - d, 0.0, d <= upper))

    # AMP approaches the exact tilted mean on a planted instance
    inst = sample_planted(n, beta, seed)
    t = 1.0
    yp = t * inst.x0 + np.sqrt(t) * gen.normal(size=n)
    m_exact = exact_mean(exact_build(inst.matrix, yp, beta))
    err5 = np.mean((amp_run(inst.matrix, yp, beta, 5)[0] - m_exact) ** 2)
    err25 = np.mean((amp_run(inst.matrix, yp, beta, 25)[0] - m_exact) ** 2)
    checks.append(_check("amp_gap_to_exact_mean_at_25_iterations", err25, 0.05, err25 <= 0.05))
    checks.append(_check("amp_gap_not_growing_5_to_25", err25 - err5, 1e-3, err25 <= err5 + 1e-3))
    return checks
