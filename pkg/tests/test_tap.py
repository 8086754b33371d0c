import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skloc.amp import amp_run
from skloc.disorder import CouplingMatrix, operator_norm, sample_goe, sample_planted
from skloc.state_evolution import gamma_star
from skloc.tap import (DEFAULT_ETA, NGDDivergenceError, TapContext, bregman, mirror_step_check, ngd_run,
                       tap_free_energy, tap_gradient, tap_hessian_apply)


def entropy_direct(m):
    """Binary entropy written out from the +-1 probabilities."""
    p, r = (1 + m) / 2, (1 - m) / 2
    return -(p * np.log(p) + r * np.log(r))


def free_energy_direct(a, y, beta, q, m):
    n = m.size
    return (-beta / 2 * m @ a @ m - y @ m - entropy_direct(m).sum()
            - n * beta**2 * (1 - q) * (1 + q - 2 * (m @ m) / n) / 4)


def random_ctx(n, seed, beta=0.4, q=0.3):
    rng = np.random.default_rng(seed)
    return TapContext(sample_goe(n, seed), rng.normal(size=n), q, beta), rng


def test_q_range_enforced():
    with pytest.raises(ValueError):
        TapContext(sample_goe(3, 1), np.zeros(3), 1.5, 0.3)


@given(q=st.floats(0, 1), beta=st.floats(0, 1))
def test_free_energy_at_zero(q, beta):
    n = 7
    ctx = TapContext(sample_goe(n, 2), np.arange(n, dtype=float), q, beta)
    want = -n * np.log(2) - n * beta**2 * (1 - q**2) / 4
    assert abs(tap_free_energy(ctx, np.zeros(n)) - want) <= 1e-12 * (1 + abs(want))


def test_free_energy_without_coupling():
    ctx, rng = random_ctx(10, 3, beta=0.0, q=0.0)
    m = rng.uniform(-0.9, 0.9, 10)
    assert np.isclose(tap_free_energy(ctx, m), -ctx.y @ m - entropy_direct(m).sum(), rtol=1e-13, atol=0)


def test_free_energy_dual_implementation():
    ctx, rng = random_ctx(3, 4)
    m = rng.uniform(-0.95, 0.95, 3)
    direct = free_energy_direct(ctx.entries, ctx.y, ctx.beta, ctx.q, m)
    assert np.isclose(tap_free_energy(ctx, m), direct, rtol=1e-13, atol=1e-13)


def test_boundary_rejected():
    ctx, _ = random_ctx(3, 5)
    for fn in (lambda m: tap_free_energy(ctx, m), lambda m: tap_gradient(ctx, m),
               lambda m: tap_hessian_apply(ctx, m, m), lambda m: bregman(m, np.zeros(3))):
        with pytest.raises(ValueError):
            fn(np.array([1.0, 0.0, 0.0]))


def test_gradient_at_zero_is_minus_field():
    ctx, _ = random_ctx(20, 6)
    assert np.array_equal(tap_gradient(ctx, np.zeros(20)), -ctx.y)


@given(seed=st.integers(0, 10**6), q=st.floats(0, 1))
def test_gradient_matches_finite_difference(seed, q):
    n = 50
    ctx, rng = random_ctx(n, seed, q=q)
    m = rng.uniform(-0.9, 0.9, n)
    g = tap_gradient(ctx, m)
    h = 1e-6
    fd = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        fd[i] = (tap_free_energy(ctx, m + e) - tap_free_energy(ctx, m - e)) / (2 * h)
    # the free energy is O(n), so absolute round-off in fd is about 1e-16 * n / h
    assert np.all(np.abs(fd - g) <= 1e-5 * np.maximum(np.abs(g), 1.0))


def test_hessian_trivial_case():
    ctx = TapContext(sample_goe(5, 1), np.zeros(5), 0.2, 0.0)
    v = np.arange(5.0)
    assert np.array_equal(tap_hessian_apply(ctx, np.zeros(5), v), v)


def test_hessian_matches_gradient_difference():
    ctx, rng = random_ctx(15, 7)
    m = rng.uniform(-0.8, 0.8, 15)
    v = rng.normal(size=15)
    h = 1e-6
    fd = (tap_gradient(ctx, m + h * v) - tap_gradient(ctx, m - h * v)) / (2 * h)
    assert np.allclose(tap_hessian_apply(ctx, m, v), fd, rtol=1e-5, atol=1e-5)


def test_hessian_sandwich():
    beta, n = 0.3, 300
    ctx, rng = random_ctx(n, 8, beta=beta)
    norm = operator_norm(ctx.matrix)
    m = rng.uniform(-0.9, 0.9, n)
    d = 1 / (1 - m * m)
    for _ in range(50):
        v = rng.normal(size=n)
        vhv = v @ tap_hessian_apply(ctx, m, v)
        vdv = v @ (d * v)
        assert (1 - beta * norm) * vdv <= vhv <= (1 + beta**2 + beta * norm) * vdv


@pytest.mark.parametrize("beta", [0.2, 0.45])
def test_relative_convexity_gate(beta):
    n = 400
    ctx, rng = random_ctx(n, 9, beta=beta, q=0.5)
    assert operator_norm(ctx.matrix) <= 2.1
    for _ in range(30):
        m = rng.uniform(-0.99, 0.99, n)
        v = rng.normal(size=n)
        assert v @ tap_hessian_apply(ctx, m, v) >= 0.05 * v @ (v / (1 - m * m))


def test_bregman_properties():
    rng = np.random.default_rng(10)
    m = rng.uniform(-0.95, 0.95, 100)
    assert bregman(m, m) == 0.0
    for _ in range(20):
        a, b = rng.uniform(-0.95, 0.95, (2, 100))
        d = bregman(a, b)
        assert d >= np.sum((a - b) ** 2) / 2
        assert d <= np.sum((np.arctanh(a) - np.arctanh(b)) ** 2)


def test_ngd_zero_steps_and_validation():
    ctx, rng = random_ctx(10, 11)
    u0 = rng.normal(size=10)
    assert np.array_equal(ngd_run(ctx, u0, k_ngd=0), np.tanh(u0))
    with pytest.raises(ValueError):
        ngd_run(ctx, np.full(10, np.nan))
    assert DEFAULT_ETA == 0.15


def test_ngd_stationary_start():
    # at beta = 0 and q = 1 the gradient is atanh(m) - y, zero at m = tanh(y)
    y = np.linspace(-1, 1, 8)
    ctx = TapContext(sample_goe(8, 1), y, 1.0, 0.0)
    assert np.allclose(ngd_run(ctx, y, eta=0.2, k_ngd=40), np.tanh(y), rtol=0, atol=1e-15)


def test_ngd_monotone_descent():
    beta, t, n = 0.45, 0.5, 1000
    inst = sample_planted(n, beta, 12)
    y = inst.field(t, seed=12)
    ctx = TapContext(inst.matrix, y, gamma_star(beta, t) / beta**2, beta)
    rng = np.random.default_rng(12)
    for u0 in (np.zeros(n), rng.normal(size=n), 3 * rng.normal(size=n)):
        _, trace = ngd_run(ctx, u0, eta=0.2, k_ngd=60, return_trace=True)
        assert np.all(np.diff(trace) <= 1e-12 * (1 + np.abs(trace[1:])))


def test_ngd_divergence_raises_with_trajectory():
    ctx = TapContext(CouplingMatrix(np.zeros((4, 4))), np.zeros(4), 0.0, 0.5)
    with pytest.raises(NGDDivergenceError) as err:
        # near 0 the update is u <- (1 - 1.25 eta) u = -1.5 u, so |m| and F grow every step
        ngd_run(ctx, np.full(4, 0.01), eta=2.0, k_ngd=20)
    assert err.value.trajectory.size >= 4
    assert err.value.step == 3


def test_mirror_step_check():
    ctx, rng = random_ctx(50, 13)
    m = rng.uniform(-0.9, 0.9, 50)
    assert mirror_step_check(ctx, m, 0.1) <= 1e-10
    assert mirror_step_check(ctx, m, 0.0) == 0.0
    y = np.linspace(-1, 1, 6)
    still = TapContext(sample_goe(6, 2), y, 1.0, 0.0)
    assert mirror_step_check(still, np.tanh(y), 0.3) <= 1e-15


@given(seed=st.integers(0, 10**6), eta=st.floats(0, 1))
def test_mirror_equivalence_property(seed, eta):
    ctx, rng = random_ctx(20, seed)
    assert mirror_step_check(ctx, rng.uniform(-0.99, 0.99, 20), eta) <= 1e-10


@pytest.fixture(scope="module")
def planted_amp():
    beta, t, n = 0.45, 0.5, 4000
    inst = sample_planted(n, beta, 77)
    y = inst.field(t, seed=77)
    m, state = amp_run(inst.matrix, y, beta, 25)
    ctx = TapContext(inst.matrix, y, gamma_star(beta, t) / beta**2, beta)
    return ctx, m, state, t, n


def test_gradient_small_at_amp_output(planted_amp):
    ctx, m, _, t, n = planted_amp
    assert np.linalg.norm(tap_gradient(ctx, m)) / np.sqrt(t * n) <= 0.1


def test_ngd_stays_near_amp(planted_amp):
    ctx, m, state, t, n = planted_amp
    out = ngd_run(ctx, state.z, eta=0.2, k_ngd=100)
    assert np.linalg.norm(out - m) / np.sqrt(t * n) <= 0.1


def test_ngd_free_energy_monotone_near_saturation():
    # strong fields push m to within 1e-8 of the clamp, where a careless entropy loses digits
    n, t = 10, 10.0
    rng = np.random.default_rng(12)
    x = np.where(rng.random((4096, n)) < 0.5, -1.0, 1.0)
    y = t * x + np.sqrt(t) * rng.normal(size=(4096, n))
    ctx = TapContext(sample_goe(n, 12), y, 0.98, 0.3)
    m, trace = ngd_run(ctx, y, return_trace=True)
    assert np.all(np.diff(trace, axis=0) <= 1e-12 * (1 + np.abs(trace[1:])))
    assert np.allclose(trace[-1], tap_free_energy(ctx, m), rtol=0, atol=1e-10)
