import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skloc.amp import AmpState, amp_init, amp_lipschitz_probe, amp_run, amp_step, amp_trace
from skloc.disorder import CouplingMatrix, sample_goe, sample_planted
from skloc.state_evolution import gamma_iterates, gamma_star

BETA = 0.45
N = 4000


@pytest.fixture(scope="module")
def planted():
    inst = sample_planted(N, BETA, 2024)
    fields = {t: inst.field(t, seed=int(100 * t)) for t in (0.25, 0.5, 1.0)}
    return inst, fields


def reference_amp(a, y, beta, k):
    """Independently coded AMP loop returning the list of pre-activations z^0..z^k."""
    n = y.size
    zs = [np.zeros(n)]
    m_old = np.zeros(n)
    m = np.zeros(n)
    for _ in range(k):
        b = beta**2 * np.mean(1 - m**2)
        z = beta * a.dot(m) + y - b * m_old
        zs.append(z)
        m_old, m = m, np.tanh(z)
    return zs


@given(seed=st.integers(0, 1000), beta=st.floats(0, 2))
def test_first_step_returns_field_exactly(seed, beta):
    a = sample_goe(12, seed)
    y = np.random.default_rng(seed).normal(size=12)
    s = amp_step(amp_init(y, beta), a, y, beta)
    assert np.array_equal(s.z, y)


def test_hand_computed_step():
    a = CouplingMatrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    z0 = np.arctanh([0.5, 0.5])
    state = AmpState(z0, np.array([0.5, 0.5]), np.zeros(2), 0.25 * (1 - 0.25), 1)
    nxt = amp_step(state, a, np.zeros(2), 0.5)
    assert np.allclose(nxt.z, [0.25, 0.25], rtol=0, atol=1e-15)
    assert np.array_equal(nxt.m_prev, [0.5, 0.5])


def test_state_invariants():
    a = sample_goe(50, 3)
    y = 2.0 * np.random.default_rng(1).normal(size=50)
    s = amp_init(y, 0.4)
    for _ in range(10):
        s = amp_step(s, a, y, 0.4)
        assert np.allclose(s.m_curr, np.tanh(s.z), rtol=1e-15, atol=1e-12)
        assert abs(s.onsager - 0.16 * np.mean(1 - s.m_curr**2)) <= 1e-12
        assert np.all(np.abs(s.m_curr) < 1)


def test_dimension_mismatch_rejected():
    a = sample_goe(5, 1)
    with pytest.raises(ValueError):
        amp_step(amp_init(np.zeros(4), 0.3), a, np.zeros(4), 0.3)


def test_run_edge_cases():
    a = sample_goe(20, 2)
    y = np.random.default_rng(2).normal(size=20)
    m0, _ = amp_run(a, y, 0.3, 0)
    assert np.array_equal(m0, np.zeros(20))
    m1, _ = amp_run(a, y, 0.3, 1)
    assert np.array_equal(m1, np.tanh(y))
    with pytest.raises(ValueError):
        amp_run(a, y, 0.3, -1)


def test_run_bitwise_deterministic():
    a = sample_goe(100, 4)
    y = np.random.default_rng(4).normal(size=100)
    assert np.array_equal(amp_run(a, y, 0.45, 25)[0], amp_run(a, y, 0.45, 25)[0])


def test_batched_rows_match_single_runs():
    a = sample_goe(30, 5)
    ys = np.random.default_rng(5).normal(size=(4, 30))
    batch, _ = amp_run(a, ys, 0.4, 15)
    for r in range(4):
        assert np.allclose(batch[r], amp_run(a, ys[r], 0.4, 15)[0], rtol=0, atol=1e-13)


def test_matches_reference_implementation():
    a = sample_goe(80, 6)
    y = np.random.default_rng(6).normal(size=80)
    zs = reference_amp(a.entries, y, 0.45, 12)
    _, s = amp_run(a, y, 0.45, 12)
    assert np.allclose(s.z, zs[-1], rtol=0, atol=1e-12)


@pytest.mark.parametrize("t", [0.25, 0.5, 1.0])
def test_norm_and_overlap_track_state_evolution(planted, t):
    inst, fields = planted
    m, _ = amp_run(inst.matrix, fields[t], BETA, 20)
    # z^k carries signal gamma_{k-1} + t, so |m^k|^2 / n = E tanh(z^k)^2 -> gamma_k / beta^2
    q20 = gamma_iterates(BETA, t, 20)[20] / BETA**2
    assert abs(m @ m / N - q20) <= 0.05
    assert abs(m @ inst.x0 / N - q20) <= 5 / np.sqrt(N) + 0.02


def test_mse_matches_prediction(planted):
    inst, fields = planted
    m, _ = amp_run(inst.matrix, fields[0.5], BETA, 20)
    pred = 1 - gamma_iterates(BETA, 0.5, 20)[20] / BETA**2
    assert abs(np.mean((m - inst.x0) ** 2) - pred) <= 0.05


def test_iterate_gap_matches_prediction(planted):
    inst, fields = planted
    t = 0.5
    g = gamma_iterates(BETA, t, 41)
    assert (gamma_star(BETA, t) - g[26]) / BETA**2 <= 0.05
    m2, _ = amp_run(inst.matrix, fields[t], BETA, 2)
    m40, _ = amp_run(inst.matrix, fields[t], BETA, 40)
    assert abs(np.mean((m2 - m40) ** 2) - (g[40] - g[2]) / BETA**2) <= 0.02


def test_cauchy_increments(planted):
    inst, fields = planted
    t = 0.5
    zs = reference_amp(inst.matrix.entries, fields[t], BETA, 8)
    g = gamma_iterates(BETA, t, 8)
    inc = [np.mean((zs[k + 1] - zs[k]) ** 2) for k in range(1, 8)]
    pred = [(g[k] - g[k - 1]) ** 2 + (g[k] - g[k - 1]) for k in range(1, 8)]
    assert np.all(np.abs(np.array(inc) - pred) <= 0.05)
    assert np.all(np.diff(inc) < 0)


def test_trace_columns(planted):
    inst, fields = planted
    tr = amp_trace(inst.matrix, fields[0.5], BETA, 5, inst.x0)
    assert tr.shape == (5, 3)
    assert np.array_equal(tr[:, 0], np.arange(1, 6))


def test_lipschitz_probe():
    a = sample_goe(200, 8)
    rng = np.random.default_rng(8)
    y1 = rng.normal(size=200)
    e1 = np.zeros(200)
    e1[0] = 1e-3
    assert amp_lipschitz_probe(a, y1, y1 + e1, 0.45, 1) == 1.0
    y2 = rng.normal(size=200)
    r = amp_lipschitz_probe(a, y1, y2, 0.45, 3)
    assert r <= 3 * 6**3
    z1 = reference_amp(a.entries, y1, 0.45, 3)[-1]
    z2 = reference_amp(a.entries, y2, 0.45, 3)[-1]
    assert abs(r - np.linalg.norm(z1 - z2) / np.linalg.norm(y1 - y2)) < 1e-12
    with pytest.raises(ValueError):
        amp_lipschitz_probe(a, y1, y1, 0.45, 3)


def test_lipschitz_probe_norm_gate():
    big = CouplingMatrix(4.0 * np.eye(3))
    with pytest.raises(ValueError):
        amp_lipschitz_probe(big, np.zeros(3), np.ones(3), 0.3, 2)
