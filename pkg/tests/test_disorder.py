import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from skloc.disorder import (CouplingMatrix, DisorderPath, OperatorNormError, interpolate, load_matrix,
                            operator_norm, power_iteration, sample_goe, sample_planted, save_matrix)


@given(n=st.integers(1, 40), seed=st.integers(0, 2**64 - 1))
def test_goe_exactly_symmetric_and_deterministic(n, seed):
    a = sample_goe(n, seed)
    assert np.max(np.abs(a.entries - a.entries.T)) == 0
    assert np.array_equal(a.entries, sample_goe(n, seed).entries)


def test_n1_is_single_gaussian_of_variance_two():
    vals = np.array([sample_goe(1, s).entries[0, 0] for s in range(4000)])
    assert abs(vals.var() - 2.0) < 0.2


def test_n0_rejected():
    with pytest.raises(ValueError):
        sample_goe(0, 1)


def test_offdiagonal_and_diagonal_variance():
    n = 500
    a = sample_goe(n, 11).entries
    off = a[np.triu_indices(n, 1)]
    assert abs(off.var() / (1 / n) - 1) < 0.1
    assert abs(np.diag(a).var() / (2 / n) - 1) < 0.2


def test_goe_norm_near_two():
    a = sample_goe(4000, 7)
    assert 1.9 <= a.op_norm_estimate <= 2.1


def test_entries_read_only():
    a = sample_goe(5, 1)
    with pytest.raises(ValueError):
        a.entries[0, 0] = 1.0


def test_operator_norm_known_spectra():
    assert operator_norm(CouplingMatrix(np.zeros((4, 4)))) == 0.0
    assert abs(operator_norm(CouplingMatrix(np.diag([3.0, 1.0, -1.0]))) - 3) <= 3e-6 * 3


def test_operator_norm_against_dense_eigensolver():
    a = sample_goe(1000, 2)
    est = operator_norm(a)
    true = np.abs(np.linalg.eigvalsh(a.entries)).max()
    assert 1.85 <= est <= 2.15
    assert est <= true * (1 + 1e-12)
    assert abs(est - true) / true < 0.01


def test_operator_norm_cap_reports_best():
    with pytest.raises(OperatorNormError) as err:
        power_iteration(sample_goe(300, 1).entries, tol=1e-15, max_iter=3)
    assert err.value.best > 0


def test_interpolation_endpoints_and_midpoint():
    path = DisorderPath.from_seed(20, 4)
    assert interpolate(path, 0.0).entries is path.a0.entries
    assert interpolate(path, 1.0).entries is path.a1.entries
    pat = np.eye(6) + np.diag(np.ones(5), 1) + np.diag(np.ones(5), -1)
    p2 = DisorderPath(CouplingMatrix(pat), CouplingMatrix(np.zeros((6, 6))))
    assert np.allclose(interpolate(p2, 0.6).entries, 0.8 * pat, rtol=0, atol=1e-15)
    for s in (-0.1, 1.1):
        with pytest.raises(ValueError):
            interpolate(path, s)


@given(s=st.floats(0, 1))
def test_interpolated_matrix_symmetric(s):
    a = interpolate(DisorderPath.from_seed(15, 3), s).entries
    assert np.array_equal(a, a.T)


def test_interpolation_preserves_goe_variance():
    n = 500
    a = interpolate(DisorderPath.from_seed(n, 9), 0.5).entries
    assert abs(a[np.triu_indices(n, 1)].var() * n - 1) < 0.1
    assert abs(np.diag(a).var() * n / 2 - 1) < 0.2


def test_disorder_perturbation_bound():
    n = 500
    path = DisorderPath.from_seed(n, 21)
    rng = np.random.default_rng(0)
    for s in (0.05, 0.1, 0.2):
        a_s = interpolate(path, s).entries
        for _ in range(100):
            u, v = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n)
            lhs = np.linalg.norm(path.a0.entries @ u - a_s @ v)
            assert lhs <= 5 * (np.linalg.norm(u - v) + s * np.sqrt(n))


def test_planted_zero_beta_is_goe():
    inst = sample_planted(30, 0.0, 5)
    assert np.array_equal(inst.matrix.entries, sample_goe(30, 5).entries)
    assert set(np.unique(inst.x0)) <= {-1.0, 1.0}


def _top_vector(a):
    w, v = np.linalg.eigh(a)
    return v[:, np.argmax(np.abs(w))]


def test_planted_alignment_below_and_above_threshold():
    n = 2000
    low = sample_planted(n, 0.4, 3)
    high = sample_planted(n, 2.0, 3)
    assert abs(_top_vector(low.matrix.entries) @ low.x0) / np.sqrt(n) < 0.9
    assert abs(_top_vector(high.matrix.entries) @ high.x0) / np.sqrt(n) > 0.5


def test_binary_roundtrip_bit_exact(tmp_path):
    a = sample_goe(17, 8)
    p = tmp_path / "a.sklm"
    save_matrix(a, p)
    raw = p.read_bytes()
    assert raw[:4] == b"SKLM"
    b = load_matrix(p)
    assert np.array_equal(a.entries.view(np.uint64), b.entries.view(np.uint64))


def test_binary_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.sklm"
    p.write_bytes(b"XXXX" + bytes(12))
    with pytest.raises(ValueError):
        load_matrix(p)


def test_csv_export(tmp_path):
    a = sample_goe(4, 1)
    a.to_csv(tmp_path / "a.csv")
    back = np.loadtxt(tmp_path / "a.csv", delimiter=",")
    assert np.array_equal(back, a.entries)


def test_asymmetric_rejected():
    with pytest.raises(ValueError):
        CouplingMatrix(np.array([[0.0, 1.0], [0.0, 0.0]]))
