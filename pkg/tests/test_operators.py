import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from multisparse.errors import DimensionError, UndefinedInputError
from multisparse.operators import (
    AnalysisOperator,
    MeasurementKind,
    MeasurementMatrix,
    Signal,
    adjoint_apply,
    analyze,
    compressibility,
    make_measurement_matrix,
    real_fourier_basis,
    sample,
)


def brute_dft(x):
    n = len(x)
    k = np.arange(n)
    return np.array([np.sum(x * np.exp(-2j * np.pi * f * k / n)) for f in range(n)]) / np.sqrt(n)


# --- Signal -----------------------------------------------------------------

def test_signal_normalize_records_scale():
    s = Signal([3.0, 4.0]).normalize()
    assert s.normalized
    assert s.norm_scale == pytest.approx(5.0)
    assert abs(np.linalg.norm(s.samples) - 1.0) <= 1e-12
    np.testing.assert_allclose(s.samples, [0.6, 0.8])


@pytest.mark.parametrize("bad", [[], [np.nan], [1.0, np.inf]])
def test_signal_rejects_empty_or_nonfinite(bad):
    with pytest.raises(ValueError):
        Signal(bad)


def test_signal_zero_cannot_normalize():
    with pytest.raises(UndefinedInputError):
        Signal(np.zeros(4)).normalize()


def test_signal_is_immutable():
    s = Signal([1.0, 2.0])
    with pytest.raises(ValueError):
        s.samples[0] = 5.0


# --- measurement matrices ---------------------------------------------------

@pytest.mark.parametrize("kind", list(MeasurementKind)[:3])
def test_generation_is_bit_identical(kind):
    a = make_measurement_matrix(kind, 2, 4, 7)
    b = make_measurement_matrix(kind, 2, 4, 7)
    assert a.entries.tobytes() == b.entries.tobytes()
    assert a.kind is MeasurementKind(kind)
    assert a.seed == 7


def test_different_seeds_differ():
    a = make_measurement_matrix("gaussian", 8, 16, 1)
    b = make_measurement_matrix("gaussian", 8, 16, 2)
    assert not np.array_equal(a.entries, b.entries)


def test_bernoulli_entries():
    phi = make_measurement_matrix(MeasurementKind.BERNOULLI, 3, 8, 1)
    assert np.all(np.isclose(np.abs(phi.entries), 1 / np.sqrt(3), rtol=0, atol=1e-15))
    assert set(np.sign(phi.entries).ravel()) == {-1.0, 1.0}


def test_gaussian_column_energy():
    phi = make_measurement_matrix(MeasurementKind.GAUSSIAN, 128, 512, 5)
    col_sq = np.sum(phi.entries ** 2, axis=0)
    assert 0.8 <= col_sq.mean() <= 1.2


def test_partial_fourier_rows_are_distinct_scaled_basis_rows():
    n, m = 16, 6
    phi = make_measurement_matrix(MeasurementKind.PARTIAL_FOURIER, m, n, 3)
    basis = real_fourier_basis(n)
    rows = phi.entries / np.sqrt(n / m)
    # each row matches exactly one basis row
    match = np.abs(rows @ basis.T) > 1 - 1e-12
    assert np.all(match.sum(axis=1) == 1)
    assert len(set(np.argmax(match, axis=1))) == m


@pytest.mark.parametrize("n", [7, 8, 9, 16])
def test_real_fourier_basis_is_orthogonal(n):
    b = real_fourier_basis(n)
    np.testing.assert_allclose(b @ b.T, np.eye(n), atol=1e-12)


@pytest.mark.parametrize("m,n", [(0, 4), (5, 4)])
def test_bad_dimensions(m, n):
    with pytest.raises(DimensionError):
        make_measurement_matrix("gaussian", m, n, 0)


# --- sample / analyze / adjoint ---------------------------------------------

def test_sample_identity():
    x = np.array([0.3, -1.0, 2.0])
    phi = MeasurementMatrix.from_array(np.eye(3))
    np.testing.assert_array_equal(sample(phi, Signal(x)), x)


def test_sample_dense_double():
    psi = AnalysisOperator.dense([[1.0, 0.0], [0.0, 2.0]])
    np.testing.assert_array_equal(sample(psi, [3.0, 4.0]), [3.0, 8.0])


def test_sample_spike_extracts_column():
    phi = make_measurement_matrix("gaussian", 64, 128, 3)
    e0 = np.zeros(128)
    e0[0] = 1.0
    np.testing.assert_array_equal(sample(phi, e0), phi.entries[:, 0])


def test_sample_length_mismatch():
    phi = make_measurement_matrix("gaussian", 4, 8, 0)
    with pytest.raises(DimensionError):
        sample(phi, np.ones(7))


def test_analyze_identity():
    x = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(analyze(AnalysisOperator.identity(3), x), x)


def test_dft_of_constant():
    c = 1.7
    theta = analyze(AnalysisOperator.dft(8), np.full(8, c))
    assert abs(theta[0] - c * np.sqrt(8)) < 1e-10
    assert np.max(np.abs(theta[1:])) < 1e-10


def test_dft_of_cosine_matches_brute_force():
    n, k = 32, 4
    x = np.cos(2 * np.pi * k * np.arange(n) / n)
    theta = analyze(AnalysisOperator.dft(n), x)
    np.testing.assert_allclose(theta, brute_dft(x), atol=1e-10)
    support = np.flatnonzero(np.abs(theta) > 1e-10)
    assert list(support) == [k, n - k]
    assert abs(np.sum(np.abs(theta[[k, n - k]]) ** 2) - np.sum(x ** 2)) < 1e-10


def test_analyze_length_mismatch():
    with pytest.raises(DimensionError):
        analyze(AnalysisOperator.dft(8), np.ones(4))


def test_adjoint_identity_and_dense():
    v = np.array([1.0, 1.0])
    np.testing.assert_array_equal(adjoint_apply(AnalysisOperator.identity(2), v), v)
    dense = AnalysisOperator.dense([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(adjoint_apply(dense, v), [4.0, 6.0])


def test_dft_adjoint_inverts():
    g = np.random.default_rng(0)
    x = g.standard_normal(64)
    f = AnalysisOperator.dft(64)
    np.testing.assert_allclose(adjoint_apply(f, analyze(f, x)), x, atol=1e-10)


def test_dense_operator_needs_tall_shape():
    with pytest.raises(DimensionError):
        AnalysisOperator.dense(np.ones((2, 3)))


def _operators(n, g):
    yield AnalysisOperator.identity(n)
    yield AnalysisOperator.dft(n)
    yield AnalysisOperator.dense(g.standard_normal((n + 3, n)))
    yield AnalysisOperator.dense(g.standard_normal((n + 2, n)) + 1j * g.standard_normal((n + 2, n)))
    for kind in ("gaussian", "bernoulli", "partial_fourier"):
        yield make_measurement_matrix(kind, n // 2, n, 11)


def test_adjoint_consistency_all_kinds():
    g = np.random.default_rng(42)
    n = 24
    for op in _operators(n, g):
        rows, cols = op.shape
        cplx = getattr(op, "is_complex", False)
        for _ in range(100):
            v = g.standard_normal(cols)
            w = g.standard_normal(rows) + (1j * g.standard_normal(rows) if cplx else 0)
            lhs = np.vdot(w, op.apply(v))
            rhs = np.vdot(op.adjoint(w), v)
            assert abs(lhs - rhs) <= 1e-10 * np.linalg.norm(v) * np.linalg.norm(w)


def test_dense_forms_agree_with_matrix_free():
    g = np.random.default_rng(1)
    x = g.standard_normal(10)
    for op in (AnalysisOperator.identity(10), AnalysisOperator.dft(10)):
        np.testing.assert_allclose(op.to_dense() @ x, op.apply(x), atol=1e-12)
        stacked = op.real_stacked() @ x
        direct = op.apply(x)
        if op.is_complex:
            direct = np.concatenate([direct.real, direct.imag])
        np.testing.assert_allclose(stacked, direct, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 128), st.integers(0, 2**32 - 1))
def test_dft_unitarity_and_parseval(n, seed):
    x = np.random.default_rng(seed).standard_normal(n)
    f = AnalysisOperator.dft(n)
    theta = f.apply(x)
    ratio = np.linalg.norm(theta) / np.linalg.norm(x)
    assert 1 - 1e-10 <= ratio <= 1 + 1e-10
    np.testing.assert_allclose(f.adjoint(theta).real, x, atol=1e-10)


# --- compressibility --------------------------------------------------------

def test_compressibility_examples():
    assert compressibility([0, 0, 5, 0], 1) == 1.0
    assert compressibility([3, 4], 1) == pytest.approx(0.64, abs=1e-15)


def test_compressibility_spike_plus_noise():
    g = np.random.default_rng(3)
    idx = g.integers(256)
    noise = g.standard_normal(256)
    noise[idx] = 0.0
    theta = noise * np.sqrt(1e-6 / np.sum(noise ** 2))
    theta[idx] = 1.0
    # noise off the spike: the fraction is exactly 1 / (1 + 1e-6)
    c = compressibility(theta, 1)
    assert c == pytest.approx(1 / (1 + 1e-6), rel=1e-14)
    assert c >= 0.999999


@pytest.mark.parametrize("theta", [[], [0.0, 0.0]])
def test_compressibility_undefined(theta):
    with pytest.raises(UndefinedInputError):
        compressibility(theta, 1)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40).filter(lambda v: any(v)))
def test_compressibility_monotone_and_full(values):
    prev = 0.0
    for k in range(1, len(values) + 1):
        c = compressibility(values, k)
        assert 0.0 <= c <= 1.0
        assert c >= prev - 1e-15
        prev = c
    assert compressibility(values, len(values)) == 1.0


def test_compressibility_complex_uses_modulus():
    assert compressibility([3j, 4.0], 1) == pytest.approx(0.64)
