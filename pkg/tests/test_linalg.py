import numpy as np
import pytest
from hypothesis import given, strategies as st

from qcertify import linalg as la


def _complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _herm(rng, d):
    a = _complex(rng, d, d)
    return (a + a.conj().T) / 2


def test_vectorize_is_column_stacking():
    a = np.arange(4).reshape(2, 2)
    # vec(|i><j|) = |j> ⊗ |i>
    assert list(la.vectorize(a)) == [0, 2, 1, 3]
    e01 = np.zeros((2, 2))
    e01[0, 1] = 1
    assert np.array_equal(la.vectorize(e01), np.kron([0, 1], [1, 0]))


def test_unvectorize_roundtrip(rng):
    a = _complex(rng, 3, 3)
    assert np.array_equal(la.unvectorize(la.vectorize(a)), a)


def test_unvectorize_rejects_non_square_length():
    with pytest.raises(ValueError):
        la.unvectorize(np.zeros(5))


@given(st.integers(0, 10_000), st.integers(2, 5))
def test_vec_kron_identity(seed, d):
    rng = np.random.default_rng(seed)
    a, x, b = (_complex(rng, d, d) for _ in range(3))
    lhs = la.vectorize(a @ x @ b)
    rhs = la.kron(b.T, a) @ la.vectorize(x)
    assert np.allclose(lhs, rhs, atol=1e-10)


def test_hs_inner_matches_trace(rng):
    a, b = _complex(rng, 4, 4), _complex(rng, 4, 4)
    assert np.isclose(la.hs_inner(a, b), np.trace(a.conj().T @ b))


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_schatten_norms_against_numpy(seed, d):
    a = _complex(np.random.default_rng(seed), d, d)
    assert np.isclose(la.trace_norm(a), np.linalg.norm(a, "nuc"))
    assert np.isclose(la.hs_norm(a), np.linalg.norm(a, "fro"))
    assert np.isclose(la.op_norm(a), np.linalg.norm(a, 2))
    assert la.schatten_norm(a, "inf") == la.op_norm(a)


def test_schatten_rejects_other_p():
    with pytest.raises(ValueError):
        la.schatten_norm(np.eye(2), 3)


@given(st.integers(0, 10_000), st.integers(1, 8))
def test_hermitian_eig_reconstructs(seed, d):
    h = _herm(np.random.default_rng(seed), d)
    es = la.hermitian_eig(h)
    assert np.all(np.diff(es.eigenvalues) >= 0)
    assert np.allclose(es.reconstruct(), h, atol=1e-10)
    u = es.eigenvectors
    assert np.allclose(u.conj().T @ u, np.eye(d), atol=1e-10)


def test_hermitian_eig_rejects_non_hermitian():
    with pytest.raises(ValueError):
        la.hermitian_eig(np.array([[0, 1], [0, 0]], dtype=complex))


def test_hermitian_eig_accepts_rounding_noise(rng):
    h = _herm(rng, 4)
    h[0, 1] += 1e-15
    assert la.hermitian_eig(h).eigenvalues.shape == (4,)


def test_hermitian_eig_degenerate_is_orthonormal():
    es = la.hermitian_eig(np.eye(5))
    assert np.allclose(es.eigenvalues, 1)
    assert np.allclose(es.eigenvectors.conj().T @ es.eigenvectors, np.eye(5))


@given(st.integers(0, 10_000), st.integers(1, 6))
def test_psd_sqrt_squares_back(seed, d):
    g = _complex(np.random.default_rng(seed), d, d)
    m = g @ g.conj().T
    r = la.psd_sqrt(m)
    assert la.is_hermitian(r)
    assert np.allclose(r @ r, m, atol=1e-9 * max(1, np.abs(m).max()))


def test_psd_sqrt_clamps_tiny_negative_and_rejects_large():
    r = la.psd_sqrt(np.diag([1.0, -1e-12]))
    assert np.allclose(r, np.diag([1.0, 0.0]))
    with pytest.raises(ValueError):
        la.psd_sqrt(np.diag([1.0, -0.1]))


@pytest.mark.parametrize("bad", [np.zeros((2, 3)), np.zeros(3), np.array([[np.nan, 0], [0, 1]])])
def test_as_square_rejects(bad):
    with pytest.raises(ValueError):
        la.as_square(bad)
