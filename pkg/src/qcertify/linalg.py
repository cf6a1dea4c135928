"""Dense complex linear algebra used throughout the package.

Conventions
-----------
* Tensor products follow the row-major index rule
  ``(A ⊗ B)[i*k + p, j*l + q] = A[i, j] * B[p, q]`` (``numpy.kron``).
* Vectorization maps ``|i><j|`` to ``|j> ⊗ |i>``, i.e. column stacking.
  With this convention ``vec(A X B) = (B^T ⊗ A) vec(X)`` and
  ``<A, B> = Tr[A^† B] = vec(A)^† vec(B)``.

Only dense storage is supported. Superoperators on ``d x d`` matrices are
``d^2 x d^2`` arrays, so dimensions above :data:`MAX_DIM` are refused by the
modules that build them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

#: Largest Hilbert-space dimension accepted by superoperator constructions.
MAX_DIM = 64

HERMITIAN_TOL = 1e-12
PSD_CLAMP_TOL = 1e-10
PSD_REJECT_TOL = 1e-6


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues in ascending order with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Return ``a`` as a finite 2-D complex array."""
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return arr


def as_square(a, name: str = "matrix") -> np.ndarray:
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def hermitian_deviation(a: np.ndarray) -> float:
    """Largest entrywise gap between ``a`` and its adjoint, relative to max |a_ij|."""
    scale = max(float(np.max(np.abs(a))), 1.0) if a.size else 1.0
    return float(np.max(np.abs(a - a.conj().T))) / scale if a.size else 0.0


def is_hermitian(a, tol: float = HERMITIAN_TOL) -> bool:
    arr = as_square(a)
    return hermitian_deviation(arr) <= tol


def symmetrize(a: np.ndarray) -> np.ndarray:
    return (a + a.conj().T) / 2


def kron(a, b) -> np.ndarray:
    """Tensor (Kronecker) product of two matrices."""
    return np.kron(as_matrix(a, "A"), as_matrix(b, "B"))


def vectorize(a) -> np.ndarray:
    """Column-stacking vectorization: ``vec(|i><j|) = |j> ⊗ |i>``."""
    arr = as_square(a)
    return arr.T.reshape(-1).copy()


def unvectorize(v) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise ValueError(f"length {v.size} is not a perfect square")
    return v.reshape(d, d).T.copy()


def hs_inner(a, b) -> complex:
    """Hilbert-Schmidt inner product ``Tr[A^† B]``."""
    return complex(np.vdot(np.asarray(a), np.asarray(b)))


def hermitian_eig(h, tol: float = HERMITIAN_TOL) -> EigenSystem:
    """Eigendecomposition of a Hermitian matrix.

    Inputs within ``tol`` of Hermitian are symmetrized before being handed to
    LAPACK's Hermitian driver; anything further off is rejected.
    """
    arr = as_square(h, "H")
    dev = hermitian_deviation(arr)
    if dev > tol:
        raise ValueError(f"matrix is not Hermitian (relative deviation {dev:.3e})")
    w, u = np.linalg.eigh(symmetrize(arr))
    return EigenSystem(eigenvalues=w, eigenvectors=u)


def schatten_norm(a, p) -> float:
    """Schatten p-norm for ``p`` in ``{1, 2, inf}``.

    ``p=1`` is the trace norm, ``p=2`` the Hilbert-Schmidt norm and
    ``p=inf`` the operator norm.
    """
    arr = as_matrix(a)
    s = np.linalg.svd(arr, compute_uv=False)
    if p == 1:
        return float(np.sum(s))
    if p == 2:
        return float(np.sqrt(np.sum(s**2)))
    if p == np.inf or p == "inf":
        return float(s[0]) if s.size else 0.0
    raise ValueError(f"unsupported Schatten index p={p!r}; use 1, 2 or inf")


def trace_norm(a) -> float:
    return schatten_norm(a, 1)


def hs_norm(a) -> float:
    # Frobenius norm equals the Schatten-2 norm without an SVD.
    return float(np.linalg.norm(as_matrix(a)))


def op_norm(a) -> float:
    return schatten_norm(a, np.inf)


def psd_sqrt(m) -> np.ndarray:
    """Unique PSD square root of a PSD Hermitian matrix."""
    eig = hermitian_eig(m)
    w = eig.eigenvalues
    if w.size and w[0] < -PSD_REJECT_TOL:
        raise ValueError(f"matrix has a negative eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    u = eig.eigenvectors
    return symmetrize((u * np.sqrt(w)) @ u.conj().T)
