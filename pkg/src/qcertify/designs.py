"""Quantum 2-designs from mutually unbiased bases, and the Gell-Mann basis.

For a prime ``d`` the ``d + 1`` mutually unbiased bases (the canonical basis
plus ``d`` quadratic-phase Fourier bases, or the three Pauli eigenbases when
``d = 2``) jointly form a proper 2-design of ``k = d(d+1)`` unit vectors.
Rescaling each vector by ``sqrt(d q_x)`` turns a design into a rank-1 POVM.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._random import generator
from .linalg import vectorize
from .measurement import RankOnePovm

UNIT_TOL = 1e-10
ORTHO_TOL = 1e-10
DESIGN_TOL = 1e-9


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


@dataclass(frozen=True, eq=False)
class TwoDesign:
    """Weighted set of unit vectors, stored as rows, claimed to be a 2-design.

    ``basis_size`` records how many consecutive vectors make up one
    orthonormal basis when the design is a union of bases (0 otherwise).
    """

    vectors: np.ndarray
    weights: np.ndarray
    basis_size: int = 0

    def __init__(self, vectors, weights=None, basis_size: int = 0):
        v = np.array(vectors, dtype=complex)
        if v.ndim != 2:
            raise ValueError(f"design vectors must be a (k, d) array, got shape {v.shape}")
        w = np.full(v.shape[0], 1.0 / v.shape[0]) if weights is None else np.array(weights, dtype=float)
        if w.shape != (v.shape[0],):
            raise ValueError("one weight per design vector is required")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("design weights must be a probability vector")
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "vectors", v)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "basis_size", int(basis_size))

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    @property
    def is_proper(self) -> bool:
        return bool(np.allclose(self.weights, 1.0 / self.k, rtol=0, atol=1e-15))

    def unit_deviation(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.vectors, axis=1) - 1.0)))

    def bases(self) -> list[np.ndarray]:
        if not self.basis_size:
            raise ValueError("design is not recorded as a union of bases")
        b = self.basis_size
        return [self.vectors[i : i + b] for i in range(0, self.k, b)]


def mub_design(d: int) -> TwoDesign:
    """Maximal set of ``d + 1`` mutually unbiased bases for prime ``d``.

    Vectors are grouped by basis: the canonical basis first, then for odd
    ``d`` the bases ``l = 0..d-1`` with entries
    ``exp(2 pi i (l j^2 + x j) / d) / sqrt(d)``; for ``d = 2`` the X and Y
    eigenbases.
    """
    if not is_prime(d):
        raise ValueError(
            f"MUB designs are only implemented for prime d, got d={d}; "
            "prime powers would need finite-field arithmetic that is not provided"
        )
    bases = [np.eye(d, dtype=complex)]
    if d == 2:
        s = 1 / np.sqrt(2)
        bases.append(np.array([[1, 1], [1, -1]], dtype=complex) * s)
        bases.append(np.array([[1, 1j], [1, -1j]], dtype=complex) * s)
    else:
        j = np.arange(d)
        for l in range(d):
            x = np.arange(d)[:, None]
            phase = (l * j[None, :] ** 2 + x * j[None, :]) % d
            bases.append(np.exp(2j * np.pi * phase / d) / np.sqrt(d))
    return TwoDesign(np.vstack(bases), basis_size=d)


def design_from_basis(basis) -> TwoDesign:
    """A single orthonormal basis (rows) as a uniformly weighted 1-design."""
    b = np.asarray(basis, dtype=complex)
    return TwoDesign(b, basis_size=b.shape[0])


def mub_overlap_deviation(design: TwoDesign) -> float:
    """Worst deviation from the MUB overlap law over all vector pairs.

    Same-basis pairs must have overlap ``delta_ij``, cross-basis pairs
    ``|<psi|phi>|^2 = 1/d``.
    """
    b = design.basis_size
    g = np.abs(design.vectors.conj() @ design.vectors.T) ** 2
    labels = np.arange(design.k) // b
    same = labels[:, None] == labels[None, :]
    target = np.where(same, np.eye(design.k), 1.0 / design.d)
    return float(np.max(np.abs(g - target)))


def design_to_povm(t: TwoDesign) -> RankOnePovm:
    """POVM with elements ``d q_x |psi_x><psi_x|``."""
    dev = t.unit_deviation()
    if dev > UNIT_TOL:
        raise ValueError(f"design vectors are not unit norm (deviation {dev:.3e})")
    scale = np.sqrt(t.d * t.weights)
    return RankOnePovm(t.vectors * scale[:, None])


@dataclass(frozen=True)
class DesignReport:
    max_relative_deviation: float
    trials: int
    passed: bool


def random_hermitian(d: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (a + a.conj().T) / 2


def second_moment_gap(t: TwoDesign, m: np.ndarray) -> tuple[float, float]:
    """Return ``(sum_x q_x <psi_x|M|psi_x>^2, (Tr[M]^2 + Tr[M^2]) / (d(d+1)))``."""
    d = t.d
    quad = np.einsum("xi,ij,xj->x", t.vectors.conj(), m, t.vectors).real
    lhs = float(np.dot(t.weights, quad**2))
    tr = np.trace(m).real
    rhs = float((tr**2 + np.trace(m @ m).real) / (d * (d + 1)))
    return lhs, rhs


def check_two_design(t: TwoDesign, trials: int = 100, seed: int = 0, matrices=None) -> DesignReport:
    """Compare the design's second moment with the Haar value on test matrices.

    Uses ``trials`` random Hermitian matrices, or the given ``matrices``.
    """
    if matrices is None:
        if trials < 1:
            raise ValueError("at least one trial is required")
        rng = generator(seed)
        matrices = [random_hermitian(t.d, rng) for _ in range(trials)]
    worst = 0.0
    for m in matrices:
        lhs, rhs = second_moment_gap(t, np.asarray(m, dtype=complex))
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    return DesignReport(max_relative_deviation=worst, trials=len(matrices), passed=worst <= DESIGN_TOL)


@dataclass(frozen=True, eq=False)
class HermitianBasis:
    """``d^2`` Hermitian matrices, HS-orthonormal, with ``I/sqrt(d)`` last."""

    matrices: np.ndarray

    def __init__(self, matrices):
        m = np.array(matrices, dtype=complex)
        if m.ndim != 3 or m.shape[1] != m.shape[2]:
            raise ValueError(f"basis must be an (m, d, d) array, got shape {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrices", m)

    @property
    def d(self) -> int:
        return self.matrices.shape[1]

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, i) -> np.ndarray:
        return self.matrices[i]

    def vectorized(self, count: int | None = None) -> np.ndarray:
        """``d^2 x count`` matrix whose columns are ``vec(V_i)``."""
        mats = self.matrices if count is None else self.matrices[:count]
        return np.stack([vectorize(v) for v in mats], axis=1)

    def gram(self) -> np.ndarray:
        flat = self.matrices.reshape(len(self), -1)
        return flat.conj() @ flat.T

    def validate(self, tol: float = ORTHO_TOL) -> None:
        d = self.d
        if len(self) != d * d:
            raise ValueError(f"expected {d * d} matrices, got {len(self)}")
        herm = np.max(np.abs(self.matrices - np.conj(np.transpose(self.matrices, (0, 2, 1)))))
        if herm > tol:
            raise ValueError(f"basis matrices are not Hermitian (deviation {herm:.3e})")
        gdev = np.max(np.abs(self.gram() - np.eye(len(self))))
        if gdev > tol:
            raise ValueError(f"basis is not HS-orthonormal (deviation {gdev:.3e})")
        if np.max(np.abs(self.matrices[-1] - np.eye(d) / np.sqrt(d))) > tol:
            raise ValueError("last basis element must be I/sqrt(d)")

    def coefficients(self, m) -> np.ndarray:
        """Real coordinates ``<V_i, M>`` of a Hermitian matrix."""
        flat = self.matrices.reshape(len(self), -1)
        return (flat.conj() @ np.asarray(m, dtype=complex).reshape(-1)).real

    def combine(self, coeffs) -> np.ndarray:
        coeffs = np.asarray(coeffs)
        return np.tensordot(coeffs, self.matrices[: coeffs.shape[-1]], axes=(-1, 0))


def gell_mann_basis(d: int) -> HermitianBasis:
    """Generalized Gell-Mann basis, unit HS norm, ordered as
    all symmetric ``(|k><l| + |l><k|)/sqrt 2``, then all antisymmetric
    ``(-i|k><l| + i|l><k|)/sqrt 2`` (``k < l`` lexicographic), then the
    diagonal elements ``k = 1..d-1``, and ``I/sqrt(d)`` last.

    The diagonal elements are
    ``(sum_{j<k} |j><j| - k|k><k|) / sqrt(k(k+1))``.
    """
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    pairs = [(k, l) for k in range(d) for l in range(k + 1, d)]
    mats = []
    for k, l in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[k, l] = m[l, k] = 1 / np.sqrt(2)
        mats.append(m)
    for k, l in pairs:
        m = np.zeros((d, d), dtype=complex)
        m[k, l] = -1j / np.sqrt(2)
        m[l, k] = 1j / np.sqrt(2)
        mats.append(m)
    for k in range(1, d):
        diag = np.zeros(d)
        diag[:k] = 1.0
        diag[k] = -k
        mats.append(np.diag(diag / np.sqrt(k * (k + 1))).astype(complex))
    mats.append(np.eye(d, dtype=complex) / np.sqrt(d))
    return HermitianBasis(np.array(mats))


def entrywise_basis(d: int) -> np.ndarray:
    """Matrix units ``E_ij`` as an orthonormal (non-Hermitian) basis of ``C^{d x d}``."""
    mats = np.zeros((d * d, d, d), dtype=complex)
    for idx in range(d * d):
        mats[idx, idx // d, idx % d] = 1.0
    return mats
