"""Lüders channels of rank-1 POVMs and their spectra over Hermitian matrices.

The Lüders channel of ``{|psi_x><psi_x|}`` maps
``X -> sum_x |psi_x><psi_x| X |psi_x><psi_x| / <psi_x|psi_x>``. It is held as
its ``d^2 x d^2`` Choi matrix ``C`` with ``vec(H(X)) = C vec(X)``. The
average channel of a scheme is the mean of the per-copy Choi matrices.

The spectrum is computed on the real Hilbert space of Hermitian matrices:
in Gell-Mann coordinates the channel is a real symmetric matrix, which
keeps every eigenmatrix Hermitian even inside degenerate eigenspaces.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .designs import HermitianBasis, gell_mann_basis
from .linalg import MAX_DIM, as_square, hs_norm
from .measurement import MeasurementScheme, RankOnePovm, require_valid

logger = logging.getLogger(__name__)

ZERO_NORM_TOL = 1e-14
REAL_REP_TOL = 1e-8
EIG_CLAMP_TOL = 1e-9
ZERO_EIG_TOL = 1e-9
DEGENERACY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class LudersChannel:
    d: int
    choi: np.ndarray
    source: tuple

    def apply(self, x) -> np.ndarray:
        x = as_square(x, "X")
        return (self.choi @ x.T.reshape(-1)).reshape(self.d, self.d).T

    def inner(self, a, b) -> float:
        """``<A, H(B)> = vec(A)^† C vec(B)``, real part."""
        va = np.asarray(a, dtype=complex).T.reshape(-1)
        vb = np.asarray(b, dtype=complex).T.reshape(-1)
        return float(np.vdot(va, self.choi @ vb).real)

    def hs_norm(self) -> float:
        return hs_norm(self.choi)


def _weighted_vectors(p: RankOnePovm) -> tuple[np.ndarray, np.ndarray]:
    norms = p.norms_sq
    keep = norms >= ZERO_NORM_TOL
    return p.vectors[keep], norms[keep]


def luders_apply(p: RankOnePovm, x) -> np.ndarray:
    """Apply the Lüders channel of ``p`` to ``X``; zero-norm elements are skipped."""
    x = as_square(x, "X")
    if x.shape[0] != p.d:
        raise ValueError(f"matrix dimension {x.shape[0]} does not match POVM dimension {p.d}")
    v, norms = _weighted_vectors(p)
    coeff = np.einsum("xi,ij,xj->x", v.conj(), x, v) / norms
    return np.einsum("x,xi,xj->ij", coeff, v, v.conj())


def choi_matrix(p: RankOnePovm) -> LudersChannel:
    """``C = sum_x (|conj psi_x><conj psi_x| ⊗ |psi_x><psi_x|) / <psi_x|psi_x>``."""
    require_valid(p)
    if p.d > MAX_DIM:
        raise ValueError(f"dimension {p.d} exceeds the supported maximum {MAX_DIM}")
    v, norms = _weighted_vectors(p)
    w = np.einsum("xi,xj->xij", v.conj(), v).reshape(len(v), -1) / np.sqrt(norms)[:, None]
    choi = w.T @ w.conj()
    return LudersChannel(d=p.d, choi=choi, source=(p,))


def average_channel(s: MeasurementScheme) -> LudersChannel:
    """Mean Lüders channel ``(1/n) sum_i H_i`` of a scheme."""
    if s.n < 1:
        raise ValueError("empty scheme")
    total = np.zeros((s.d**2, s.d**2), dtype=complex)
    for povm, idx in s.distinct():
        total += len(idx) * choi_matrix(povm).choi
    return LudersChannel(d=s.d, choi=total / s.n, source=s.povms)


def channel_trace(c: LudersChannel) -> float:
    """``sum_ij <|i><j|, H(|i><j|)>``, which equals ``Tr[C]``."""
    return float(np.trace(c.choi).real)


@dataclass(frozen=True, eq=False)
class ChannelSpectrum:
    """Ascending eigenvalues with Hermitian, HS-orthonormal eigenmatrices.

    ``coordinates[:, j]`` holds eigenmatrix ``j`` in Gell-Mann coordinates;
    the last eigenmatrix is exactly ``I/sqrt(d)`` with eigenvalue 1.
    """

    eigenvalues: np.ndarray
    eigenmatrices: np.ndarray
    coordinates: np.ndarray

    @property
    def d(self) -> int:
        return self.eigenmatrices.shape[1]

    def basis(self) -> HermitianBasis:
        return HermitianBasis(self.eigenmatrices)

    def zero_dim(self, tol: float = ZERO_EIG_TOL) -> int:
        return int(np.sum(self.eigenvalues < tol))

    def smallest_square_sum(self, ell: int | None = None) -> float:
        """``sum_{i <= ell} lambda_i^2``; ``ell`` defaults to ``floor(d^2 / 2)``."""
        ell = self.d**2 // 2 if ell is None else ell
        return float(np.sum(self.eigenvalues[:ell] ** 2))

    def to_dict(self) -> dict:
        lam = self.eigenvalues
        return {
            "eigenvalues": [float(x) for x in lam],
            "trace": float(lam.sum()),
            "hs_norm": float(np.sqrt(np.sum(lam**2))),
            "zero_space_dim": self.zero_dim(),
            "smallest_half_square_sum": self.smallest_square_sum(),
        }


def real_representation(c: LudersChannel, basis: HermitianBasis | None = None) -> np.ndarray:
    """Matrix ``R_ij = <V_i, H(V_j)>`` of the channel in a Hermitian basis."""
    basis = gell_mann_basis(c.d) if basis is None else basis
    v = basis.vectorized()
    r = v.conj().T @ c.choi @ v
    if np.max(np.abs(r.imag)) > REAL_REP_TOL:
        raise ValueError("channel does not preserve Hermiticity (complex real representation)")
    r = r.real
    asym = np.max(np.abs(r - r.T))
    if asym > REAL_REP_TOL:
        raise ValueError(f"real representation is not symmetric (deviation {asym:.3e}); invalid channel")
    return (r + r.T) / 2


def _canonical_subspace_basis(u: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of ``span(u)`` aligned with the coordinate axes.

    Axes are projected onto the subspace in index order; each step takes the
    lowest-index axis whose residual is within half of the largest residual,
    so the result does not depend on which basis LAPACK returned.
    """
    dim = u.shape[1]
    proj = u @ u.T
    chosen = []
    residual = proj.copy()
    for _ in range(dim):
        norms = np.linalg.norm(residual, axis=0)
        i = int(np.argmax(norms >= 0.5 * norms.max()))
        vec = residual[:, i] / norms[i]
        if vec[i] < 0:
            vec = -vec
        chosen.append(vec)
        residual = residual - np.outer(vec, vec @ residual)
    q, _ = np.linalg.qr(np.array(chosen).T)
    # QR may flip signs; restore the sign convention
    signs = np.sign(np.sum(q * np.array(chosen).T, axis=0))
    return q * signs


def channel_spectrum(c: LudersChannel) -> ChannelSpectrum:
    """Eigendecomposition of the channel over Hermitian matrices.

    The identity direction is pinned: unitality makes ``I/sqrt(d)`` an exact
    eigenvector, so the decomposition runs on the trace-free block in
    Gell-Mann coordinates and ``I/sqrt(d)`` is appended last.
    """
    basis = gell_mann_basis(c.d)
    r = real_representation(c, basis)
    m = r.shape[0]
    leak = max(np.max(np.abs(r[-1, :-1])), abs(r[-1, -1] - 1.0))
    if leak > REAL_REP_TOL:
        raise ValueError(f"identity is not a unit eigenvector of the channel (deviation {leak:.3e})")
    w, u = np.linalg.eigh(r[:-1, :-1])

    blocks = []
    start = 0
    while start < len(w):
        stop = start + 1
        while stop < len(w) and w[stop] - w[stop - 1] <= DEGENERACY_TOL:
            stop += 1
        vecs = u[:, start:stop]
        if stop - start > 1:
            vecs = _canonical_subspace_basis(vecs)
        else:
            vecs = vecs * (1.0 if vecs[np.argmax(np.abs(vecs[:, 0])), 0] >= 0 else -1.0)
        blocks.append(vecs)
        start = stop

    coords = np.zeros((m, m))
    coords[:-1, :-1] = np.hstack(blocks) if blocks else np.zeros((m - 1, 0))
    coords[-1, -1] = 1.0
    lam = np.append(w, 1.0)

    bad = (lam < -EIG_CLAMP_TOL) | (lam > 1 + EIG_CLAMP_TOL)
    if np.any(bad):
        logger.warning("clamping eigenvalues outside [0, 1]: %s", lam[bad])
    lam = np.clip(lam, 0.0, 1.0)
    mats = basis.combine(coords.T)
    return ChannelSpectrum(eigenvalues=lam, eigenmatrices=mats, coordinates=coords)


def spectrum_report(c: LudersChannel) -> dict:
    spec = channel_spectrum(c)
    out = spec.to_dict()
    out["trace"] = channel_trace(c)
    out["hs_norm"] = c.hs_norm()
    return out
