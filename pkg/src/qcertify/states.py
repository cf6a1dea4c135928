"""Density matrices: validation and a few standard states."""

from __future__ import annotations

import numpy as np

from ._random import generator
from .linalg import HERMITIAN_TOL, PSD_CLAMP_TOL, as_square, hermitian_deviation, symmetrize

TRACE_TOL = 1e-10


def check_density_matrix(rho, name: str = "rho") -> np.ndarray:
    """Validate a density matrix and return it as a symmetrized complex array.

    Raises:
        ValueError: if ``rho`` is not Hermitian within 1e-12, has an
            eigenvalue below -1e-10, or trace differing from 1 by more
            than 1e-10.
    """
    arr = as_square(rho, name)
    dev = hermitian_deviation(arr)
    if dev > HERMITIAN_TOL:
        raise ValueError(f"{name} is not Hermitian (relative deviation {dev:.3e})")
    arr = symmetrize(arr)
    tr = np.trace(arr).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"{name} has trace {tr!r}, expected 1")
    lo = np.linalg.eigvalsh(arr)[0]
    if lo < -PSD_CLAMP_TOL:
        raise ValueError(f"{name} is not positive semi-definite (min eigenvalue {lo:.3e})")
    return arr


def is_density_matrix(rho) -> bool:
    try:
        check_density_matrix(rho)
    except ValueError:
        return False
    return True


def maximally_mixed(d: int) -> np.ndarray:
    return np.eye(d, dtype=complex) / d


def pure_state(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def basis_state(d: int, j: int = 0) -> np.ndarray:
    """Density matrix ``|j><j|``."""
    rho = np.zeros((d, d), dtype=complex)
    rho[j, j] = 1.0
    return rho


def plus_state(d: int) -> np.ndarray:
    """Uniform superposition ``|phi><phi|`` with ``|phi> = sum_j |j> / sqrt(d)``.

    Every entry equals ``1/d``; its canonical-basis statistics are uniform,
    the same as the maximally mixed state.
    """
    return np.full((d, d), 1.0 / d, dtype=complex)


def haar_pure_state(d: int, seed) -> np.ndarray:
    """Haar-random pure state drawn from a normalized complex Gaussian vector."""
    rng = generator(seed)
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return pure_state(psi)


def random_density_matrix(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state ``G G^† / Tr[G G^†]`` with Ginibre ``G`` of ``rank`` columns."""
    r = d if rank is None else rank
    g = rng.standard_normal((d, r)) + 1j * rng.standard_normal((d, r))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def parse_state(state, d: int) -> np.ndarray:
    """Resolve a named state (``"mm"``, ``"zero"``, ``"plus"``, ``"haar:<seed>"``) or a matrix."""
    if isinstance(state, str):
        if state in ("mm", "maximally_mixed"):
            return maximally_mixed(d)
        if state in ("zero", "0"):
            return basis_state(d, 0)
        if state == "plus":
            return plus_state(d)
        if state.startswith("haar:"):
            return haar_pure_state(d, int(state.split(":", 1)[1]))
        raise ValueError(f"unknown state name {state!r}")
    return check_density_matrix(state)
