"""Rank-1 POVMs, Born-rule statistics and seeded outcome sampling.

A rank-1 POVM is stored as a ``(k, d)`` array whose rows are the (possibly
unnormalized) vectors ``|psi_x>``; the POVM elements are ``|psi_x><psi_x|``.
A measurement scheme assigns one POVM to each of ``n`` copies. Schemes are
plain immutable data: no private randomness is attached to them.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._random import generator
from .linalg import MAX_DIM, as_square
from .states import check_density_matrix

logger = logging.getLogger(__name__)

COMPLETENESS_TOL = 1e-9
PROB_NEG_TOL = 1e-12
PROB_RENORM_TOL = 1e-10
PROB_FAIL_TOL = 1e-8

SCHEME_FORMAT = "qcertify.scheme"
SCHEME_VERSION = 1


class SchemeFormatError(ValueError):
    """Malformed scheme JSON; the message names the offending field."""


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RankOnePovm:
    """Rank-1 POVM with element vectors as rows of ``vectors``."""

    vectors: np.ndarray

    def __init__(self, vectors):
        if isinstance(vectors, np.ndarray):
            rows = vectors
        else:
            vectors = list(vectors)
            lengths = {len(np.atleast_1d(v)) for v in vectors}
            if len(lengths) > 1:
                raise ValueError(f"POVM element vectors have mismatched dimensions {sorted(lengths)}")
            rows = np.array([np.atleast_1d(np.asarray(v, dtype=complex)) for v in vectors])
        rows = np.asarray(rows, dtype=complex)
        if rows.ndim != 2 or rows.shape[0] == 0:
            raise ValueError(f"POVM vectors must form a non-empty (k, d) array, got shape {rows.shape}")
        if not np.all(np.isfinite(rows)):
            raise ValueError("POVM vectors contain NaN or Inf")
        if rows.shape[1] > MAX_DIM:
            raise ValueError(f"dimension {rows.shape[1]} exceeds the supported maximum {MAX_DIM}")
        object.__setattr__(self, "vectors", _readonly(rows))

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def k(self) -> int:
        return self.vectors.shape[0]

    @property
    def norms_sq(self) -> np.ndarray:
        return np.sum(np.abs(self.vectors) ** 2, axis=1)

    def elements(self) -> np.ndarray:
        """The ``k`` PSD elements ``|psi_x><psi_x|`` as a ``(k, d, d)`` array."""
        v = self.vectors
        return v[:, :, None] * v.conj()[:, None, :]

    def completeness_deviation(self) -> float:
        s = self.vectors.T @ self.vectors.conj()
        return float(np.max(np.abs(s - np.eye(self.d))))


@dataclass(frozen=True)
class PovmReport:
    deviation: float
    k: int
    d: int
    passed: bool


def validate_povm(p: RankOnePovm, tol: float = COMPLETENESS_TOL) -> PovmReport:
    """Check completeness ``sum_x |psi_x><psi_x| = I`` entrywise, and ``k >= d``."""
    dev = p.completeness_deviation()
    return PovmReport(deviation=dev, k=p.k, d=p.d, passed=bool(dev <= tol and p.k >= p.d))


def require_valid(p: RankOnePovm) -> None:
    rep = validate_povm(p)
    if not rep.passed:
        raise ValueError(f"invalid POVM: completeness deviation {rep.deviation:.3e} (k={rep.k}, d={rep.d})")


def canonical_povm(d: int) -> RankOnePovm:
    """Computational-basis measurement ``{|x><x|}``."""
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    return RankOnePovm(np.eye(d, dtype=complex))


def hadamard_povm() -> RankOnePovm:
    """Qubit measurement in the basis ``(|0> ± |1>)/sqrt(2)``."""
    return RankOnePovm(np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2))


def random_rank1_povm(d: int, k: int, rng: np.random.Generator) -> RankOnePovm:
    """Rows of a Haar-like random ``k x d`` isometry, so ``sum_x |v_x><v_x| = I``."""
    if k < d:
        raise ValueError(f"a rank-1 POVM needs k >= d, got k={k}, d={d}")
    g = rng.standard_normal((k, d)) + 1j * rng.standard_normal((k, d))
    q, r = np.linalg.qr(g)
    # fix the phase ambiguity of QR so the draw depends only on g
    q = q * (np.diag(r) / np.abs(np.diag(r)))
    return RankOnePovm(q.conj())


def born_distribution(p: RankOnePovm, rho) -> np.ndarray:
    """Outcome probabilities ``p(x) = <psi_x| rho |psi_x>``.

    Entries down to -1e-12 are clamped to zero; a total off from one by at
    most 1e-8 is renormalized away, anything larger is an error.
    """
    rho = as_square(rho, "rho")
    if rho.shape[0] != p.d:
        raise ValueError(f"state dimension {rho.shape[0]} does not match POVM dimension {p.d}")
    v = p.vectors
    probs = np.einsum("xi,ij,xj->x", v.conj(), rho, v).real
    if probs.min() < -PROB_NEG_TOL:
        raise ValueError(f"negative outcome probability {probs.min():.3e}; invalid POVM or state")
    probs = np.clip(probs, 0.0, None)
    drift = abs(probs.sum() - 1.0)
    if drift > PROB_FAIL_TOL:
        raise ValueError(f"outcome probabilities sum to {probs.sum()!r}; invalid POVM or state")
    if drift > PROB_RENORM_TOL:
        logger.warning("renormalizing outcome distribution with drift %.3e", drift)
    return probs / probs.sum()


@dataclass(frozen=True, eq=False)
class MeasurementScheme:
    """One POVM per copy. ``shared`` is true when every copy uses the same POVM object."""

    povms: tuple

    def __init__(self, povms: Sequence[RankOnePovm]):
        povms = tuple(povms)
        if not povms:
            raise ValueError("a measurement scheme needs at least one copy")
        dims = {p.d for p in povms}
        if len(dims) > 1:
            raise ValueError(f"POVMs in a scheme must share one dimension, got {sorted(dims)}")
        object.__setattr__(self, "povms", povms)

    @classmethod
    def repeated(cls, povm: RankOnePovm, n: int) -> "MeasurementScheme":
        if n < 1:
            raise ValueError(f"number of copies must be positive, got {n}")
        return cls([povm] * n)

    @property
    def n(self) -> int:
        return len(self.povms)

    @property
    def d(self) -> int:
        return self.povms[0].d

    @property
    def shared(self) -> bool:
        first = self.povms[0]
        return all(p is first for p in self.povms)

    def distinct(self) -> list[tuple[RankOnePovm, list[int]]]:
        """Distinct POVM objects with the copy indices that use them, in first-use order."""
        groups: dict[int, tuple[RankOnePovm, list[int]]] = {}
        for i, p in enumerate(self.povms):
            groups.setdefault(id(p), (p, []))[1].append(i)
        return list(groups.values())


def _inverse_cdf(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    # side="right" skips zero-probability outcomes, including trailing ones
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(probs) - 1)


def sample_from(probs: np.ndarray, size: int, seed: int) -> np.ndarray:
    """Draw ``size`` i.i.d. outcomes from a finite distribution by inverse CDF."""
    u = generator(seed).random(size)
    return _inverse_cdf(np.asarray(probs, dtype=float), u)


def sample_outcomes(scheme: MeasurementScheme, rho, seed: int) -> np.ndarray:
    """Measure each of ``scheme.n`` copies of ``rho``; outcome ``i`` uses POVM ``i``.

    The uniform variate for copy ``i`` is the ``i``-th draw of the Philox
    stream keyed by ``seed``, so results depend only on ``(seed, i)``.
    """
    rho = check_density_matrix(rho)
    u = generator(seed).random(scheme.n)
    out = np.empty(scheme.n, dtype=np.int64)
    for povm, idx in scheme.distinct():
        require_valid(povm)
        probs = born_distribution(povm, rho)
        out[idx] = _inverse_cdf(probs, u[idx])
    return out


# -- JSON ----------------------------------------------------------------------


def _decode_complex(obj, path: str) -> complex:
    if not (isinstance(obj, (list, tuple)) and len(obj) == 2 and all(isinstance(t, (int, float)) for t in obj)):
        raise SchemeFormatError(f"{path}: expected a [re, im] pair of numbers, got {obj!r}")
    return complex(obj[0], obj[1])


def decode_complex_matrix(obj, path: str) -> np.ndarray:
    """Decode a nested list of ``[re, im]`` pairs into a 2-D complex array."""
    if not isinstance(obj, list) or not obj:
        raise SchemeFormatError(f"{path}: expected a non-empty list of rows")
    rows = []
    for i, row in enumerate(obj):
        if not isinstance(row, list):
            raise SchemeFormatError(f"{path}[{i}]: expected a list of [re, im] pairs")
        rows.append([_decode_complex(z, f"{path}[{i}][{j}]") for j, z in enumerate(row)])
    if len({len(r) for r in rows}) != 1:
        raise SchemeFormatError(f"{path}: rows have different lengths")
    return np.array(rows, dtype=complex)


def encode_complex_matrix(a) -> list:
    a = np.asarray(a, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def scheme_to_dict(scheme: MeasurementScheme) -> dict:
    if scheme.shared:
        povms = [encode_complex_matrix(scheme.povms[0].vectors)]
    else:
        povms = [encode_complex_matrix(p.vectors) for p in scheme.povms]
    return {
        "format": SCHEME_FORMAT,
        "version": SCHEME_VERSION,
        "dim": scheme.d,
        "copies": scheme.n,
        "shared": scheme.shared,
        "povms": povms,
    }


def scheme_from_dict(obj) -> MeasurementScheme:
    if not isinstance(obj, dict):
        raise SchemeFormatError("<root>: expected a JSON object")
    for key in ("dim", "copies", "shared", "povms"):
        if key not in obj:
            raise SchemeFormatError(f"{key}: missing required field")
    if obj.get("format", SCHEME_FORMAT) != SCHEME_FORMAT:
        raise SchemeFormatError(f"format: expected {SCHEME_FORMAT!r}, got {obj['format']!r}")
    d, n, shared = obj["dim"], obj["copies"], obj["shared"]
    if not isinstance(d, int) or d < 1:
        raise SchemeFormatError(f"dim: expected a positive integer, got {d!r}")
    if not isinstance(n, int) or n < 1:
        raise SchemeFormatError(f"copies: expected a positive integer, got {n!r}")
    raw = obj["povms"]
    if not isinstance(raw, list) or not raw:
        raise SchemeFormatError("povms: expected a non-empty list")
    if shared and len(raw) != 1:
        raise SchemeFormatError(f"povms: shared scheme must list exactly one POVM, got {len(raw)}")
    if not shared and len(raw) != n:
        raise SchemeFormatError(f"povms: expected {n} POVMs (one per copy), got {len(raw)}")
    povms = []
    for i, entry in enumerate(raw):
        vecs = decode_complex_matrix(entry, f"povms[{i}]")
        if vecs.shape[1] != d:
            raise SchemeFormatError(f"povms[{i}]: vectors have length {vecs.shape[1]}, expected dim={d}")
        povm = RankOnePovm(vecs)
        rep = validate_povm(povm)
        if not rep.passed:
            raise SchemeFormatError(f"povms[{i}]: not a POVM (completeness deviation {rep.deviation:.3e})")
        povms.append(povm)
    if shared:
        return MeasurementScheme.repeated(povms[0], n)
    return MeasurementScheme(povms)


def dump_scheme(scheme: MeasurementScheme) -> str:
    return json.dumps(scheme_to_dict(scheme), indent=2, sort_keys=True)


def load_scheme(text: str) -> MeasurementScheme:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeFormatError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return scheme_from_dict(obj)
