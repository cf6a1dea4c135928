"""State certification with a single 2-design measurement on every copy.

Both the unknown state and the reference are measured (or, for a known
reference, sampled classically) with the POVM of a proper 2-design, and the
two outcome streams go to the collision closeness tester at L2 distance
``eps / sqrt(k (d + 1))``. A trace-distance gap of ``eps`` guarantees at
least that L2 gap between the two outcome distributions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._random import derive_seed
from .closeness import TesterConfig, analytic_threshold, calibrate_threshold, closeness_statistics
from .config import COPIES_CONSTANT
from .designs import TwoDesign, design_to_povm, mub_design
from .measurement import (
    MeasurementScheme,
    SchemeFormatError,
    born_distribution,
    decode_complex_matrix,
    sample_from,
    sample_outcomes,
)
from .states import check_density_matrix, parse_state

YES = "YES"
NO = "NO"


@dataclass(frozen=True, eq=False)
class CertifyJob:
    """One certification run. ``rho`` is only ever touched through sampled outcomes."""

    d: int
    design: TwoDesign
    rho: np.ndarray
    rho0: np.ndarray
    eps: float
    n: int
    seed: int = 0
    rho0_known: bool = True
    tester: TesterConfig = field(default_factory=TesterConfig)

    def __post_init__(self):
        if not 0 < self.eps <= 2:
            raise ValueError(f"eps must lie in (0, 2], got {self.eps}")
        if self.n < 1:
            raise ValueError(f"n must be at least 1, got {self.n}")
        if self.design.d != self.d:
            raise ValueError(f"design dimension {self.design.d} does not match d={self.d}")
        rho = check_density_matrix(self.rho, "rho")
        rho0 = check_density_matrix(self.rho0, "rho0")
        for name, m in (("rho", rho), ("rho0", rho0)):
            if m.shape[0] != self.d:
                raise ValueError(f"{name} has dimension {m.shape[0]}, expected {self.d}")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "rho0", rho0)

    @property
    def k(self) -> int:
        return self.design.k

    @property
    def eps2(self) -> float:
        return l2_threshold(self.eps, self.k, self.d)


@dataclass(frozen=True)
class Verdict:
    decision: str
    statistic: float
    threshold: float
    n_used: int

    def to_dict(self) -> dict:
        return {
            "decision": self.decision,
            "statistic": self.statistic,
            "threshold": self.threshold,
            "n_used": self.n_used,
        }


def l2_threshold(eps: float, k: int, d: int) -> float:
    return eps / math.sqrt(k * (d + 1))


def required_copies(d: int, k: int, eps: float, C: float = COPIES_CONSTANT) -> int:
    """``ceil(C sqrt(k d (d+1)) / eps^2)``."""
    if not 0 < eps <= 2:
        raise ValueError(f"eps must lie in (0, 2], got {eps}")
    if not C > 0:
        raise ValueError(f"C must be positive, got {C}")
    # round away float noise before the ceiling so exact products stay exact
    return int(math.ceil(round(C * math.sqrt(k * d * (d + 1)) / eps**2, 9)))


def _streams(job: CertifyJob) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    povm = design_to_povm(job.design)
    scheme = MeasurementScheme.repeated(povm, job.n)
    x = sample_outcomes(scheme, job.rho, derive_seed(job.seed, 0))
    p0 = born_distribution(povm, job.rho0)
    if job.rho0_known:
        y = sample_from(p0, job.n, derive_seed(job.seed, 1))
    else:
        y = sample_outcomes(scheme, job.rho0, derive_seed(job.seed, 1))
    return x, y, p0


def certify_state(job: CertifyJob) -> Verdict:
    """Run the certification test; YES means ``rho`` is accepted as ``rho0``.

    With amplification the statistic reported is the median over repetitions,
    which for an odd count crosses the threshold exactly when the majority does.
    """
    cfg = job.tester
    x, y, p0 = _streams(job)
    m = job.n // cfg.amplification
    if m < 2:
        raise ValueError(f"need at least 2 copies per repetition, got n={job.n} with {cfg.amplification} repetitions")
    stats = closeness_statistics(x, y, job.k, cfg.amplification)
    if cfg.threshold_mode == "calibrated":
        thr = calibrate_threshold(job.k, m, p0, cfg.calibration_trials, cfg.target_type1, derive_seed(job.seed, 2))
    else:
        thr = analytic_threshold(m, job.eps2, cfg.threshold_constant)
    rejects = sum(z >= thr for z in stats)
    decision = NO if 2 * rejects > len(stats) else YES
    return Verdict(decision=decision, statistic=float(np.median(stats)), threshold=float(thr), n_used=m * cfg.amplification)


@dataclass(frozen=True)
class GapAudit:
    norm_sq: float
    gap_sq: float
    norm_bound: float
    gap_formula: float
    norm_ok: bool
    gap_ok: bool

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def l2_gap_audit(design: TwoDesign, rho, rho0, tol: float = 1e-10) -> GapAudit:
    """Exact ``||p_rho||^2`` and ``||p_rho - p_rho0||^2`` against their design values.

    For a proper 2-design ``||p_rho - p_rho0||^2 = d Tr[D^2] / (k (d+1))``
    with ``D = rho - rho0``, and ``||p_rho||^2 <= 2d / (k (d+1))``.
    """
    rho = check_density_matrix(rho, "rho")
    rho0 = check_density_matrix(rho0, "rho0")
    povm = design_to_povm(design)
    p = born_distribution(povm, rho)
    q = born_distribution(povm, rho0)
    d, k = design.d, design.k
    delta = rho - rho0
    norm_sq = float(np.sum(p**2))
    gap_sq = float(np.sum((p - q) ** 2))
    norm_bound = 2 * d / (k * (d + 1))
    gap_formula = float(d * np.trace(delta @ delta).real / (k * (d + 1)))
    return GapAudit(
        norm_sq=norm_sq,
        gap_sq=gap_sq,
        norm_bound=norm_bound,
        gap_formula=gap_formula,
        norm_ok=norm_sq <= norm_bound + tol,
        gap_ok=abs(gap_sq - gap_formula) <= tol,
    )


class StateCertifier(BaseEstimator):
    """Estimator form of the certification test.

    ``fit(rho0)`` fixes the reference; ``predict(rho)`` returns YES or NO.
    ``n=None`` uses ``required_copies`` with the calibrated constant.
    """

    def __init__(self, eps=0.5, design="mub", n=None, copies_constant=COPIES_CONSTANT,
                 rho0_known=True, amplification=1, random_state=0):
        self.eps = eps
        self.design = design
        self.n = n
        self.copies_constant = copies_constant
        self.rho0_known = rho0_known
        self.amplification = amplification
        self.random_state = random_state

    def fit(self, X, y=None):
        rho0 = check_density_matrix(X, "rho0")
        d = rho0.shape[0]
        self.design_ = mub_design(d) if isinstance(self.design, str) and self.design == "mub" else self.design
        if not isinstance(self.design_, TwoDesign):
            raise ValueError(f"unknown design {self.design!r}")
        self.rho0_ = rho0
        self.d_ = d
        self.n_ = self.n if self.n is not None else required_copies(d, self.design_.k, self.eps, self.copies_constant)
        return self

    def _job(self, rho, seed) -> CertifyJob:
        check_is_fitted(self, "rho0_")
        return CertifyJob(
            d=self.d_, design=self.design_, rho=rho, rho0=self.rho0_, eps=self.eps, n=self.n_,
            seed=seed, rho0_known=self.rho0_known, tester=TesterConfig(amplification=self.amplification),
        )

    def verdict(self, X, seed=None) -> Verdict:
        return certify_state(self._job(X, self.random_state if seed is None else seed))

    def predict(self, X) -> str:
        return self.verdict(X).decision


def _wrong(design, rho, rho0, eps, n, seed, expect, tester, rho0_known) -> int:
    job = CertifyJob(d=design.d, design=design, rho=rho, rho0=rho0, eps=eps, n=n,
                     seed=seed, rho0_known=rho0_known, tester=tester)
    return int(certify_state(job).decision != expect)


def error_rate(design: TwoDesign, rho, rho0, eps: float, n: int, trials: int, seed: int,
               expect: str, tester: TesterConfig | None = None, rho0_known: bool = True,
               n_jobs: int = 1) -> float:
    """Fraction of ``trials`` seeded runs whose verdict differs from ``expect``.

    Trial ``t`` runs with seed ``derive_seed(seed, t)``, so the result does
    not depend on ``n_jobs``.
    """
    tester = TesterConfig() if tester is None else tester
    args = (design, rho, rho0, eps, n)
    if n_jobs == 1:
        wrong = sum(_wrong(*args, derive_seed(seed, t), expect, tester, rho0_known) for t in range(trials))
    else:
        wrong = sum(Parallel(n_jobs=n_jobs)(
            delayed(_wrong)(*args, derive_seed(seed, t), expect, tester, rho0_known) for t in range(trials)
        ))
    return wrong / trials


# job files


def _decode_state(obj, d: int, path: str) -> np.ndarray:
    if isinstance(obj, str):
        try:
            return parse_state(obj, d)
        except ValueError as exc:
            raise SchemeFormatError(f"{path}: {exc}") from None
    return decode_complex_matrix(obj, path)


def _decode_design(obj, d: int) -> TwoDesign:
    if obj is None or obj == "mub":
        return mub_design(d)
    if isinstance(obj, dict):
        if "vectors" not in obj:
            raise SchemeFormatError("design: inline design needs a 'vectors' field")
        vecs = decode_complex_matrix(obj["vectors"], "design.vectors")
        return TwoDesign(vecs, obj.get("weights"), int(obj.get("basis_size", 0)))
    raise SchemeFormatError(f"design: expected 'mub' or an inline object, got {obj!r}")


def job_from_dict(obj: dict) -> CertifyJob:
    if not isinstance(obj, dict):
        raise SchemeFormatError("job: expected a JSON object")
    for key in ("d", "rho", "rho0", "eps"):
        if key not in obj:
            raise SchemeFormatError(f"job: missing field '{key}'")
    d = int(obj["d"])
    design = _decode_design(obj.get("design"), d)
    eps = float(obj["eps"])
    n = obj.get("n")
    n = required_copies(d, design.k, eps, float(obj.get("copies_constant", COPIES_CONSTANT))) if n is None else int(n)
    tester = TesterConfig(**obj.get("tester", {}))
    return CertifyJob(
        d=d,
        design=design,
        rho=_decode_state(obj["rho"], d, "rho"),
        rho0=_decode_state(obj["rho0"], d, "rho0"),
        eps=eps,
        n=n,
        seed=int(obj.get("seed", 0)),
        rho0_known=bool(obj.get("rho0_known", True)),
        tester=tester,
    )


def load_job(text: str) -> CertifyJob:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemeFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return job_from_dict(obj)


__all__ = [
    "YES",
    "NO",
    "CertifyJob",
    "Verdict",
    "GapAudit",
    "StateCertifier",
    "certify_state",
    "required_copies",
    "l2_threshold",
    "l2_gap_audit",
    "error_rate",
    "job_from_dict",
    "load_job",
]
