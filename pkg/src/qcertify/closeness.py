"""Collision-based L2 closeness testing of two discrete samples.

With histograms ``X`` and ``Y`` of ``m`` samples each the statistic is::

    Z = sum_i (X_i - Y_i)^2 - X_i - Y_i

For multinomial samples ``E[Z] = m^2 ||p - q||^2 - m (||p||^2 + ||q||^2)``,
so ``Z`` is centred near zero when ``p = q`` and near ``m^2 ||p - q||^2``
when the distributions differ. The tester rejects when ``Z`` reaches a
threshold, by default ``threshold_constant * m^2 * eps2^2``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._random import derive_seed
from .config import THRESHOLD_CONSTANT
from .measurement import sample_from

ACCEPT = "ACCEPT"
REJECT = "REJECT"

#: Rejection threshold as a fraction of ``m^2 eps2^2``.
DEFAULT_THRESHOLD_CONSTANT = THRESHOLD_CONSTANT


@dataclass(frozen=True)
class TesterConfig:
    __test__ = False

    threshold_mode: str = "analytic"
    amplification: int = 1
    calibration_trials: int = 500
    target_type1: float = 1 / 3
    threshold_constant: float = DEFAULT_THRESHOLD_CONSTANT

    def __post_init__(self):
        if self.threshold_mode not in ("analytic", "calibrated"):
            raise ValueError(f"threshold_mode must be 'analytic' or 'calibrated', got {self.threshold_mode!r}")
        if self.amplification < 1 or self.amplification % 2 == 0:
            raise ValueError(f"amplification must be an odd positive integer, got {self.amplification}")
        if self.calibration_trials < 100:
            raise ValueError("calibration needs at least 100 trials")

    def to_dict(self) -> dict:
        return asdict(self)


def check_outcomes(samples, k: int) -> np.ndarray:
    s = np.asarray(samples, dtype=np.int64).reshape(-1)
    if s.size and (s.min() < 0 or s.max() >= k):
        raise ValueError(f"outcomes must lie in [0, {k}), got range [{s.min()}, {s.max()}]")
    return s


def tally(samples, k: int) -> np.ndarray:
    """Histogram of outcomes in ``[0, k)``."""
    return np.bincount(check_outcomes(samples, k), minlength=k)


def l2_statistic(x, y) -> float:
    """Collision statistic ``sum_i (X_i - Y_i)^2 - X_i - Y_i`` of two count vectors."""
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    if x.shape != y.shape:
        raise ValueError(f"count vectors have different alphabets: {x.shape} vs {y.shape}")
    if x.sum() != y.sum():
        raise ValueError(f"count vectors have different totals: {x.sum()} vs {y.sum()}")
    diff = (x - y).astype(float)
    return float(np.sum(diff**2 - x - y))


def analytic_threshold(m: int, eps2: float, constant: float = DEFAULT_THRESHOLD_CONSTANT) -> float:
    return constant * m**2 * eps2**2


def null_statistics(k: int, m: int, null_source, trials: int, seed: int) -> np.ndarray:
    """Statistic values for ``trials`` pairs of ``m``-sample draws from ``null_source``.

    Trial ``t`` draws its two streams from seeds derived from ``(seed, t)``.
    """
    p = np.asarray(null_source, dtype=float)
    if p.shape != (k,):
        raise ValueError(f"null distribution must have length {k}")
    out = np.empty(trials)
    for t in range(trials):
        a = tally(sample_from(p, m, derive_seed(seed, t, 0)), k)
        b = tally(sample_from(p, m, derive_seed(seed, t, 1)), k)
        out[t] = l2_statistic(a, b)
    return out


def calibrate_threshold(k: int, m: int, null_source, trials: int, target_type1: float, seed: int) -> float:
    """Empirical ``(1 - target_type1)`` quantile of the null statistic."""
    if trials < 100:
        raise ValueError(f"calibration needs at least 100 trials, got {trials}")
    z = null_statistics(k, m, null_source, trials, seed)
    # "higher" keeps rejections at or below the target rate on the calibration draws
    return float(np.quantile(z, 1 - target_type1, method="higher"))


def _split(s: np.ndarray, reps: int) -> list[np.ndarray]:
    m = len(s) // reps
    return [s[i * m : (i + 1) * m] for i in range(reps)]


def closeness_statistics(sx, sy, k: int, reps: int = 1) -> list[float]:
    sx = check_outcomes(sx, k)
    sy = check_outcomes(sy, k)
    if len(sx) != len(sy):
        raise ValueError(f"both sides need the same number of samples, got {len(sx)} and {len(sy)}")
    m = len(sx) // reps
    if m < 2:
        raise ValueError(f"need at least 2 samples per side per repetition, got {m}")
    return [l2_statistic(tally(a, k), tally(b, k)) for a, b in zip(_split(sx, reps), _split(sy, reps))]


def test_closeness_l2(sx, sy, eps2: float, cfg: TesterConfig = TesterConfig(), k: int | None = None,
                      threshold: float | None = None) -> str:
    """Decide ``p = q`` (ACCEPT) versus ``||p - q||_2 > eps2`` (REJECT).

    Samples are split evenly into ``cfg.amplification`` repetitions and the
    verdict is the majority vote. In calibrated mode pass the calibrated
    per-repetition ``threshold``.
    """
    if not eps2 > 0:
        raise ValueError(f"eps2 must be positive, got {eps2}")
    sx = np.asarray(sx, dtype=np.int64)
    sy = np.asarray(sy, dtype=np.int64)
    if k is None:
        k = int(max(sx.max(initial=0), sy.max(initial=0))) + 1
    stats = closeness_statistics(sx, sy, k, cfg.amplification)
    m = len(sx) // cfg.amplification
    if threshold is None:
        if cfg.threshold_mode == "calibrated":
            raise ValueError("calibrated mode needs an explicit threshold (see calibrate_threshold)")
        threshold = analytic_threshold(m, eps2, cfg.threshold_constant)
    rejects = sum(z >= threshold for z in stats)
    return REJECT if 2 * rejects > len(stats) else ACCEPT


test_closeness_l2.__test__ = False


class L2ClosenessTester(BaseEstimator):
    """Estimator wrapper around the collision closeness test.

    ``fit`` takes the reference outcome stream; ``predict`` returns ACCEPT
    or REJECT for a candidate stream of the same length.

    Parameters
    ----------
    eps2 : float
        L2 separation to detect.
    k : int
        Alphabet size.
    threshold_mode : {"analytic", "calibrated"}
        ``"calibrated"`` fits the threshold as a null quantile, using
        ``null_distribution`` passed to ``fit`` (or the empirical reference
        distribution when omitted).
    """

    def __init__(self, eps2=0.1, k=2, threshold_mode="analytic", amplification=1,
                 threshold_constant=DEFAULT_THRESHOLD_CONSTANT, calibration_trials=500,
                 target_type1=1 / 3, random_state=0):
        self.eps2 = eps2
        self.k = k
        self.threshold_mode = threshold_mode
        self.amplification = amplification
        self.threshold_constant = threshold_constant
        self.calibration_trials = calibration_trials
        self.target_type1 = target_type1
        self.random_state = random_state

    def _config(self) -> TesterConfig:
        return TesterConfig(
            threshold_mode=self.threshold_mode,
            amplification=self.amplification,
            calibration_trials=self.calibration_trials,
            target_type1=self.target_type1,
            threshold_constant=self.threshold_constant,
        )

    def fit(self, X, y=None, null_distribution=None):
        cfg = self._config()
        if not self.eps2 > 0:
            raise ValueError(f"eps2 must be positive, got {self.eps2}")
        ref = check_outcomes(X, self.k)
        m = len(ref) // cfg.amplification
        if m < 2:
            raise ValueError(f"need at least 2 reference samples per repetition, got {m}")
        self.reference_ = ref
        self.m_ = m
        if cfg.threshold_mode == "calibrated":
            null = tally(ref, self.k) / len(ref) if null_distribution is None else np.asarray(null_distribution, float)
            self.threshold_ = calibrate_threshold(
                self.k, m, null, cfg.calibration_trials, cfg.target_type1, int(self.random_state)
            )
        else:
            self.threshold_ = analytic_threshold(m, self.eps2, cfg.threshold_constant)
        return self

    def statistics(self, X) -> list[float]:
        check_is_fitted(self, "threshold_")
        return closeness_statistics(X, self.reference_, self.k, self.amplification)

    def decision_function(self, X) -> float:
        """Median per-repetition statistic minus the threshold; positive means REJECT."""
        return float(np.median(self.statistics(X)) - self.threshold_)

    def predict(self, X) -> str:
        check_is_fitted(self, "threshold_")
        return test_closeness_l2(X, self.reference_, self.eps2, self._config(), k=self.k, threshold=self.threshold_)


def rejection_rate(p, q, m: int, eps2: float, trials: int, seed: int, cfg: TesterConfig = TesterConfig()) -> float:
    """Monte Carlo REJECT frequency when the two streams come from ``p`` and ``q``."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    k = len(p)
    hits = 0
    for t in range(trials):
        sx = sample_from(p, m, derive_seed(seed, t, 0))
        sy = sample_from(q, m, derive_seed(seed, t, 1))
        hits += test_closeness_l2(sx, sy, eps2, cfg, k=k) == REJECT
    return hits / trials


__all__ = [
    "ACCEPT",
    "REJECT",
    "TesterConfig",
    "L2ClosenessTester",
    "tally",
    "l2_statistic",
    "analytic_threshold",
    "calibrate_threshold",
    "null_statistics",
    "test_closeness_l2",
    "rejection_rate",
]
