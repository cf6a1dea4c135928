"""Reproducible experiments behind the command-line tool.

Every function returns a plain report dict::

    {format_version, experiment, parameters, seed, records, summary}

Reports hold no wall-clock data, so identical parameters and seed give
identical reports; the CLI adds timing only on request.
"""

from __future__ import annotations

import math
from pathlib import Path

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from ._random import derive_seed
from .certify import NO, YES, certify_state, error_rate, l2_gap_audit, load_job, required_copies
from .config import COPIES_CONSTANT, THRESHOLD_CONSTANT
from .designs import gell_mann_basis, is_prime, mub_design, design_to_povm
from .hardness import (
    DEFAULT_C,
    RangeError,
    PerturbationEnsemble,
    adversarial_ell,
    chi_square_report,
    copies_limit,
    hard_instance_trials,
)
from .linalg import trace_norm
from .luders import average_channel, channel_spectrum, spectrum_report
from .measurement import MeasurementScheme, born_distribution, canonical_povm, hadamard_povm, load_scheme
from .states import basis_state, haar_pure_state, maximally_mixed, plus_state

FORMAT_VERSION = 1
NAMED_SCHEMES = ("canonical", "hadamard", "mub")
CSV_HEADER = ["d", "C", "n", "type1", "type1_lo", "type1_hi", "type2", "type2_lo", "type2_hi"]

#: Seed of the Haar-random member of the far-state family.
FAR_HAAR_SEED = 12345


def report(experiment: str, parameters: dict, seed, records: list, summary: dict) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "experiment": experiment,
        "parameters": parameters,
        "seed": seed,
        "records": records,
        "summary": summary,
    }


def resolve_scheme(name_or_path: str, d: int | None, n: int | None) -> MeasurementScheme:
    """Named scheme (``canonical``, ``hadamard``, ``mub``) or a scheme JSON file.

    ``hadamard`` alternates the canonical and Hadamard bases (``d = 2``).
    A shared scheme loaded from file is re-expanded to ``n`` copies when
    ``n`` is given.
    """
    copies = 1 if n is None else n
    if name_or_path in NAMED_SCHEMES:
        if d is None:
            raise ValueError(f"scheme {name_or_path!r} needs --d")
        if name_or_path == "canonical":
            return MeasurementScheme.repeated(canonical_povm(d), copies)
        if name_or_path == "mub":
            return MeasurementScheme.repeated(design_to_povm(mub_design(d)), copies)
        if d != 2:
            raise ValueError("the hadamard scheme is defined for d=2 only")
        can, had = canonical_povm(2), hadamard_povm()
        return MeasurementScheme([can if i % 2 == 0 else had for i in range(copies)])
    path = Path(name_or_path)
    if not path.is_file():
        raise FileNotFoundError(f"scheme {name_or_path!r} is neither a named scheme {NAMED_SCHEMES} nor a file")
    scheme = load_scheme(path.read_text(encoding="utf-8"))
    if d is not None and scheme.d != d:
        raise ValueError(f"scheme file has dimension {scheme.d}, but --d is {d}")
    if n is not None and n != scheme.n:
        if not scheme.shared:
            raise ValueError(f"scheme file lists {scheme.n} distinct copies; cannot resize to n={n}")
        scheme = MeasurementScheme.repeated(scheme.povms[0], n)
    return scheme


def demo_fooling(d: int) -> dict:
    """Canonical-basis measurement cannot tell the plus state from the maximally mixed state."""
    if d < 2:
        raise ValueError(f"d must be at least 2, got {d}")
    rho, mm = plus_state(d), maximally_mixed(d)
    povm = canonical_povm(d)
    p, q = born_distribution(povm, rho), born_distribution(povm, mm)
    contrast = None
    if is_prime(d):
        audit = l2_gap_audit(mub_design(d), rho, mm)
        contrast = {"design": "mub", "k": d * (d + 1), "l2_gap_sq": audit.gap_sq, "l2_gap_formula": audit.gap_formula}
    return report(
        "demo-fooling",
        {"d": d},
        None,
        [{"outcome": i, "p_plus": float(p[i]), "p_mixed": float(q[i])} for i in range(d)],
        {
            "max_born_difference": float(np.max(np.abs(p - q))),
            "trace_norm": trace_norm(rho - mm),
            "trace_norm_expected": 2 * (1 - 1 / d),
            "mub_contrast": contrast,
            "notes": [] if contrast else ["MUB contrast needs prime d"],
        },
    )


def spectrum(scheme_name: str, d: int | None, n: int | None) -> dict:
    s = resolve_scheme(scheme_name, d, n)
    out = spectrum_report(average_channel(s))
    return report("spectrum", {"scheme": scheme_name, "d": s.d, "n": s.n}, None, [], out)


def _ensemble(s: MeasurementScheme, mode: str, ell: int | None, eps: float, c: float) -> PerturbationEnsemble:
    if mode == "adversarial":
        basis = channel_spectrum(average_channel(s)).basis()
    elif mode == "gell-mann":
        basis = gell_mann_basis(s.d)
    else:
        raise ValueError(f"ensemble mode must be 'adversarial' or 'gell-mann', got {mode!r}")
    return PerturbationEnsemble(basis=basis, ell=adversarial_ell(s.d) if ell is None else ell, eps=eps, c=c)


def bounds(scheme_name: str, d: int | None, n: int, eps: float, ell: int | None = None,
           ensemble: str = "adversarial", mode: str = "exact", trials: int = 10000, seed: int = 0,
           c: float = DEFAULT_C) -> dict:
    s = resolve_scheme(scheme_name, d, n)
    e = _ensemble(s, ensemble, ell, eps, c)
    limit = copies_limit(e)
    if not n < limit:
        raise RangeError(f"n={n} is outside the admissible range n < {limit:.6g}")
    r = chi_square_report(s, e, mode=mode, trials=trials, seed=seed)
    params = {"scheme": scheme_name, "d": s.d, "n": n, "eps": eps, "ell": e.ell, "c": c,
              "ensemble": ensemble, "mode": mode, "trials": trials if mode != "exact" else None}
    return report("bounds", params, seed, [], r.to_dict())


def hard_instance(d: int, ell: int, eps: float, trials: int, seed: int, scheme_name: str | None = None,
                  c: float = DEFAULT_C, kappa: float = 10.0) -> dict:
    e = PerturbationEnsemble(basis=gell_mann_basis(d), ell=ell, eps=eps, c=c)
    r = hard_instance_trials(e, trials, seed)
    valid = (r["opnorm"] <= 1.0 / d) & (r["tracenorm"] >= eps)
    records = [
        {"trial": t, "opnorm": float(r["opnorm"][t]), "tracenorm": float(r["tracenorm"][t]),
         "ratio": float(r["ratio"][t]), "valid": bool(valid[t])}
        for t in range(trials)
    ]
    ratios = np.sort(r["ratio"])
    summary = {
        "valid_fraction": float(np.mean(valid)),
        "lower_bound_1_minus_2exp_minus_d": 1 - 2 * math.exp(-d),
        "opnorm_tail": {
            "median": float(np.median(ratios)),
            "q99": float(np.quantile(ratios, 0.99)),
            "max": float(ratios[-1]),
            "kappa": kappa,
            "exceedance_rate": float(np.mean(ratios > kappa)),
        },
    }
    if scheme_name is not None:
        s = resolve_scheme(scheme_name, d, None)
        spec = channel_spectrum(average_channel(s))
        summary["adversarial_smallest_half_square_sum"] = spec.smallest_square_sum()
    params = {"d": d, "ell": ell, "eps": eps, "c": c, "trials": trials, "scheme": scheme_name}
    return report("hard-instance", params, seed, records, summary)


def far_states(d: int) -> dict:
    return {"zero": basis_state(d, 0), "plus": plus_state(d), "haar": haar_pure_state(d, FAR_HAAR_SEED)}


def _wilson(count: int, trials: int) -> tuple[float, float]:
    lo, hi = proportion_confint(count, trials, alpha=0.05, method="wilson")
    return float(lo), float(hi)


def power_cell(d: int, C: float, eps: float, trials: int, seed: int, n_divisor: int = 1, n_jobs: int = 1) -> dict:
    """Type-I rate against the maximally mixed state and worst type-II rate over the far family.

    The reference is the maximally mixed state, known exactly. Streams use
    common random numbers across ``C``: the seed depends on ``d`` and the
    state only.
    """
    design = mub_design(d)
    mm = maximally_mixed(d)
    n = max(2, required_copies(d, design.k, eps, C) // n_divisor)
    t1 = error_rate(design, mm, mm, eps, n, trials, derive_seed(seed, d, 0), YES, n_jobs=n_jobs)
    t2 = {
        name: error_rate(design, rho, mm, eps, n, trials, derive_seed(seed, d, j + 1), NO, n_jobs=n_jobs)
        for j, (name, rho) in enumerate(far_states(d).items())
    }
    worst = max(t2, key=lambda k: (t2[k], k))
    lo1, hi1 = _wilson(round(t1 * trials), trials)
    lo2, hi2 = _wilson(round(t2[worst] * trials), trials)
    return {
        "d": d, "C": C, "n": n,
        "type1": t1, "type1_lo": lo1, "type1_hi": hi1,
        "type2": t2[worst], "type2_lo": lo2, "type2_hi": hi2,
        "type2_worst_state": worst, "type2_by_state": t2,
    }


def power_curve(ds: list[int], eps: float, grid: list[float], trials: int, seed: int,
                n_divisor: int = 1, n_jobs: int = 1) -> dict:
    for d in ds:
        if not is_prime(d):
            raise ValueError(f"power curves need prime d (MUB designs), got {d}")
    records = [power_cell(d, C, eps, trials, seed, n_divisor, n_jobs) for d in ds for C in grid]
    summary = {
        "max_type1": max(r["type1"] for r in records),
        "max_type2": max(r["type2"] for r in records),
        "threshold_constant": THRESHOLD_CONSTANT,
    }
    params = {"d": ds, "eps": eps, "C": grid, "trials": trials, "n_divisor": n_divisor,
              "far_states": ["zero", "plus", f"haar:{FAR_HAAR_SEED}"]}
    return report("power-curve", params, seed, records, summary)


def power_curve_csv(rep: dict) -> str:
    lines = [",".join(CSV_HEADER)]
    for r in rep["records"]:
        lines.append(",".join(repr(r[h]) if isinstance(r[h], float) else str(r[h]) for h in CSV_HEADER))
    return "\n".join(lines) + "\n"


DEFAULT_GRID = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, 6.0, 8.0)


def calibrate(d: int = 2, eps: float = 0.5, grid=DEFAULT_GRID, trials: int = 1000, seed: int = 0,
              target: float = 0.2, n_jobs: int = 1) -> dict:
    """Smallest ``C`` on the grid whose type-I and worst type-II rates are both ``<= target``.

    The target sits below 1/3 so that the constant, fitted at one ``d``,
    keeps both error rates under 1/3 at larger ``d`` where the null
    statistic is relatively wider.
    """
    records = [power_cell(d, C, eps, trials, seed, 1, n_jobs) for C in grid]
    ok = [r for r in records if r["type1"] <= target and r["type2"] <= target]
    chosen = ok[0]["C"] if ok else None
    summary = {
        "copies_constant": chosen,
        "threshold_constant": THRESHOLD_CONSTANT,
        "current_copies_constant": COPIES_CONSTANT,
        "rule": f"smallest C with type1 <= {target} and worst type2 <= {target}",
    }
    params = {"d": d, "eps": eps, "C": list(grid), "trials": trials, "target": target}
    return report("calibrate", params, seed, records, summary)


def defaults_from_calibration(rep: dict) -> dict:
    s = rep["summary"]
    if s["copies_constant"] is None:
        raise ValueError("calibration found no admissible C on the grid")
    return {
        "copies_constant": s["copies_constant"],
        "threshold_constant": s["threshold_constant"],
        "calibration": {"seed": rep["seed"], **rep["parameters"], "rule": s["rule"]},
    }


def certify(job_text: str) -> dict:
    job = load_job(job_text)
    v = certify_state(job)
    params = {
        "d": job.d, "k": job.k, "eps": job.eps, "n": job.n, "rho0_known": job.rho0_known,
        "eps2": job.eps2, "tester": job.tester.to_dict(),
    }
    return report("certify", params, job.seed, [v.to_dict()], {"decision": v.decision})


def certify_job_dict(d: int, eps: float, rho: str, rho0: str, n: int | None, seed: int,
                     rho0_known: bool = True, C: float = COPIES_CONSTANT) -> dict:
    return {"d": d, "eps": eps, "rho": rho, "rho0": rho0, "n": n, "seed": seed,
            "rho0_known": rho0_known, "copies_constant": C, "design": "mub"}


__all__ = [
    "FORMAT_VERSION",
    "CSV_HEADER",
    "resolve_scheme",
    "demo_fooling",
    "spectrum",
    "bounds",
    "hard_instance",
    "power_cell",
    "power_curve",
    "power_curve_csv",
    "calibrate",
    "defaults_from_calibration",
    "certify",
]
