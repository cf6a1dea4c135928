import json
import math

import numpy as np
import pytest
from sklearn.base import clone

from qcertify import certify as ct
from qcertify.closeness import TesterConfig
from qcertify.config import COPIES_CONSTANT
from qcertify.designs import mub_design
from qcertify.linalg import trace_norm
from qcertify.measurement import SchemeFormatError, encode_complex_matrix
from qcertify.states import basis_state, haar_pure_state, maximally_mixed, plus_state, random_density_matrix

EPS = 0.5


def test_required_copies_examples():
    assert ct.required_copies(2, 6, 0.5, 1) == 24
    assert ct.required_copies(2, 6, 0.25, 1) == 4 * 24
    assert ct.required_copies(5, 30, 0.5, 1) == 120
    with pytest.raises(ValueError):
        ct.required_copies(2, 6, 0.0, 1)
    with pytest.raises(ValueError):
        ct.required_copies(2, 6, 0.5, 0)


def test_default_constant_from_config():
    assert ct.required_copies(2, 6, 0.5) == math.ceil(COPIES_CONSTANT * 24)


def test_job_contract():
    t = mub_design(2)
    mm = maximally_mixed(2)
    with pytest.raises(ValueError):
        ct.CertifyJob(d=2, design=t, rho=mm, rho0=mm, eps=0.0, n=10)
    with pytest.raises(ValueError):
        ct.CertifyJob(d=2, design=t, rho=mm, rho0=mm, eps=0.5, n=0)
    with pytest.raises(ValueError):
        ct.CertifyJob(d=3, design=t, rho=mm, rho0=mm, eps=0.5, n=10)
    with pytest.raises(ValueError):
        ct.CertifyJob(d=2, design=t, rho=np.eye(2), rho0=mm, eps=0.5, n=10)


def test_gap_audit_mixed_is_uniform():
    t = mub_design(3)
    a = ct.l2_gap_audit(t, maximally_mixed(3), maximally_mixed(3))
    assert math.isclose(a.norm_sq, 1 / t.k, rel_tol=1e-12)
    assert a.gap_sq == 0 and a.norm_ok and a.gap_ok


def test_gap_audit_pauli_x_direct_sum():
    t = mub_design(2)
    x = np.array([[0, 1], [1, 0]])
    rho0 = maximally_mixed(2)
    rho = rho0 + 0.1 * x
    a = ct.l2_gap_audit(t, rho, rho0)
    # direct: only the X eigenbasis sees the shift, by +-0.1 each at weight 1/3
    direct = 2 * (0.1 / 3) ** 2
    assert abs(a.gap_sq - direct) <= 1e-10
    assert abs(a.gap_formula - direct) <= 1e-10


@pytest.mark.parametrize("d", [2, 3, 5])
def test_gap_audit_random_states(d):
    t = mub_design(d)
    rng = np.random.default_rng(d)
    for _ in range(20):
        a = ct.l2_gap_audit(t, random_density_matrix(d, rng), random_density_matrix(d, rng))
        assert a.norm_ok and a.gap_ok
    assert ct.l2_gap_audit(t, basis_state(d, 0), maximally_mixed(d)).norm_ok


@pytest.mark.parametrize("d", [2, 3, 5])
def test_far_pairs_have_l2_gap(d):
    t = mub_design(d)
    rng = np.random.default_rng(100 + d)
    eps, found = 0.3, 0
    while found < 50:
        rho, rho0 = random_density_matrix(d, rng, rank=1), random_density_matrix(d, rng)
        if trace_norm(rho - rho0) < eps:
            continue
        found += 1
        assert ct.l2_gap_audit(t, rho, rho0).gap_sq >= eps**2 / (t.k * (d + 1)) - 1e-15


def test_verdict_consistent_and_deterministic():
    t = mub_design(3)
    job = ct.CertifyJob(d=3, design=t, rho=plus_state(3), rho0=maximally_mixed(3), eps=EPS, n=100, seed=4)
    v = ct.certify_state(job)
    assert v == ct.certify_state(job)
    assert (v.decision == ct.NO) == (v.statistic >= v.threshold)
    assert v.n_used == 100


def test_amplified_verdict_consistent():
    t = mub_design(2)
    job = ct.CertifyJob(d=2, design=t, rho=basis_state(2, 0), rho0=maximally_mixed(2), eps=EPS, n=99, seed=1,
                        tester=TesterConfig(amplification=3))
    v = ct.certify_state(job)
    assert v.n_used == 99
    assert (v.decision == ct.NO) == (v.statistic >= v.threshold)


def test_calibrated_threshold_mode():
    t = mub_design(2)
    job = ct.CertifyJob(d=2, design=t, rho=maximally_mixed(2), rho0=maximally_mixed(2), eps=EPS, n=50, seed=2,
                        tester=TesterConfig(threshold_mode="calibrated", calibration_trials=200))
    v = ct.certify_state(job)
    assert v.decision in (ct.YES, ct.NO)


def test_stream_swap_leaves_verdict_unchanged():
    t = mub_design(2)
    for s in range(20):
        job = ct.CertifyJob(d=2, design=t, rho=maximally_mixed(2), rho0=maximally_mixed(2), eps=EPS, n=60, seed=s,
                            rho0_known=False)
        x, y, _ = ct._streams(job)
        a = ct.closeness_statistics(x, y, t.k)
        b = ct.closeness_statistics(y, x, t.k)
        assert a == b


def test_known_and_measured_reference_rates_agree():
    t = mub_design(2)
    mm = maximally_mixed(2)
    n, trials = ct.required_copies(2, t.k, EPS), 500
    a = ct.error_rate(t, mm, mm, EPS, n, trials, 1, ct.YES, rho0_known=True)
    b = ct.error_rate(t, mm, mm, EPS, n, trials, 2, ct.YES, rho0_known=False)
    se = math.sqrt((a * (1 - a) + b * (1 - b)) / trials)
    assert abs(a - b) <= 2 * se + 1e-12


def test_error_rate_independent_of_jobs():
    t = mub_design(2)
    mm = maximally_mixed(2)
    a = ct.error_rate(t, mm, mm, EPS, 30, 40, 3, ct.YES)
    b = ct.error_rate(t, mm, mm, EPS, 30, 40, 3, ct.YES, n_jobs=2)
    assert a == b


def test_mixed_null_accepted():
    t = mub_design(2)
    mm = maximally_mixed(2)
    n = ct.required_copies(2, t.k, EPS)
    assert 1 - ct.error_rate(t, mm, mm, EPS, n, 200, 10, ct.YES) >= 2 / 3


def test_zero_state_rejected():
    t = mub_design(2)
    n = ct.required_copies(2, t.k, EPS)
    assert 1 - ct.error_rate(t, basis_state(2, 0), maximally_mixed(2), EPS, n, 200, 11, ct.NO) >= 2 / 3


def test_design_not_fooled_by_plus_state():
    t = mub_design(5)
    n = ct.required_copies(5, t.k, EPS)
    assert 1 - ct.error_rate(t, plus_state(5), maximally_mixed(5), EPS, n, 200, 12, ct.NO) >= 2 / 3


def test_state_certifier_estimator():
    est = ct.StateCertifier(eps=EPS, random_state=3).fit(maximally_mixed(3))
    assert est.n_ == ct.required_copies(3, 12, EPS)
    assert est.predict(haar_pure_state(3, 1)) == ct.NO
    assert est.verdict(maximally_mixed(3)).decision in (ct.YES, ct.NO)
    assert clone(est).get_params()["eps"] == EPS
    with pytest.raises(ValueError):
        ct.StateCertifier(design="sic").fit(maximally_mixed(2))


def test_job_json_named_and_inline():
    job = ct.load_job(json.dumps({"d": 2, "eps": 0.5, "rho": "zero", "rho0": "mm", "seed": 3}))
    assert job.n == ct.required_copies(2, 6, 0.5) and job.rho0_known
    inline = {
        "d": 2, "eps": 0.5, "n": 40,
        "rho": encode_complex_matrix(basis_state(2, 1)),
        "rho0": encode_complex_matrix(maximally_mixed(2)),
        "design": {"vectors": encode_complex_matrix(mub_design(2).vectors), "basis_size": 2},
        "tester": {"amplification": 1},
    }
    job = ct.job_from_dict(json.loads(json.dumps(inline)))
    assert np.allclose(job.rho, basis_state(2, 1)) and job.n == 40


@pytest.mark.parametrize(
    "obj, match",
    [
        ({"d": 2, "eps": 0.5, "rho": "mm"}, "rho0"),
        ({"d": 2, "eps": 0.5, "rho": "nope", "rho0": "mm"}, "rho: unknown state"),
        ({"d": 2, "eps": 0.5, "rho": [[1, 0]], "rho0": "mm"}, r"rho\[0\]\[0\]"),
        ({"d": 2, "eps": 0.5, "rho": "mm", "rho0": "mm", "design": 3}, "design"),
    ],
)
def test_job_json_errors(obj, match):
    with pytest.raises(SchemeFormatError, match=match):
        ct.job_from_dict(obj)


def test_job_json_syntax_error():
    with pytest.raises(SchemeFormatError, match="line 1"):
        ct.load_job("{")
