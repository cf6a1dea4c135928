import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from qcertify import measurement as ms
from qcertify.designs import design_to_povm, mub_design
from qcertify.states import basis_state, maximally_mixed, plus_state, pure_state, random_density_matrix


def test_canonical_povm_complete():
    for d in (2, 3, 8):
        assert ms.validate_povm(ms.canonical_povm(d)).deviation == 0.0


def test_povm_rejects_ragged_and_incomplete():
    with pytest.raises(ValueError):
        ms.RankOnePovm([[1, 0], [1]])
    bad = ms.RankOnePovm(np.eye(2) * 0.9)
    assert not ms.validate_povm(bad).passed
    with pytest.raises(ValueError):
        ms.require_valid(bad)


def test_povm_vectors_read_only():
    p = ms.canonical_povm(2)
    with pytest.raises(ValueError):
        p.vectors[0, 0] = 5


@given(st.integers(0, 10_000), st.integers(2, 5), st.integers(0, 4))
def test_random_rank1_povm_complete(seed, d, extra):
    p = ms.random_rank1_povm(d, d + extra, np.random.default_rng(seed))
    assert p.completeness_deviation() <= 1e-12


def test_born_canonical_is_diagonal(rng):
    rho = random_density_matrix(4, rng)
    assert np.allclose(ms.born_distribution(ms.canonical_povm(4), rho), np.diag(rho).real)


def test_born_pure_state_overlaps():
    # |<psi_x|phi>|^2 for the Hadamard basis and |0>
    p = ms.born_distribution(ms.hadamard_povm(), basis_state(2, 0))
    assert np.allclose(p, [0.5, 0.5], atol=1e-15)
    phi = np.array([np.cos(0.3), np.sin(0.3)])
    p = ms.born_distribution(ms.hadamard_povm(), pure_state(phi))
    assert np.isclose(p[0], (np.cos(0.3) + np.sin(0.3)) ** 2 / 2)


def test_born_rejects_bad_state():
    with pytest.raises(ValueError):
        ms.born_distribution(ms.canonical_povm(2), np.diag([1.2, -0.2]))
    with pytest.raises(ValueError):
        ms.born_distribution(ms.canonical_povm(2), np.eye(3) / 3)


@given(st.integers(0, 10_000))
def test_born_is_probability_vector(seed):
    rng = np.random.default_rng(seed)
    povm = ms.random_rank1_povm(3, 5, rng)
    p = ms.born_distribution(povm, random_density_matrix(3, rng))
    assert np.all(p >= 0) and np.isclose(p.sum(), 1, atol=1e-12)


def test_sampling_matches_born_frequencies():
    rho = np.array([[0.7, 0.2], [0.2, 0.3]])
    povm = design_to_povm(mub_design(2))
    p = ms.born_distribution(povm, rho)
    s = ms.sample_outcomes(ms.MeasurementScheme.repeated(povm, 60_000), rho, seed=3)
    counts = np.bincount(s, minlength=povm.k)
    assert stats.chisquare(counts, p * len(s)).pvalue > 1e-3


def test_sampling_deterministic_and_prefix_stable():
    povm = ms.canonical_povm(3)
    rho = maximally_mixed(3)
    a = ms.sample_outcomes(ms.MeasurementScheme.repeated(povm, 50), rho, 11)
    b = ms.sample_outcomes(ms.MeasurementScheme.repeated(povm, 50), rho, 11)
    c = ms.sample_outcomes(ms.MeasurementScheme.repeated(povm, 80), rho, 11)
    assert np.array_equal(a, b)
    assert np.array_equal(a, c[:50])


def test_sampling_never_returns_zero_probability_outcome():
    s = ms.sample_from(np.array([0.5, 0.5, 0.0]), 10_000, 0)
    assert s.max() <= 1
    s = ms.sample_from(np.array([0.0, 1.0, 0.0]), 1000, 1)
    assert np.all(s == 1)


def test_mixed_scheme_uses_per_copy_povm():
    can, had = ms.canonical_povm(2), ms.hadamard_povm()
    scheme = ms.MeasurementScheme([can, had] * 500)
    s = ms.sample_outcomes(scheme, basis_state(2, 0), 0)
    assert np.all(s[0::2] == 0)
    assert 0.4 < s[1::2].mean() < 0.6


def test_scheme_dimension_mismatch():
    with pytest.raises(ValueError):
        ms.MeasurementScheme([ms.canonical_povm(2), ms.canonical_povm(3)])


def test_scheme_json_roundtrip_shared_and_mixed():
    shared = ms.MeasurementScheme.repeated(design_to_povm(mub_design(3)), 4)
    back = ms.load_scheme(ms.dump_scheme(shared))
    assert back.shared and back.n == 4
    assert np.allclose(back.povms[0].vectors, shared.povms[0].vectors)
    mixed = ms.MeasurementScheme([ms.canonical_povm(2), ms.hadamard_povm()])
    back = ms.load_scheme(ms.dump_scheme(mixed))
    assert not back.shared
    assert np.allclose(back.povms[1].vectors, ms.hadamard_povm().vectors)


def test_scheme_json_is_deterministic():
    s = ms.MeasurementScheme.repeated(ms.canonical_povm(2), 3)
    assert ms.dump_scheme(s) == ms.dump_scheme(s)


def test_load_scheme_reports_line_and_column():
    with pytest.raises(ms.SchemeFormatError, match="line 2, column"):
        ms.load_scheme('{"dim": 2,\n "copies": }')


@pytest.mark.parametrize(
    "mutate, where",
    [
        (lambda o: o.pop("dim"), "dim"),
        (lambda o: o.update(copies=0), "copies"),
        (lambda o: o["povms"][0][1].__setitem__(0, [1, 2, 3]), r"povms\[0\]\[1\]\[0\]"),
        (lambda o: o["povms"][0].__setitem__(0, [[2.0, 0.0], [0.0, 0.0]]), r"povms\[0\]: not a POVM"),
        (lambda o: o.update(format="other"), "format"),
    ],
)
def test_scheme_errors_name_the_field(mutate, where):
    obj = ms.scheme_to_dict(ms.MeasurementScheme.repeated(ms.canonical_povm(2), 2))
    mutate(obj)
    with pytest.raises(ms.SchemeFormatError, match=where):
        ms.scheme_from_dict(json.loads(json.dumps(obj)))


def test_plus_state_canonical_born_is_uniform():
    for d in (2, 4, 16):
        assert np.allclose(ms.born_distribution(ms.canonical_povm(d), plus_state(d)), 1 / d, atol=1e-15)
