"""Quantum state certification with non-adaptive single-copy measurements.

Simulation toolkit around Lüders channels of rank-1 POVMs: 2-design
measurement schemes, spectra of the average channel, perturbation
ensembles with chi-square bounds, and a collision-based certification test.
"""

from .certify import (
    NO,
    YES,
    CertifyJob,
    StateCertifier,
    Verdict,
    certify_state,
    l2_gap_audit,
    required_copies,
)
from .closeness import ACCEPT, REJECT, L2ClosenessTester, TesterConfig, l2_statistic
from .designs import TwoDesign, check_two_design, design_to_povm, gell_mann_basis, mub_design
from .hardness import (
    PerturbationEnsemble,
    adversarial_ensemble,
    analytic_bound,
    chi_square_report,
    decoupled_bound,
    exact_chi_square,
    hard_instance_validity,
    opnorm_tail,
)
from .luders import LudersChannel, average_channel, channel_spectrum, choi_matrix, luders_apply
from .measurement import (
    MeasurementScheme,
    RankOnePovm,
    born_distribution,
    canonical_povm,
    hadamard_povm,
    load_scheme,
    dump_scheme,
    sample_outcomes,
    validate_povm,
)
from .states import maximally_mixed, plus_state, haar_pure_state, basis_state

__version__ = "0.1.0"
