"""Numerical checks of the chi-squared lower-bound machinery."""

from .bases import basis_matrix, check_traceless_orthonormal, default_basis, gell_mann_basis, pauli_basis
from .chi2 import chi2_trace_margins, pseudo_inverse, quantum_chi2, support_contained
from .ingster import (
    AdversarialBasis,
    EnumerationTooLarge,
    TOperator,
    adversarial_basis,
    adversarial_bound,
    centralized_chi2_bound,
    ingster_suslina_check,
    ingster_suslina_sampled,
    lower_bound_scale,
    mgf_bound_probe,
    sandwich_norms,
    t_operator,
    z_quadratic_identity,
)
from .instance import (
    HardInstance,
    PerturbedState,
    all_sign_vectors,
    build_hard_instance,
    farness_fraction,
    perturbation_batch,
    perturbed_state,
)
from .weingarten import (
    compression_moment_exact,
    compression_moment_exact_weingarten,
    fourth_moment_probe,
    haar_twirl,
    paley_zygmund_bound,
    weingarten,
    weingarten_second_order,
)
