"""Single-round conditional entropy bounds for two-qubit strategies.

States live in an almost-Bell-diagonal pattern (two real 2x2 blocks in
the Bell basis), where the Eve-conditional entropy of Alice's binned
outcome has a fast two-block form and the constrained minimization over
states, Bob's direction, and Alice's angle can each be certified.
"""

from diqkd.qubit_entropy.bounds import (
    DETECTION_FAMILIES,
    EntropyBound,
    PROVENANCES,
    asymptotic_rate_depol,
    bounds_from_csv,
    bounds_to_csv,
    certified_bound_table,
    chsh_of_depolarizing,
    closed_form_bound,
    depolarizing_threshold,
    detection_threshold,
    optimized_preprocessing_threshold,
    single_constraint_conversion,
)
from diqkd.qubit_entropy.certify import (
    FwResult,
    ThetaAResult,
    ThetaBResult,
    certify_over_theta_a,
    certify_over_theta_b,
    continuity_penalty,
    frank_wolfe_certify,
    fw_linear_step,
    heuristic_c_lambda,
    heuristic_state_minimum,
)
from diqkd.qubit_entropy.entropy import (
    cond_entropy_given_eve,
    objective_gradient,
    objective_value,
    two_party_entropy,
)
from diqkd.qubit_entropy.states import (
    BELL_TRANSFORM,
    AlmostBellDiagonalState,
    ObjectiveSpec,
    bob_direction,
    plane_observable,
)

__all__ = [
    "AlmostBellDiagonalState",
    "BELL_TRANSFORM",
    "DETECTION_FAMILIES",
    "EntropyBound",
    "FwResult",
    "ObjectiveSpec",
    "PROVENANCES",
    "ThetaAResult",
    "ThetaBResult",
    "asymptotic_rate_depol",
    "bob_direction",
    "bounds_from_csv",
    "bounds_to_csv",
    "certified_bound_table",
    "certify_over_theta_a",
    "certify_over_theta_b",
    "chsh_of_depolarizing",
    "closed_form_bound",
    "cond_entropy_given_eve",
    "continuity_penalty",
    "depolarizing_threshold",
    "detection_threshold",
    "frank_wolfe_certify",
    "fw_linear_step",
    "heuristic_c_lambda",
    "heuristic_state_minimum",
    "objective_gradient",
    "objective_value",
    "optimized_preprocessing_threshold",
    "plane_observable",
    "single_constraint_conversion",
    "two_party_entropy",
]
