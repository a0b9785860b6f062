"""Finite-size key lengths, security budgets, and rate optimization.

Builds on the certified affine entropy bounds: four key length bounds
(accumulation, collective, fixed-test-set collective, pre-shared
inputs), the completeness and error-correction budgets they consume,
exact composition of the security claims, a parameter optimizer, and
Monte Carlo checks of the completeness side.
"""

from diqkd.finite_size.keylength import (
    ALPHA_PRIME_MAX,
    V_PRIME,
    W_QUANTUM_MAX,
    W_QUANTUM_MIN,
    AffineWinRate,
    FiniteSizeParams,
    ScalingParams,
    TradeoffStats,
    accumulation_rate,
    accumulation_rate_preshared,
    asymptotic_keyrate,
    completeness_eps_pe,
    completeness_eps_pe_optcoll,
    ec_cost,
    eps_iid_collective,
    eps_iid_optcoll,
    g_of_w,
    k_alpha_coefficient,
    k_hat_coefficient,
    keylength_collective,
    keylength_eat,
    keylength_optcoll,
    keylength_preshared,
    scaling_params,
    security_composition,
    smooth_penalty,
    tradeoff_stats,
    tradeoff_stats_preshared,
    v_parameter,
)
from diqkd.finite_size.models import W_TSIRELSON, HonestModel
from diqkd.finite_size.optimize import (
    THEOREMS,
    OptimizeResult,
    minimal_positive_n,
    optimize_rate,
)
from diqkd.finite_size.simulate import simulate_pe_aborts, simulate_protocol_aborts

__all__ = [
    "ALPHA_PRIME_MAX",
    "AffineWinRate",
    "FiniteSizeParams",
    "HonestModel",
    "OptimizeResult",
    "ScalingParams",
    "THEOREMS",
    "TradeoffStats",
    "V_PRIME",
    "W_QUANTUM_MAX",
    "W_QUANTUM_MIN",
    "W_TSIRELSON",
    "accumulation_rate",
    "accumulation_rate_preshared",
    "asymptotic_keyrate",
    "completeness_eps_pe",
    "completeness_eps_pe_optcoll",
    "ec_cost",
    "eps_iid_collective",
    "eps_iid_optcoll",
    "g_of_w",
    "k_alpha_coefficient",
    "k_hat_coefficient",
    "keylength_collective",
    "keylength_eat",
    "keylength_optcoll",
    "keylength_preshared",
    "minimal_positive_n",
    "optimize_rate",
    "scaling_params",
    "security_composition",
    "simulate_pe_aborts",
    "simulate_protocol_aborts",
    "smooth_penalty",
    "tradeoff_stats",
    "tradeoff_stats_preshared",
    "v_parameter",
]
