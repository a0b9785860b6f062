"""Finite-size key length bounds for the one-sided CHSH protocol.

Four interchangeable bounds on the extractable key length of an n-round
run, all driven by the same affine entropy certificates:

- ``keylength_eat``: entropy accumulation against general attacks,
  with second-order terms controlled by the range and variance of the
  min-tradeoff function.
- ``keylength_collective``: the same protocol against collective
  attacks, where an asymptotic equipartition step replaces the
  accumulation overhead.
- ``keylength_optcoll``: a collective-attack protocol with a fixed-size
  test set, pre-agreed inputs (no sifting), and error correction on the
  generation rounds only.
- ``keylength_preshared``: accumulation with pre-shared input
  randomness, which removes sifting at the price of consuming n secret
  bits per run.

Every term is kept exactly as in the underlying security statements,
including floors, ceilings, and the choice of base-2 logarithms; the
only systematic substitution is the cancellation-prone smoothing term
log(1/(1 - sqrt(1 - eps^2))), replaced by its upper bound log(2/eps^2)
unless callers ask for the exact form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from diqkd.errors import DomainError, ValidationError
from diqkd.numerics import binary_entropy, binom_cdf, chernoff_abort_bounds, zs_upper_bound
from diqkd.qubit_entropy import certified_bound_table
from diqkd.finite_size.models import HonestModel, W_TSIRELSON

W_QUANTUM_MAX = W_TSIRELSON
W_QUANTUM_MIN = (2.0 - math.sqrt(2.0)) / 4.0

# Alphabet size of the error-correction transcript variable is 5, so the
# conditional-entropy variation per round is at most 2 log 5.
V_PRIME = 2.0 * math.log2(5.0)
ALPHA_PRIME_MAX = 1.0 + 2.0 / V_PRIME

C_PERP_MARGIN = 1e-6

_LOG2_33 = math.log2(33.0)
_LOG2_129 = math.log2(129.0)
# Dimension offsets 2 log 4 (sifted protocol) and 2 log 8 (pre-shared
# inputs enlarge the side-information register).
_OFFSET_MAIN = 4.0
_OFFSET_PRESHARED = 6.0

_PE_METHODS = ("exact", "zs", "chernoff")
_IID_METHODS = ("exact", "zs")


@dataclass(frozen=True)
class AffineWinRate:
    """Affine entropy certificate as a function of winning probability.

    Wraps a certificate in the score variable S into the variable
    w = (S + 4)/8 used by the finite-size analysis. The callable form
    never clips: the accumulation statements need the affine extension
    on all of [0, 1], where the certificate can be negative.
    """

    slope: float
    intercept: float

    def __post_init__(self) -> None:
        for name in ("slope", "intercept"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)

    def __call__(self, w: float) -> float:
        return self.slope * float(w) + self.intercept

    @classmethod
    def from_score_bound(cls, bound) -> AffineWinRate:
        """Convert a bound slope*(S-2)+intercept via S = 8w - 4."""
        return cls(
            slope=8.0 * bound.slope, intercept=bound.intercept - 6.0 * bound.slope
        )


def _lookup_bound(p: float):
    table = certified_bound_table()
    key = float(p)
    if key not in table:
        raise ValidationError(
            f"no tabulated certificate for p = {p}; pass the bound explicitly"
        )
    return table[key]


def accumulation_rate(gamma, p, bound_p=None, bound_0=None) -> AffineWinRate:
    """Rate function g of the accumulated entropy per round.

    Generation rounds (fraction 1-gamma, halved by sifting) accumulate
    preprocessed entropy; test rounds (fraction gamma) accumulate raw
    entropy. Both certificates are affine in w, so g is.
    """
    gen = AffineWinRate.from_score_bound(
        bound_p if bound_p is not None else _lookup_bound(p)
    )
    test = AffineWinRate.from_score_bound(
        bound_0 if bound_0 is not None else _lookup_bound(0.0)
    )
    c_gen = 0.5 * (1.0 - gamma)
    return AffineWinRate(
        slope=c_gen * gen.slope + gamma * test.slope,
        intercept=c_gen * gen.intercept + gamma * test.intercept,
    )


def accumulation_rate_preshared(gamma, p, bound_p=None, bound_0=None) -> AffineWinRate:
    """Rate function without the sifting factor, for pre-shared inputs."""
    gen = AffineWinRate.from_score_bound(
        bound_p if bound_p is not None else _lookup_bound(p)
    )
    test = AffineWinRate.from_score_bound(
        bound_0 if bound_0 is not None else _lookup_bound(0.0)
    )
    return AffineWinRate(
        slope=(1.0 - gamma) * gen.slope + gamma * test.slope,
        intercept=(1.0 - gamma) * gen.intercept + gamma * test.intercept,
    )


def g_of_w(w, gamma, p, bound_p=None, bound_0=None) -> float:
    """Accumulated entropy rate at winning probability w.

    Validated entry point: w must lie in the quantum-achievable range
    [(2-sqrt 2)/4, (2+sqrt 2)/4], gamma in [0, 1], p in [0, 1/2].
    """
    w = float(w)
    if not W_QUANTUM_MIN <= w <= W_QUANTUM_MAX:
        raise DomainError(
            f"w = {w} outside quantum range [{W_QUANTUM_MIN}, {W_QUANTUM_MAX}]"
        )
    if not 0.0 <= gamma <= 1.0:
        raise ValidationError(f"gamma must be in [0, 1], got {gamma}")
    if not 0.0 <= p <= 0.5:
        raise ValidationError(f"p must be in [0, 1/2], got {p}")
    return accumulation_rate(gamma, p, bound_p, bound_0)(w)


def smooth_penalty(eps: float, exact: bool = False) -> float:
    """Key-length cost of smoothing at parameter eps, in bits.

    Default is the bound log2(2/eps^2). The exact form
    log2(1/(1 - sqrt(1 - eps^2))) is evaluated cancellation-free as
    log2((1 + sqrt(1 - eps^2))/eps^2).
    """
    eps = float(eps)
    if not 0.0 < eps <= 1.0:
        raise ValidationError(f"eps must be in (0, 1], got {eps}")
    if exact:
        return math.log2((1.0 + math.sqrt(max(0.0, 1.0 - eps * eps))) / (eps * eps))
    return math.log2(2.0 / (eps * eps))


@dataclass(frozen=True)
class FiniteSizeParams:
    """Parameters of one finite-size run.

    n is the number of rounds, gamma the test fraction, p the
    preprocessing bias, ec_max the error-correction budget in bits,
    w_exp the expected winning probability, delta_tol the test
    tolerance, delta_sou the extra slack spent on the collective-attack
    reductions, and the eps_* fields the security parameters: error
    correction, parameter estimation, entropy accumulation, privacy
    amplification, hashing, and the three smoothing parameters, which
    must satisfy eps_s > eps_s1 + 2*eps_s2. alpha and alpha_prime are
    the two Renyi orders, with alpha in (1, 2) and alpha_prime in
    (1, 1 + 2/V') where V' = 2 log 5. c_perp, when given, is the value
    assigned to the tradeoff function off the protocol's support; it
    must lie between g(0) and g(1), which is checked where g is known.
    """

    n: int
    gamma: float
    p: float
    ec_max: int
    w_exp: float
    delta_tol: float
    eps_ec: float
    eps_pe: float
    eps_ea: float
    eps_pa: float
    eps_h: float
    eps_s: float
    eps_s1: float
    eps_s2: float
    delta_sou: float = 0.0
    alpha: float = 1.001
    alpha_prime: float = 1.01
    c_perp: float | None = None

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        if int(self.ec_max) != self.ec_max or self.ec_max < 0:
            raise ValidationError(
                f"ec_max must be a nonnegative integer, got {self.ec_max}"
            )
        object.__setattr__(self, "ec_max", int(self.ec_max))
        for name in (
            "gamma", "p", "w_exp", "delta_tol", "delta_sou",
            "eps_ec", "eps_pe", "eps_ea", "eps_pa", "eps_h",
            "eps_s", "eps_s1", "eps_s2", "alpha", "alpha_prime",
        ):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.c_perp is not None:
            object.__setattr__(self, "c_perp", float(self.c_perp))
        if not 0.0 < self.gamma <= 1.0:
            raise ValidationError(f"gamma must be in (0, 1], got {self.gamma}")
        if not 0.0 <= self.p <= 0.5:
            raise ValidationError(f"p must be in [0, 1/2], got {self.p}")
        if not 0.5 <= self.w_exp <= W_QUANTUM_MAX:
            raise ValidationError(
                f"w_exp must be in [1/2, {W_QUANTUM_MAX}], got {self.w_exp}"
            )
        if not 0.0 <= self.delta_tol < self.w_exp:
            raise ValidationError(
                f"delta_tol must be in [0, w_exp), got {self.delta_tol}"
            )
        if not 0.0 <= self.delta_sou < self.w_exp - self.delta_tol:
            raise ValidationError(
                f"delta_sou must be in [0, w_exp - delta_tol), got {self.delta_sou}"
            )
        for name in ("eps_ec", "eps_pe", "eps_ea", "eps_pa", "eps_h", "eps_s", "eps_s1", "eps_s2"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValidationError(f"{name} must be in (0, 1], got {v}")
        if not self.eps_s > self.eps_s1 + 2.0 * self.eps_s2:
            raise ValidationError(
                f"need eps_s > eps_s1 + 2 eps_s2, got {self.eps_s} vs "
                f"{self.eps_s1 + 2.0 * self.eps_s2}"
            )
        if not 1.0 < self.alpha < 2.0:
            raise ValidationError(f"alpha must be in (1, 2), got {self.alpha}")
        if not 1.0 < self.alpha_prime < ALPHA_PRIME_MAX:
            raise ValidationError(
                f"alpha_prime must be in (1, {ALPHA_PRIME_MAX}), got {self.alpha_prime}"
            )


@dataclass(frozen=True)
class TradeoffStats:
    """Range and variance statistics of the min-tradeoff function."""

    max_f: float
    min_f: float
    var_bound: float

    def __post_init__(self) -> None:
        for name in ("max_f", "min_f", "var_bound"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)
        if self.max_f < self.min_f:
            raise ValidationError(
                f"max_f = {self.max_f} below min_f = {self.min_f}"
            )
        if self.var_bound < 0.0:
            raise ValidationError(f"var_bound must be nonnegative, got {self.var_bound}")


def _stats_from_rate(g, gamma: float, c_perp, shift: float) -> TradeoffStats:
    # shift is 0 for the sifted protocol and 1 with pre-shared inputs,
    # where every tradeoff value rides on top of one certified bit.
    g0 = g(0.0)
    g1 = g(1.0)
    c = c_perp if c_perp is not None else shift + g1 - C_PERP_MARGIN
    lo = shift + g0
    hi = shift + g1
    if not lo <= c <= hi:
        raise DomainError(f"c_perp = {c} outside [{lo}, {hi}]")
    max_f = shift + g1 / gamma + (1.0 - 1.0 / gamma) * (c - shift)
    min_f = shift + g(W_QUANTUM_MIN)
    d0 = c - shift - g0
    d1 = c - shift - g1
    small = min(d0 * d0, d1 * d1)
    large = max(d0 * d0, d1 * d1)
    var = (W_QUANTUM_MIN * small + W_QUANTUM_MAX * large) / gamma
    return TradeoffStats(max_f=max_f, min_f=min_f, var_bound=var)


def tradeoff_stats(params: FiniteSizeParams, g) -> TradeoffStats:
    """Statistics of the min-tradeoff function built from rate g.

    The maximum comes from boosting the test-round contribution by
    1/gamma and assigning c_perp to the off-support value; the minimum
    is attained at the lowest quantum-achievable winning probability;
    the variance bound splits the support at that same point.
    """
    return _stats_from_rate(g, params.gamma, params.c_perp, shift=0.0)


def tradeoff_stats_preshared(params: FiniteSizeParams, g_tilde) -> TradeoffStats:
    """Same statistics for the pre-shared-inputs tradeoff function."""
    return _stats_from_rate(g_tilde, params.gamma, params.c_perp, shift=1.0)


def v_parameter(stats: TradeoffStats, preshared: bool = False) -> float:
    """Second-order coefficient V from a variance bound."""
    c = _LOG2_129 if preshared else _LOG2_33
    return math.sqrt(stats.var_bound + 2.0) + c


def _ln_pow2_plus_e2(x: float) -> float:
    # ln(2^x + e^2) without overflow; x >= 2/ln 2 in all uses here.
    t = x * math.log(2.0)
    if t >= 2.0:
        return t + math.log1p(math.exp(2.0 - t))
    return math.log(math.exp(t) + math.exp(2.0))


def _k_alpha(alpha: float, stats: TradeoffStats, offset_log: float) -> float:
    x = offset_log + stats.max_f - stats.min_f
    if (alpha - 1.0) * x > 960.0:
        return math.inf
    power = 2.0 ** ((alpha - 1.0) * x)
    cube = _ln_pow2_plus_e2(x) ** 3
    return power / (6.0 * (2.0 - alpha) ** 3 * math.log(2.0)) * cube


def _k_hat(stats: TradeoffStats, offset_log: float) -> float:
    x = offset_log + stats.max_f - stats.min_f
    if x > 960.0:
        return math.inf
    cube = _ln_pow2_plus_e2(x) ** 3
    return 2.0**x / (0.75 * math.log(2.0)) * cube


def k_alpha_coefficient(
    alpha: float, stats: TradeoffStats, preshared: bool = False
) -> float:
    """Second-order constant K_alpha of the accumulation bound."""
    if not 1.0 < alpha < 2.0:
        raise ValidationError(f"alpha must be in (1, 2), got {alpha}")
    return _k_alpha(alpha, stats, _OFFSET_PRESHARED if preshared else _OFFSET_MAIN)


def k_hat_coefficient(stats: TradeoffStats, preshared: bool = False) -> float:
    """Alpha-free replacement for K_alpha, valid for alpha < 3/2."""
    return _k_hat(stats, _OFFSET_PRESHARED if preshared else _OFFSET_MAIN)


def _accumulation_tail(
    params: FiniteSizeParams,
    stats: TradeoffStats,
    v: float,
    k_term: float,
    smf_exact: bool,
) -> float:
    """Every eq term after the leading n*g(...) one, with its sign."""
    n = params.n
    a = params.alpha
    ap = params.alpha_prime
    return (
        -n * (a - 1.0) * math.log(2.0) / 2.0 * v * v
        - n * (a - 1.0) ** 2 * k_term
        - n * params.gamma
        - n * (ap - 1.0) / 4.0 * V_PRIME**2
        - smooth_penalty(params.eps_s1, exact=smf_exact) / (a - 1.0)
        - smooth_penalty(params.eps_s2, exact=smf_exact) / (ap - 1.0)
        - (a / (a - 1.0) + ap / (ap - 1.0) - 2.0) * math.log2(1.0 / params.eps_ea)
        - 3.0 * smooth_penalty(params.eps_s - params.eps_s1 - 2.0 * params.eps_s2, exact=smf_exact)
        - params.ec_max
        - math.ceil(math.log2(1.0 / params.eps_h))
        - 2.0 * math.log2(1.0 / params.eps_pa)
        + 2.0
    )


def keylength_eat(
    params: FiniteSizeParams,
    g,
    stats: TradeoffStats | None = None,
    smf_exact: bool = False,
    use_k_hat: bool = False,
    raw: bool = False,
) -> int | float:
    """Key length secure against general attacks, clamped at zero.

    g must be the accumulation rate the parameters were built for;
    stats defaults to ``tradeoff_stats(params, g)``. With use_k_hat the
    alpha-dependent constant is replaced by its alpha-free upper bound,
    valid only for alpha < 3/2. With raw the unfloored, unclamped right
    hand side is returned, which optimizers need for slope information
    where the clamped length is zero.
    """
    if stats is None:
        stats = tradeoff_stats(params, g)
    if use_k_hat:
        if params.alpha >= 1.5:
            raise ValidationError("alpha-free constant needs alpha < 3/2")
        k_term = _k_hat(stats, _OFFSET_MAIN)
    else:
        k_term = _k_alpha(params.alpha, stats, _OFFSET_MAIN)
    v = v_parameter(stats)
    rhs = params.n * g(params.w_exp - params.delta_tol) + _accumulation_tail(
        params, stats, v, k_term, smf_exact
    )
    if raw:
        return rhs
    if not math.isfinite(rhs):
        return 0
    return max(0, math.floor(rhs))


def keylength_preshared(
    params: FiniteSizeParams,
    g_tilde,
    stats: TradeoffStats | None = None,
    smf_exact: bool = False,
    use_k_hat: bool = False,
    raw: bool = False,
) -> tuple[int, int] | tuple[float, float]:
    """Key length with pre-shared inputs and the net gain over the n bits spent.

    Returns (l_key, l_key - n). The tradeoff function gains a certified
    bit per round from the input randomness, the side-information
    register grows (offset 2 log 8, V constant log 129), and sifting
    disappears from the rate.
    """
    if stats is None:
        stats = tradeoff_stats_preshared(params, g_tilde)
    if use_k_hat:
        if params.alpha >= 1.5:
            raise ValidationError("alpha-free constant needs alpha < 3/2")
        k_term = _k_hat(stats, _OFFSET_PRESHARED)
    else:
        k_term = _k_alpha(params.alpha, stats, _OFFSET_PRESHARED)
    v = v_parameter(stats, preshared=True)
    lead = params.n * (1.0 + g_tilde(params.w_exp - params.delta_tol))
    rhs = lead + _accumulation_tail(params, stats, v, k_term, smf_exact)
    if raw:
        return rhs, rhs - params.n
    l_key = 0 if not math.isfinite(rhs) else max(0, math.floor(rhs))
    return l_key, l_key - params.n


def eps_iid_collective(params: FiniteSizeParams, method: str = "exact") -> float:
    """Failure probability of the reduction to independent rounds.

    "exact" evaluates the binomial tail, "zs" its analytic upper bound;
    the bound is safe wherever a soundness claim is made from it.
    """
    if method not in _IID_METHODS:
        raise ValidationError(f"method must be one of {_IID_METHODS}, got {method!r}")
    n = params.n
    gamma = params.gamma
    w_pass = params.w_exp - params.delta_tol
    k = math.floor((1.0 - w_pass * gamma) * n)
    p = 1.0 - (w_pass - params.delta_sou) * gamma
    if method == "zs":
        return min(1.0, zs_upper_bound(n, p, k))
    return binom_cdf(n, p, k)


def keylength_collective(
    params: FiniteSizeParams, g, raw: bool = False, iid_method: str = "exact"
) -> tuple[int, float] | tuple[float, float]:
    """Key length against collective attacks and the soundness it carries.

    The accumulation overhead is replaced by a single sqrt(n)
    equipartition correction; the soundness error picks up the failure
    probability of the independence reduction, which shrinks as
    delta_sou grows.
    """
    n = params.n
    rhs = (
        n * g(params.w_exp - params.delta_tol - params.delta_sou)
        - math.sqrt(n) * V_PRIME * math.sqrt(smooth_penalty(params.eps_s))
        - params.ec_max
        - math.ceil(math.log2(1.0 / params.eps_h))
        - 2.0 * math.log2(1.0 / params.eps_pa)
        + 2.0
    )
    soundness = (
        max(
            eps_iid_collective(params, method=iid_method),
            params.eps_pa + 2.0 * params.eps_s,
        )
        + 2.0 * params.eps_h
    )
    if raw:
        return rhs, soundness
    return max(0, math.floor(rhs)), soundness


def eps_iid_optcoll(params: FiniteSizeParams, method: str = "exact") -> float:
    """Independence-reduction failure for the fixed-test-set protocol."""
    if method not in _IID_METHODS:
        raise ValidationError(f"method must be one of {_IID_METHODS}, got {method!r}")
    m = round(params.gamma * params.n)
    k = math.floor((1.0 - params.w_exp + params.delta_tol) * m)
    p = 1.0 - params.w_exp + params.delta_tol + params.delta_sou
    if method == "zs":
        return min(1.0, zs_upper_bound(m, p, k))
    return binom_cdf(m, p, k)


def keylength_optcoll(
    params: FiniteSizeParams, bound_p=None, raw: bool = False, iid_method: str = "exact"
) -> tuple[int, float] | tuple[float, float]:
    """Key length of the collective protocol with a fixed test set.

    Inputs are pre-agreed, so the (1-gamma)n generation rounds need no
    sifting and error correction touches only them; test outcomes are
    public. Requires gamma*n to be an integer. The soundness error uses
    a single hashing term.
    """
    m_float = params.gamma * params.n
    m = round(m_float)
    if abs(m_float - m) > 1e-9 or m < 1:
        raise ValidationError(
            f"gamma * n must be a positive integer, got {m_float}"
        )
    sigma = AffineWinRate.from_score_bound(
        bound_p if bound_p is not None else _lookup_bound(params.p)
    )
    rounds = params.n - m
    rhs = (
        rounds * sigma(params.w_exp - params.delta_tol - params.delta_sou)
        - math.sqrt(rounds) * V_PRIME * math.sqrt(smooth_penalty(params.eps_s))
        - params.ec_max
        - math.ceil(math.log2(1.0 / params.eps_h))
        - 2.0 * math.log2(1.0 / params.eps_pa)
        + 2.0
    )
    soundness = (
        max(
            eps_iid_optcoll(params, method=iid_method),
            params.eps_pa + 2.0 * params.eps_s,
        )
        + params.eps_h
    )
    if raw:
        return rhs, soundness
    return max(0, math.floor(rhs)), soundness


@dataclass(frozen=True)
class ScalingParams:
    """Block-size-dependent choices that vanish at the right rates.

    n_ok records whether n is already large enough for the choices to
    satisfy the constraints alpha < 3/2, alpha' < 1 + 2/V', gamma < 1.
    """

    alpha: float
    alpha_prime: float
    gamma: float
    delta_tol: float
    n_ok: bool


def scaling_params(
    n: int,
    v: float,
    v_prime: float,
    eps_set: dict,
    w_exp: float,
    delta_coeff: float = 1.0,
) -> ScalingParams:
    """Renyi orders and test parameters with their optimal n-scaling.

    Both alpha - 1 and alpha' - 1 shrink as 1/sqrt(n), balancing the
    linear-in-n second-order terms against the divergent smoothing
    terms; delta_tol = delta_coeff * n^(-1/3) and gamma is sized so the
    one-sided test failure stays below eps_set["eps_pe"]. eps_set also
    needs keys eps_s1, eps_s2, eps_ea.
    """
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    if v <= 0.0 or v_prime <= 0.0:
        raise ValidationError("V coefficients must be positive")
    root_n = math.sqrt(n)
    two_log_ea = 2.0 * math.log2(1.0 / eps_set["eps_ea"])
    alpha = 1.0 + math.sqrt(
        2.0 * (smooth_penalty(eps_set["eps_s1"]) + two_log_ea) / (v * v * math.log(2.0))
    ) / root_n
    alpha_prime = 1.0 + math.sqrt(
        4.0 * (smooth_penalty(eps_set["eps_s2"]) + two_log_ea) / (v_prime * v_prime)
    ) / root_n
    delta_tol = delta_coeff * n ** (-1.0 / 3.0)
    gamma = 3.0 * w_exp * math.log2(2.0 / eps_set["eps_pe"]) / (n * delta_tol**2)
    n_ok = alpha < 1.5 and alpha_prime < ALPHA_PRIME_MAX and gamma < 1.0 and delta_tol < w_exp
    return ScalingParams(
        alpha=alpha,
        alpha_prime=alpha_prime,
        gamma=gamma,
        delta_tol=delta_tol,
        n_ok=n_ok,
    )


def completeness_eps_pe(
    n: int, gamma: float, w_exp: float, delta_tol: float, method: str = "exact"
) -> float:
    """Probability that honest devices fail the two-sided round test.

    The run aborts if the observed win frequency over all n rounds falls
    below (w_exp - delta_tol) gamma or the loss frequency exceeds
    (1 - w_exp + delta_tol) gamma. "exact" sums two binomial tails
    (switching internally to the analytic tail approximation for very
    large n), "zs" uses the normal-form upper bound on each tail, and
    "chernoff" the exponential moment bounds. Always in [0, 2].
    """
    if method not in _PE_METHODS:
        raise ValidationError(f"method must be one of {_PE_METHODS}, got {method!r}")
    if not 0.0 < gamma < 1.0:
        raise ValidationError(f"gamma must be in (0, 1), got {gamma}")
    if not 0.0 <= delta_tol <= w_exp:
        raise ValidationError(f"delta_tol must be in [0, w_exp], got {delta_tol}")
    if method == "chernoff":
        lower, upper = chernoff_abort_bounds(n, gamma, w_exp, delta_tol)
        return min(2.0, lower + upper)
    w_pass = w_exp - delta_tol
    k_win = math.floor(w_pass * gamma * n)
    k_noloss = math.floor((1.0 - gamma + w_pass * gamma) * n)
    p_win = gamma * w_exp
    p_noloss = 1.0 - gamma + gamma * w_exp
    if method == "zs":
        return min(2.0, zs_upper_bound(n, p_win, k_win) + zs_upper_bound(n, p_noloss, k_noloss))
    return min(2.0, binom_cdf(n, p_win, k_win) + binom_cdf(n, p_noloss, k_noloss))


def completeness_eps_pe_optcoll(
    n: int, gamma: float, w_exp: float, delta_tol: float, method: str = "exact"
) -> float:
    """Honest abort probability of the fixed-test-set protocol.

    The test checks only the win frequency over the m = gamma*n test
    rounds, so a single binomial tail appears.
    """
    if method not in _PE_METHODS:
        raise ValidationError(f"method must be one of {_PE_METHODS}, got {method!r}")
    m_float = gamma * n
    m = round(m_float)
    if abs(m_float - m) > 1e-9 or m < 1:
        raise ValidationError(f"gamma * n must be a positive integer, got {m_float}")
    if not 0.0 <= delta_tol <= w_exp:
        raise ValidationError(f"delta_tol must be in [0, w_exp], got {delta_tol}")
    k = math.floor((w_exp - delta_tol) * m)
    if method == "zs":
        return min(1.0, zs_upper_bound(m, w_exp, k))
    if method == "chernoff":
        lower, _ = chernoff_abort_bounds(m, 1.0, w_exp, delta_tol)
        return min(1.0, lower)
    return binom_cdf(m, w_exp, k)


_EC_VARIANTS = ("eat", "collective", "optcoll", "preshared")


def ec_cost(
    model: HonestModel,
    n: int,
    eps_ec: float,
    eps_z: float,
    mode: str = "theoretical",
    xi: float = 1.1,
    variant: str = "eat",
) -> int:
    """Error-correction budget in bits for an honest run of n rounds.

    "theoretical" sizes a one-shot protocol from the smooth max-entropy:
    rounds * h + sqrt(rounds) * 2 log 5 * sqrt(log2(2/eps_z^2))
    + 2 log2(1/(eps_ec - eps_z)) + 4, where h is the entropy rate of the
    honest devices for the chosen protocol variant. "practical" models a
    modern code at a multiple xi of the entropy rate. The failure budget
    splits as eps_z for the entropy estimate and eps_ec - eps_z for the
    verification hash.
    """
    if variant not in _EC_VARIANTS:
        raise ValidationError(f"variant must be one of {_EC_VARIANTS}, got {variant!r}")
    if mode not in ("theoretical", "practical"):
        raise ValidationError(f"mode must be theoretical or practical, got {mode!r}")
    if n < 1:
        raise ValidationError(f"n must be positive, got {n}")
    if variant == "optcoll":
        rounds = (1.0 - model.gamma) * n
        h = model.h_generation
    elif variant == "preshared":
        rounds = float(n)
        h = model.h_hon_preshared()
    else:
        rounds = float(n)
        h = model.h_hon()
    if mode == "practical":
        if xi < 1.0:
            raise ValidationError(f"xi must be at least 1, got {xi}")
        return math.ceil(xi * rounds * h)
    if not 0.0 < eps_z < eps_ec:
        raise ValidationError(
            f"need 0 < eps_z < eps_ec, got eps_z = {eps_z}, eps_ec = {eps_ec}"
        )
    bits = (
        rounds * h
        + math.sqrt(rounds) * V_PRIME * math.sqrt(smooth_penalty(eps_z))
        + 2.0 * math.log2(1.0 / (eps_ec - eps_z))
        + 4.0
    )
    return max(0, math.ceil(bits))


_THEOREMS = ("eat", "collective", "optcoll", "preshared")


def security_composition(params: FiniteSizeParams, theorem: str) -> tuple[float, float]:
    """(completeness, soundness) error pair claimed by each bound.

    Completeness is always eps_ec + eps_pe. Soundness composes as
    max(eps_dominant, eps_pa + 2 eps_s) plus the hashing terms, where
    the dominant error is the accumulation failure for "eat" and
    "preshared" and the independence-reduction failure for the
    collective bounds; "optcoll" verifies with a single hash.
    """
    if theorem not in _THEOREMS:
        raise ValidationError(f"theorem must be one of {_THEOREMS}, got {theorem!r}")
    completeness = params.eps_ec + params.eps_pe
    tail = params.eps_pa + 2.0 * params.eps_s
    if theorem in ("eat", "preshared"):
        soundness = max(params.eps_ea, tail) + 2.0 * params.eps_h
    elif theorem == "collective":
        soundness = max(eps_iid_collective(params), tail) + 2.0 * params.eps_h
    else:
        soundness = max(eps_iid_optcoll(params), tail) + params.eps_h
    return completeness, soundness


def asymptotic_keyrate(model: HonestModel, bound_p=None) -> float:
    """Infinite-block key rate the finite bounds approach.

    Half the rounds survive sifting; each contributes the certified
    entropy at the honest winning probability minus the error
    correction rate of the generation basis.
    """
    sigma = AffineWinRate.from_score_bound(
        bound_p if bound_p is not None else _lookup_bound(model.p)
    )
    return 0.5 * (sigma(model.winning_prob) - model.h_generation)
