"""Rate optimization over finite-size protocol parameters.

The search variables are the budget shares of the security targets, the
test fraction, and (for the accumulation bounds) the two Renyi orders.
The statistical tolerances are not searched. For any candidate test
fraction, the smallest round-test tolerance whose honest abort
probability fits its share of the completeness budget, and the smallest
soundness widening whose independence-reduction failure fits the
dominant soundness share, are derived by bisection; wider tolerances
only cost key rate, so the derived values are optimal given the rest.
Budgets are parametrized so the composed completeness and soundness
claims equal the requested targets exactly by construction, hence every
feasible decode satisfies all security constraints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from diqkd.errors import ComputeError, DomainError, ValidationError
from diqkd.numerics import nelder_mead
from diqkd.qubit_entropy import certified_bound_table
from diqkd.finite_size.keylength import (
    ALPHA_PRIME_MAX,
    V_PRIME,
    FiniteSizeParams,
    accumulation_rate,
    accumulation_rate_preshared,
    completeness_eps_pe,
    completeness_eps_pe_optcoll,
    ec_cost,
    eps_iid_collective,
    eps_iid_optcoll,
    keylength_collective,
    keylength_eat,
    keylength_optcoll,
    keylength_preshared,
    scaling_params,
    tradeoff_stats,
    tradeoff_stats_preshared,
    v_parameter,
)
from diqkd.finite_size.models import HonestModel

THEOREMS = ("eat", "collective", "optcoll", "preshared")

_BOX_PENALTY = 1e3
_SHORTFALL_VALUE = 1e4
_INFEASIBLE_VALUE = 1e6


@dataclass(frozen=True)
class OptimizeResult:
    """Outcome of a finite-size parameter search.

    rate is length/n, except for the pre-shared bound where it is the
    net gain (length - n)/n and may be negative. feasible is True only
    when some parameter choice met every security budget and certified
    a positive key length; otherwise diagnostics says what failed, and
    params still carries the best budget-satisfying choice if one was
    found.
    """

    params: FiniteSizeParams | None
    rate: float
    length: int
    evaluations: int
    feasible: bool
    diagnostics: tuple[str, ...] = ()


def _expit(t: float) -> float:
    t = min(30.0, max(-30.0, t))
    return 1.0 / (1.0 + math.exp(-t))


def _logit(u: float) -> float:
    return math.log(u / (1.0 - u))


def _soft_clip(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> tuple[np.ndarray, float]:
    clipped = np.minimum(np.maximum(x, lo), hi)
    overshoot = x - clipped
    return clipped, _BOX_PENALTY * float(np.dot(overshoot, overshoot))


def _smallest_feasible(f, budget: float, hi: float, iters: int = 50) -> float | None:
    """Smallest t in [0, hi] with f(t) <= budget, for nonincreasing f.

    Returns None when even f(hi) exceeds the budget. The bisection
    lands on the feasible side, so the result satisfies the budget and
    sits within one resolution step of the true boundary.
    """
    if f(0.0) <= budget:
        return 0.0
    if f(hi) > budget:
        return None
    lo = 0.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(mid) <= budget:
            hi = mid
        else:
            lo = mid
    return hi


class _Search:
    """Decoder from search vectors to protocol parameters for one theorem."""

    def __init__(self, theorem, model, n, eps_sound, eps_com, bound_p, bound_0):
        self.theorem = theorem
        self.model = model
        self.n = int(n)
        self.eps_sound = float(eps_sound)
        self.eps_com = float(eps_com)
        self.bound_p = bound_p
        self.bound_0 = bound_0
        self.w = model.winning_prob
        self.renyi = theorem in ("eat", "preshared")
        # Coordinates: three budget logits, log10 gamma, then for the
        # accumulation bounds log10(alpha-1) and log10(alpha'-1).
        lo = [-6.0, -6.0, -6.0, math.log10(max(4.0 / self.n, 1e-12))]
        hi = [6.0, 6.0, 6.0, math.log10(0.6)]
        if self.renyi:
            lo += [-13.0, -13.0]
            hi += [math.log10(0.45), math.log10(0.98 * (ALPHA_PRIME_MAX - 1.0))]
        self.lo = np.array(lo)
        self.hi = np.array(hi)

    def budgets(self, u_h: float, v: float, u_ec: float) -> dict:
        hash_terms = 1.0 if self.theorem == "optcoll" else 2.0
        eps_h = u_h * self.eps_sound / hash_terms
        r_budget = self.eps_sound * (1.0 - u_h)
        eps_s = 0.5 * (1.0 - v) * r_budget
        eps_ec = u_ec * self.eps_com
        return {
            "eps_h": eps_h,
            "r_budget": r_budget,
            "eps_pa": v * r_budget,
            "eps_s": eps_s,
            "eps_s1": 0.5 * eps_s,
            "eps_s2": 0.125 * eps_s,
            "eps_ea": r_budget,
            "eps_ec": eps_ec,
            "eps_z": 0.5 * eps_ec,
            "eps_pe": (1.0 - u_ec) * self.eps_com,
        }

    def decode(self, x: np.ndarray) -> dict:
        xb, pen_box = _soft_clip(np.asarray(x, dtype=float), self.lo, self.hi)
        b = self.budgets(_expit(xb[0]), _expit(xb[1]), _expit(xb[2]))
        gamma = 10.0 ** xb[3]
        n = self.n
        w = self.w
        if self.theorem == "optcoll":
            m = min(n - 1, max(1, round(gamma * n)))
            gamma = m / n

            def abort_prob(dt):
                return completeness_eps_pe_optcoll(n, gamma, w, dt, method="zs")
        else:
            def abort_prob(dt):
                return completeness_eps_pe(n, gamma, w, dt, method="zs")

        dt_hi = 0.98 * (w - 0.5)
        delta_tol = _smallest_feasible(abort_prob, b["eps_pe"], dt_hi)
        if delta_tol is None:
            return {
                "pen_box": pen_box,
                "shortfall": abort_prob(dt_hi) / b["eps_pe"],
            }
        alpha, alpha_prime = 1.001, 1.01
        if self.renyi:
            alpha = 1.0 + 10.0 ** xb[4]
            alpha_prime = 1.0 + 10.0 ** xb[5]
        ec_model = replace(self.model, gamma=gamma)
        ec = ec_cost(
            ec_model, n, b["eps_ec"], b["eps_z"], mode="theoretical", variant=self.theorem
        )
        params = FiniteSizeParams(
            n=n,
            gamma=gamma,
            p=self.model.p,
            ec_max=ec,
            w_exp=w,
            delta_tol=delta_tol,
            delta_sou=0.0,
            eps_ec=b["eps_ec"],
            eps_pe=b["eps_pe"],
            eps_ea=b["eps_ea"],
            eps_pa=b["eps_pa"],
            eps_h=b["eps_h"],
            eps_s=b["eps_s"],
            eps_s1=b["eps_s1"],
            eps_s2=b["eps_s2"],
            alpha=alpha,
            alpha_prime=alpha_prime,
        )
        if not self.renyi:
            iid_fn = eps_iid_optcoll if self.theorem == "optcoll" else eps_iid_collective

            def reduction_fail(ds):
                return iid_fn(replace(params, delta_sou=ds), method="zs")

            ds_hi = 0.98 * (w - delta_tol)
            delta_sou = _smallest_feasible(reduction_fail, b["r_budget"], ds_hi)
            if delta_sou is None:
                return {
                    "pen_box": pen_box,
                    "shortfall": reduction_fail(ds_hi) / b["r_budget"],
                }
            if delta_sou > 0.0:
                params = replace(params, delta_sou=delta_sou)
        if self.theorem == "eat":
            g = accumulation_rate(gamma, self.model.p, self.bound_p, self.bound_0)
            raw = keylength_eat(params, g, raw=True)
            rate_raw = raw / n
        elif self.theorem == "preshared":
            g = accumulation_rate_preshared(
                gamma, self.model.p, self.bound_p, self.bound_0
            )
            raw, net_raw = keylength_preshared(params, g, raw=True)
            rate_raw = net_raw / n
        elif self.theorem == "collective":
            g = accumulation_rate(gamma, self.model.p, self.bound_p, self.bound_0)
            raw, _ = keylength_collective(params, g, raw=True, iid_method="zs")
            rate_raw = raw / n
        else:
            g = None
            raw, _ = keylength_optcoll(params, self.bound_p, raw=True, iid_method="zs")
            rate_raw = raw / n
        return {
            "params": params,
            "g": g,
            "rate_raw": rate_raw,
            "pen_box": pen_box,
        }

    def objective(self, x: np.ndarray) -> float:
        try:
            d = self.decode(x)
        except (ValidationError, DomainError):
            return _INFEASIBLE_VALUE
        if "shortfall" in d:
            # Graded so the search is pulled toward the feasible region.
            return _SHORTFALL_VALUE * (1.0 + math.log10(d["shortfall"])) + d["pen_box"]
        if not math.isfinite(d["rate_raw"]):
            return _INFEASIBLE_VALUE
        return -d["rate_raw"] + d["pen_box"]

    def repair(self, x: np.ndarray, max_steps: int = 60) -> dict | None:
        """Deterministic walk to a feasible decode.

        A larger test fraction tightens both statistical estimates, so
        raising it resolves any tolerance shortfall the block size
        allows.
        """
        x = np.asarray(x, dtype=float).copy()
        x, _ = _soft_clip(x, self.lo, self.hi)
        for _ in range(max_steps):
            try:
                d = self.decode(x)
            except (ValidationError, DomainError):
                d = None
            if d is not None and "shortfall" not in d:
                return d
            if x[3] >= self.hi[3]:
                return None
            x[3] = min(x[3] + 0.2, self.hi[3])
        return None

    def finish(self, d: dict) -> tuple[int, float]:
        """Floored, clamped key length and the reported rate."""
        params = d["params"]
        if self.theorem == "eat":
            length = keylength_eat(params, d["g"])
            return length, length / self.n
        if self.theorem == "preshared":
            length, net = keylength_preshared(params, d["g"])
            return length, net / self.n
        if self.theorem == "collective":
            length, _ = keylength_collective(params, d["g"])
            return length, length / self.n
        length, _ = keylength_optcoll(params, self.bound_p)
        return length, length / self.n

    def warm_starts(self) -> list[np.ndarray]:
        n, w = self.n, self.w
        b = self.budgets(0.05, 0.05, 0.5)
        delta0 = min(n ** (-1.0 / 3.0), 0.5 * w)
        gamma0 = 3.0 * w * math.log2(2.0 / b["eps_pe"]) / (n * delta0**2)
        gamma0 = min(0.5, max(4.0 / n, gamma0))
        base = [_logit(0.05), _logit(0.05), 0.0, math.log10(gamma0)]
        if self.renyi:
            preshared = self.theorem == "preshared"
            rate_fn = accumulation_rate_preshared if preshared else accumulation_rate
            g0 = rate_fn(gamma0, self.model.p, self.bound_p, self.bound_0)
            stats_fn = tradeoff_stats_preshared if preshared else tradeoff_stats
            probe = FiniteSizeParams(
                n=n, gamma=gamma0, p=self.model.p, ec_max=0, w_exp=w,
                delta_tol=delta0, eps_ec=b["eps_ec"], eps_pe=b["eps_pe"],
                eps_ea=b["eps_ea"], eps_pa=b["eps_pa"], eps_h=b["eps_h"],
                eps_s=b["eps_s"], eps_s1=b["eps_s1"], eps_s2=b["eps_s2"],
            )
            v0 = v_parameter(stats_fn(probe, g0), preshared=preshared)
            sp = scaling_params(
                n, v0, V_PRIME,
                {k: b[k] for k in ("eps_s1", "eps_s2", "eps_ea", "eps_pe")},
                w,
            )
            base += [
                math.log10(max(sp.alpha - 1.0, 1e-12)),
                math.log10(max(sp.alpha_prime - 1.0, 1e-12)),
            ]
        first = np.array(base)
        second = first.copy()
        # The explicit gamma formula overshoots the optimum at key-positive
        # block sizes; a shifted start covers the other basin.
        if self.theorem == "optcoll":
            second[3] = min(math.log10(0.5), second[3] + 0.9)
        else:
            second[3] -= 0.6
        return [first, second]


def optimize_rate(
    model: HonestModel,
    n: int,
    eps_sound: float,
    eps_com: float,
    theorem: str = "eat",
    bound_p=None,
    bound_0=None,
    max_evals: int = 2000,
) -> OptimizeResult:
    """Best found key rate at block size n under exact security targets.

    Runs a simplex search from deterministic warm starts, deriving the
    statistical tolerances by bisection at every trial point, then
    repairs any residual shortfall. The claimed completeness and
    soundness of the returned parameters equal eps_com and eps_sound
    exactly; see ``security_composition``.
    """
    if theorem not in THEOREMS:
        raise ValidationError(f"theorem must be one of {THEOREMS}, got {theorem!r}")
    if n < 8:
        raise ValidationError(f"n must be at least 8, got {n}")
    for name, value in (("eps_sound", eps_sound), ("eps_com", eps_com)):
        if not 0.0 < value < 1.0:
            raise ValidationError(f"{name} must be in (0, 1), got {value}")
    if max_evals < 20:
        raise ValidationError(f"max_evals too small: {max_evals}")
    if bound_p is None:
        table = certified_bound_table()
        if float(model.p) not in table:
            raise ValidationError(
                f"no tabulated certificate for p = {model.p}; pass bound_p"
            )
        bound_p = table[float(model.p)]
    if bound_0 is None:
        bound_0 = certified_bound_table()[0.0]

    search = _Search(theorem, model, n, eps_sound, eps_com, bound_p, bound_0)
    evals = 0

    def counted(x):
        nonlocal evals
        evals += 1
        return search.objective(x)

    starts = search.warm_starts()
    dim = len(search.lo)
    step = np.array([0.8, 0.8, 0.8, 0.4] + [0.4] * (dim - 4))
    # A simplex step can finish up to dim evaluations past its budget, so
    # reserve that overshoot to keep the reported total within max_evals.
    per_run = max(10, max_evals // len(starts) - (dim + 3))
    best = None
    for x0 in starts:
        x_opt, _ = nelder_mead(
            counted,
            x0,
            options={
                "step": step,
                "max_evals": per_run,
                "restarts": 1,
                "x_tol": 1e-9,
                "f_tol": 1e-12,
            },
        )
        d = search.repair(x_opt)
        if d is None:
            continue
        length, rate = search.finish(d)
        if best is None or rate > best[1]:
            best = (length, rate, d["params"])
    if best is None:
        return OptimizeResult(
            params=None,
            rate=0.0,
            length=0,
            evaluations=evals,
            feasible=False,
            diagnostics=(
                "no parameter choice met the estimation and reduction budgets "
                "at this block size",
            ),
        )
    length, rate, params = best
    positive = rate > 0.0
    notes = () if positive else ("key length not positive at this block size",)
    return OptimizeResult(
        params=params,
        rate=rate,
        length=length,
        evaluations=evals,
        feasible=positive,
        diagnostics=notes,
    )


def minimal_positive_n(
    model: HonestModel,
    eps_sound: float,
    eps_com: float,
    theorem: str = "eat",
    bound_p=None,
    bound_0=None,
    max_evals: int = 2000,
    n_lo: float = 1e3,
    n_hi: float = 1e16,
    log10_tol: float = 0.05,
) -> float:
    """Smallest block size with positive key rate, by geometric bisection.

    Scans upward in decades from n_lo to bracket the threshold, then
    bisects in log10(n) to within log10_tol. Each probe runs one full
    ``optimize_rate`` call, so the result inherits its search quality.
    """

    def rate_at(n: float) -> float:
        result = optimize_rate(
            model, int(round(n)), eps_sound, eps_com, theorem,
            bound_p=bound_p, bound_0=bound_0, max_evals=max_evals,
        )
        return result.rate if result.feasible else 0.0

    lo = None
    n = n_lo
    hi = None
    prev = None
    while n <= n_hi * (1.0 + 1e-9):
        if rate_at(n) > 0.0:
            hi = n
            lo = prev if prev is not None else n / 10.0
            break
        prev = n
        n *= 10.0
    if hi is None:
        raise ComputeError(
            f"no positive key rate found up to n = {n_hi:.3g} for {theorem}"
        )
    while math.log10(hi / lo) > log10_tol:
        mid = math.sqrt(lo * hi)
        if rate_at(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return hi
