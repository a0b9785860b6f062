"""Scalar special functions: binary entropy, binomial tails, Chernoff bounds.

Binomial CDFs are summed exactly in log space up to EXACT_BINOM_LIMIT trials;
beyond that an analytic upper bound on the CDF is substituted, which is the
conservative direction for every failure probability computed in this package.
"""

from __future__ import annotations

import math

import numpy as np

from diqkd.errors import DomainError, ValidationError

EXACT_BINOM_LIMIT = 10**6


def binary_entropy(x: float) -> float:
    """Binary entropy h(x) = -x log2(x) - (1-x) log2(1-x) in bits.

    Parameters
    ----------
    x : float
        Probability in [0, 1]. Values of 0 and 1 return 0 exactly.
    """
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"binary entropy needs x in [0,1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def _validate_binom(n, p, k) -> tuple[int, float, int]:
    if n != int(n) or int(n) < 1:
        raise ValidationError(f"trial count must be a positive integer, got {n}")
    n = int(n)
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"success probability must lie in [0,1], got {p}")
    k = int(math.floor(k))
    if k < 0 or k > n:
        raise DomainError(f"count k={k} outside [0, {n}]")
    return n, p, k


def _exact_binom_cdf(n: int, p: float, k: int) -> float:
    # Log binomial coefficients by the term recursion
    # log C(n,j+1) = log C(n,j) + log(n-j) - log(j+1), summed over exp().
    if k >= n:
        return 1.0
    lp = math.log(p)
    lq = math.log1p(-p)
    if k + 1 <= n - k:
        idx = np.arange(k + 1)
        if k >= 1:
            j = np.arange(k, dtype=float)
            logc = np.concatenate(([0.0], np.cumsum(np.log((n - j) / (j + 1.0)))))
        else:
            logc = np.zeros(1)
        logpmf = logc + idx * lp + (n - idx) * lq
        total = math.fsum(np.exp(logpmf).tolist())
        return min(1.0, total)
    # Shorter from the top: C(n, n-j) = C(n, j).
    m = n - k - 1
    j = np.arange(m + 1)
    if m >= 1:
        jj = np.arange(m, dtype=float)
        logc = np.concatenate(([0.0], np.cumsum(np.log((n - jj) / (jj + 1.0)))))
    else:
        logc = np.zeros(1)
    i = n - j
    logpmf = logc + i * lp + (n - i) * lq
    tail = math.fsum(np.exp(logpmf).tolist())
    return max(0.0, 1.0 - tail)


def binom_cdf(n, p, k) -> float:
    """P[X <= k] for X binomial with n trials and success probability p.

    Exact log-space summation for n <= 10^6. Larger n switches to an
    analytic upper bound on the CDF, so results stay conservative when the
    value feeds a failure-probability budget.
    """
    n, p, k = _validate_binom(n, p, k)
    if p == 0.0:
        return 1.0
    if p == 1.0:
        return 1.0 if k == n else 0.0
    if k == n:
        return 1.0
    if n <= EXACT_BINOM_LIMIT:
        return _exact_binom_cdf(n, p, k)
    return min(1.0, zs_point_value(n, p, k + 1))


def zs_point_value(n, p, k) -> float:
    """Gaussian-with-KL-exponent approximant to the binomial CDF at k.

    Evaluates Phi(sign(k/n - p) * sqrt(2 n G(k/n, p))) where G is the
    binary relative entropy in nats and Phi the standard normal CDF. For
    1 <= k <= n-1 this sandwiches the CDF between consecutive arguments:
    value(k) <= P[X <= k] <= value(k+1).
    """
    if n != int(n) or int(n) < 1:
        raise ValidationError(f"trial count must be a positive integer, got {n}")
    n = int(n)
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"need p strictly inside (0,1), got {p}")
    k = float(k)
    if k < 0 or k > n:
        raise DomainError(f"count k={k} outside [0, {n}]")
    x = k / n
    g = 0.0
    if x > 0.0:
        g += x * math.log(x / p)
    if x < 1.0:
        g += (1.0 - x) * math.log((1.0 - x) / (1.0 - p))
    g = max(g, 0.0)
    z = math.copysign(math.sqrt(2.0 * n * g), x - p)
    return 0.5 * (1.0 + math.erf(z / math.sqrt(2.0)))


def zs_upper_bound(n, p, k) -> float:
    """Upper bound on the binomial CDF P[X <= k], valid for any n.

    Applies the sandwich at the shifted argument: P[X <= k] <= value at
    k+1. Outside the sandwich's range (k < 0, k >= n, or degenerate p)
    the exact tail is returned instead.
    """
    if k < 0:
        return 0.0
    if k >= n:
        return 1.0
    p = float(p)
    if p <= 0.0:
        return 1.0
    if p >= 1.0:
        return 0.0
    return min(1.0, zs_point_value(n, p, math.floor(k) + 1))


def chernoff_abort_bounds(n, gamma, w_exp, delta_tol) -> tuple[float, float]:
    """Multiplicative Chernoff bounds on the two test-round tail events.

    Parameters
    ----------
    n : int
        Total rounds.
    gamma : float
        Testing probability in (0, 1].
    w_exp : float
        Expected winning probability, in (0, 1].
    delta_tol : float
        Absolute tolerance on the observed frequency; must not exceed
        w_exp so the relative deviation stays at most 1.

    Returns
    -------
    (lower_tail, upper_tail) : tuple of float
        exp(-n*gamma*delta^2/(2 w)) bounding the probability of falling
        delta below the mean, and exp(-n*gamma*delta^2/(3 w)) bounding
        the probability of rising delta above it.
    """
    if n != int(n) or int(n) < 1:
        raise ValidationError(f"trial count must be a positive integer, got {n}")
    if not 0.0 < gamma <= 1.0:
        raise ValidationError(f"test probability must lie in (0,1], got {gamma}")
    if not 0.0 < w_exp <= 1.0:
        raise ValidationError(f"winning probability must lie in (0,1], got {w_exp}")
    if delta_tol < 0.0:
        raise ValidationError(f"tolerance must be nonnegative, got {delta_tol}")
    if delta_tol > w_exp:
        raise ValidationError(
            f"relative deviation {delta_tol / w_exp:.3f} exceeds 1; bound invalid"
        )
    expo = int(n) * gamma * delta_tol**2 / w_exp
    return math.exp(-expo / 2.0), math.exp(-expo / 3.0)
