"""Monte Carlo checks of honest abort probabilities.

The completeness claims bound the probability that noisy but honest
devices trip the parameter-estimation test or overrun the
error-correction budget. These simulators draw whole protocol runs from
the honest model so tests can compare observed abort fractions against
the analytic bounds.
"""

from __future__ import annotations

import math

import numpy as np

from diqkd.errors import ValidationError
from diqkd.finite_size.models import HonestModel


def simulate_pe_aborts(
    n: int, gamma: float, w_exp: float, delta_tol: float, trials: int, rng
) -> float:
    """Fraction of honest runs failing the two-sided round test.

    Each round independently becomes a won test round (probability
    gamma*w_exp), a lost test round (gamma*(1-w_exp)), or a generation
    round. The run aborts when the win frequency over all n rounds drops
    below (w_exp - delta_tol)*gamma or the loss frequency exceeds
    (1 - w_exp + delta_tol)*gamma.
    """
    if n < 1 or trials < 1:
        raise ValidationError("n and trials must be positive")
    if not 0.0 < gamma < 1.0:
        raise ValidationError(f"gamma must be in (0, 1), got {gamma}")
    if not 0.0 <= delta_tol <= w_exp <= 1.0:
        raise ValidationError("need 0 <= delta_tol <= w_exp <= 1")
    counts = rng.multinomial(
        n, [gamma * w_exp, gamma * (1.0 - w_exp), 1.0 - gamma], size=trials
    )
    wins = counts[:, 0]
    losses = counts[:, 1]
    abort = (wins < (w_exp - delta_tol) * gamma * n) | (
        losses > (1.0 - w_exp + delta_tol) * gamma * n
    )
    return float(np.mean(abort))


def _log2_hamming_ball(m: int, errors: int) -> float:
    """log2 of the number of m-bit strings within Hamming distance errors."""
    if errors <= 0:
        return 0.0
    k = min(errors, m)
    j = np.arange(1, k + 1, dtype=float)
    # log C(m, j) by the ratio recursion, then a stable log-sum-exp.
    log_binom = np.concatenate(([0.0], np.cumsum(np.log((m - j + 1.0) / j))))
    peak = float(log_binom.max())
    total = peak + math.log(float(np.exp(log_binom - peak).sum()))
    return total / math.log(2.0)


def simulate_protocol_aborts(
    model: HonestModel,
    n: int,
    delta_tol: float,
    ec_max: int,
    decode_margin_bits: float,
    trials: int,
    seed: int = 0,
) -> float:
    """Fraction of honest runs aborting in estimation or reconciliation.

    Rounds split into won tests, lost tests, kept generation rounds
    (matched inputs, errors at the model's error probability), and
    sifted-out generation rounds that carry no reconciliation load. The
    syndrome requirement is scored by the information content of the
    observed error patterns: the run aborts when locating the generation
    errors plus the test losses needs more than ec_max minus the decode
    margin reserved for verification.
    """
    if n < 1 or trials < 1:
        raise ValidationError("n and trials must be positive")
    if ec_max < 0:
        raise ValidationError(f"ec_max must be nonnegative, got {ec_max}")
    gamma = model.gamma
    if not 0.0 < gamma < 1.0:
        raise ValidationError(f"model gamma must be in (0, 1), got {gamma}")
    w = model.winning_prob
    if not 0.0 <= delta_tol <= w:
        raise ValidationError(f"delta_tol must be in [0, w_exp], got {delta_tol}")
    rng = np.random.default_rng(seed)
    probs = [
        gamma * w,
        gamma * (1.0 - w),
        0.5 * (1.0 - gamma),
        0.5 * (1.0 - gamma),
    ]
    counts = rng.multinomial(n, probs, size=trials)
    wins = counts[:, 0]
    losses = counts[:, 1]
    kept = counts[:, 2]
    pe_abort = (wins < (w - delta_tol) * gamma * n) | (
        losses > (1.0 - w + delta_tol) * gamma * n
    )
    gen_errors = rng.binomial(kept, model.error_prob)
    budget = ec_max - decode_margin_bits
    ec_abort = np.empty(trials, dtype=bool)
    for i in range(trials):
        bits = _log2_hamming_ball(int(kept[i]), int(gen_errors[i]))
        bits += _log2_hamming_ball(int(wins[i] + losses[i]), int(losses[i]))
        ec_abort[i] = bits > budget
    return float(np.mean(pe_abort | ec_abort))
