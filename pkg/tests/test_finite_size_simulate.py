"""Monte-Carlo abort checks against the analytic completeness bounds."""

import math

import numpy as np
import pytest

from diqkd.errors import ValidationError
from diqkd.finite_size import (
    HonestModel,
    completeness_eps_pe,
    ec_cost,
    simulate_pe_aborts,
    simulate_protocol_aborts,
)
from diqkd.numerics import binom_cdf
from diqkd.finite_size.simulate import _log2_hamming_ball


class TestPeAborts:
    def test_bracketed_by_analytic_tails(self):
        # The analytic completeness adds two overlapping tail events, so it
        # upper-bounds the simulated abort rate; either single tail lower
        # bounds it.
        n, gamma, w, delta = 2000, 0.2, 0.85, 0.02
        rng = np.random.default_rng(11)
        trials = 20000
        frac = simulate_pe_aborts(n, gamma, w, delta, trials, rng)
        upper = min(completeness_eps_pe(n, gamma, w, delta), 1.0)
        low_tail = binom_cdf(n, gamma * w, math.floor((w - delta) * gamma * n))
        slack = 3.0 * math.sqrt(0.25 / trials)
        assert low_tail - slack <= frac <= upper + slack

    def test_matches_exact_in_single_tail_regime(self):
        # With this tolerance the loss tail contributes ~6e-5, so the win
        # tail alone carries the bound and the union bound is tight.
        n, gamma, w, delta = 2000, 0.2, 0.85, 0.08
        rng = np.random.default_rng(13)
        trials = 20000
        frac = simulate_pe_aborts(n, gamma, w, delta, trials, rng)
        exact = completeness_eps_pe(n, gamma, w, delta)
        assert exact < 0.05
        assert frac == pytest.approx(exact, abs=0.01)

    def test_never_aborts_with_huge_tolerance(self):
        rng = np.random.default_rng(7)
        assert simulate_pe_aborts(1000, 0.2, 0.85, 0.3, 500, rng) == 0.0

    def test_validation(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ValidationError):
            simulate_pe_aborts(0, 0.2, 0.85, 0.02, 100, rng)
        with pytest.raises(ValidationError):
            simulate_pe_aborts(1000, 0.0, 0.85, 0.02, 100, rng)
        with pytest.raises(ValidationError):
            simulate_pe_aborts(1000, 0.2, 0.85, 0.02, 0, rng)


class TestHammingBall:
    def test_full_ball(self):
        assert _log2_hamming_ball(10, 10) == pytest.approx(10.0, abs=1e-12)

    def test_small_ball(self):
        assert _log2_hamming_ball(5, 1) == pytest.approx(math.log2(6.0), abs=1e-12)

    def test_single_point(self):
        assert _log2_hamming_ball(8, 0) == pytest.approx(0.0, abs=1e-12)


class TestProtocolAborts:
    def test_abort_rate_within_claimed_completeness(self):
        # Tolerance chosen so the analytic abort probability is small but
        # resolvable with a few thousand trials.
        model = HonestModel.depolarizing(q=0.05, gamma=0.1)
        n = 10000
        delta = 0.075
        eps_ec, eps_z = 1e-2, 5e-3
        eps_pe = completeness_eps_pe(n, model.gamma, model.winning_prob, delta)
        assert eps_pe < 0.05
        ec_max = ec_cost(model, n, eps_ec, eps_z, mode="theoretical")
        margin = 2.0 * math.log2(1.0 / (eps_ec - eps_z)) + 4.0
        frac = simulate_protocol_aborts(
            model, n, delta, ec_max, margin, trials=3000, seed=5
        )
        budget = eps_ec + eps_pe
        assert frac <= budget + 3.0 * math.sqrt(budget / 3000.0)

    def test_seed_determinism(self):
        model = HonestModel.depolarizing(q=0.05, gamma=0.1)
        a = simulate_protocol_aborts(model, 5000, 0.03, 10**4, 10.0, 500, seed=9)
        b = simulate_protocol_aborts(model, 5000, 0.03, 10**4, 10.0, 500, seed=9)
        assert a == b

    def test_validation(self):
        model = HonestModel.depolarizing(q=0.05, gamma=0.1)
        with pytest.raises(ValidationError):
            simulate_protocol_aborts(model, 0, 0.03, 10**4, 10.0, 100)
        with pytest.raises(ValidationError):
            simulate_protocol_aborts(model, 5000, 0.03, 10**4, 10.0, 0)
