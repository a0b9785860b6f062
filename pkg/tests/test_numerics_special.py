import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.stats

from diqkd.errors import DomainError, ValidationError
from diqkd.numerics import (
    binary_entropy,
    binom_cdf,
    chernoff_abort_bounds,
    zs_point_value,
    zs_upper_bound,
)


class TestBinaryEntropy:
    def test_half(self):
        assert binary_entropy(0.5) == 1.0

    def test_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_symmetry(self):
        for x in (0.1, 0.23, 0.4999):
            assert abs(binary_entropy(x) - binary_entropy(1.0 - x)) < 1e-14

    def test_reference_point(self):
        # High-precision evaluation of h(0.2556).
        assert abs(binary_entropy(0.2556) - 0.820033859495) < 1e-9

    def test_out_of_range(self):
        with pytest.raises(DomainError):
            binary_entropy(-0.01)
        with pytest.raises(DomainError):
            binary_entropy(1.01)


def exact_rational_cdf(n: int, p: Fraction, k: int) -> Fraction:
    return sum(
        Fraction(math.comb(n, i)) * p**i * (1 - p) ** (n - i) for i in range(k + 1)
    )


class TestBinomCdf:
    def test_fair_coin_ten_trials(self):
        assert abs(binom_cdf(10, 0.5, 5) - 638.0 / 1024.0) < 1e-12

    def test_full_range_is_one(self):
        assert binom_cdf(17, 0.3, 17) == 1.0

    def test_degenerate_p(self):
        assert binom_cdf(5, 0.0, 0) == 1.0
        assert binom_cdf(5, 1.0, 4) == 0.0
        assert binom_cdf(5, 1.0, 5) == 1.0

    def test_monotone_in_k(self):
        vals = [binom_cdf(40, 0.37, k) for k in range(41)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_matches_exact_rational_summation(self):
        rng = np.random.default_rng(3)
        for _ in range(40):
            n = int(rng.integers(1, 31))
            num = int(rng.integers(1, 100))
            p = Fraction(num, 100)
            k = int(rng.integers(0, n + 1))
            exact = exact_rational_cdf(n, p, k)
            assert abs(binom_cdf(n, num / 100.0, k) - float(exact)) < 1e-11

    def test_large_n_switches_to_upper_bound(self):
        n = 2 * 10**6
        p, k = 0.3, 599000
        ours = binom_cdf(n, p, k)
        exact = scipy.stats.binom.cdf(k, n, p)
        assert ours >= exact
        assert ours == zs_upper_bound(n, p, k)

    def test_out_of_range_k(self):
        with pytest.raises(DomainError):
            binom_cdf(10, 0.5, -1)
        with pytest.raises(DomainError):
            binom_cdf(10, 0.5, 11)

    def test_bad_n(self):
        with pytest.raises(ValidationError):
            binom_cdf(0, 0.5, 0)


class TestZsBounds:
    def test_center_is_half(self):
        assert abs(zs_point_value(50, 0.4, 20) - 0.5) < 1e-14

    def test_sandwich_on_random_grid(self):
        rng = np.random.default_rng(5)
        for _ in range(200):
            n = int(rng.integers(4, 1200))
            p = float(rng.uniform(0.05, 0.95))
            k = int(rng.integers(1, n))
            exact = binom_cdf(n, p, k)
            assert zs_point_value(n, p, k) <= exact + 1e-12
            assert exact <= zs_point_value(n, p, k + 1) + 1e-12

    def test_upper_bound_shifts_argument(self):
        assert zs_upper_bound(100, 0.8, 70) == min(1.0, zs_point_value(100, 0.8, 71))

    def test_reference_sandwich_point(self):
        exact = binom_cdf(100, 0.8, 70)
        assert zs_point_value(100, 0.8, 70) <= exact <= zs_upper_bound(100, 0.8, 70)
        assert abs(exact - 0.011248978720991605) < 1e-12

    def test_monotone_in_k(self):
        vals = [zs_point_value(60, 0.5, k) for k in range(61)]
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_edges_fall_back_to_exact(self):
        assert zs_upper_bound(10, 0.4, 10) == 1.0
        assert zs_upper_bound(10, 0.4, -1) == 0.0
        assert zs_upper_bound(10, 0.0, 5) == 1.0
        assert zs_upper_bound(10, 1.0, 5) == 0.0


class TestChernoffAbortBounds:
    def test_zero_tolerance_gives_ones(self):
        lo, hi = chernoff_abort_bounds(100, 0.5, 0.8, 0.0)
        assert lo == 1.0 and hi == 1.0

    def test_dominates_exact_tails(self):
        n, gamma, w, delta = 10**4, 0.1, 0.8, 0.05
        lo, hi = chernoff_abort_bounds(n, gamma, w, delta)
        mean = gamma * w
        exact_lo = binom_cdf(n, mean, math.floor(n * gamma * (w - delta)))
        exact_hi = 1.0 - binom_cdf(n, mean, math.ceil(n * gamma * (w + delta)) - 1)
        assert lo >= exact_lo
        assert hi >= exact_hi

    def test_hoeffding_is_worse_in_stated_regime(self):
        # exp(-2 n g^2 d^2) exceeds the upper-tail bound whenever 6g <= 1/w.
        n, gamma, w, delta = 5000, 0.05, 0.8, 0.04
        assert 6.0 * gamma <= 1.0 / w
        _, hi = chernoff_abort_bounds(n, gamma, w, delta)
        hoeffding = math.exp(-2.0 * n * gamma**2 * delta**2)
        assert hoeffding >= hi

    def test_excess_tolerance_raises(self):
        with pytest.raises(ValidationError):
            chernoff_abort_bounds(100, 0.5, 0.3, 0.4)
