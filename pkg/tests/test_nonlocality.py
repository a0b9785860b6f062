import numpy as np
import pytest
from fractions import Fraction
from itertools import product

from diqkd.errors import DomainError, ValidationError
from diqkd.nonlocality import (
    PAULI_X,
    PAULI_Z,
    BipartiteDistribution,
    QubitStrategy,
    apply_depolarizing,
    apply_detection_efficiency,
    check_ns,
    chsh_score,
    deterministic_ns_is_product,
    distribution_from_strategy,
    lhv_optimum,
    outcome_sign,
    pr_box,
    symmetrize_outputs,
)

SQRT2 = np.sqrt(2.0)


def ideal_chsh_strategy() -> QubitStrategy:
    phi = np.zeros((4, 4))
    phi[0, 0] = phi[0, 3] = phi[3, 0] = phi[3, 3] = 0.5
    return QubitStrategy(
        phi,
        (PAULI_Z, PAULI_X),
        ((PAULI_Z + PAULI_X) / SQRT2, (PAULI_Z - PAULI_X) / SQRT2),
    )


def random_strategy(rng) -> QubitStrategy:
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = g @ g.conj().T
    rho /= np.trace(rho).real

    def rand_obs():
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        return v[0] * PAULI_X + v[1] * np.array(
            [[0, -1j], [1j, 0]]
        ) + v[2] * PAULI_Z

    return QubitStrategy(rho, (rand_obs(), rand_obs()), (rand_obs(), rand_obs()))


def product_distribution() -> BipartiteDistribution:
    pa = np.array([[0.7, 0.3], [0.4, 0.6]])
    pb = np.array([[0.2, 0.8], [0.5, 0.5]])
    t = np.einsum("xa,yb->xyab", pa, pb)
    return BipartiteDistribution(t)


class TestBipartiteDistribution:
    def test_rejects_negative(self):
        t = np.full((1, 1, 2, 2), 0.25)
        t[0, 0, 0, 0] = -0.001
        t[0, 0, 1, 1] = 0.251
        with pytest.raises(ValidationError):
            BipartiteDistribution(t)

    def test_rejects_unnormalized(self):
        with pytest.raises(ValidationError):
            BipartiteDistribution(np.full((1, 1, 2, 2), 0.3))

    def test_text_round_trip_is_exact(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        again = BipartiteDistribution.from_text(d.to_text())
        assert np.array_equal(d.table, again.table)
        assert again.na == d.na and again.nb == d.nb

    def test_from_text_rejects_garbage(self):
        with pytest.raises(ValidationError):
            BipartiteDistribution.from_text("not a table")


class TestCheckNs:
    def test_product_distribution(self):
        ok, viol = check_ns(product_distribution())
        assert ok and viol < 1e-12

    def test_pr_box(self):
        ok, _ = check_ns(pr_box())
        assert ok

    def test_signalling_table(self):
        t = np.zeros((2, 2, 2, 2))
        t[0, 0, 0, 0] = 1.0
        t[0, 1, 1, 0] = 1.0
        t[1, 0, 0, 0] = 1.0
        t[1, 1, 0, 0] = 1.0
        ok, viol = check_ns(BipartiteDistribution(t))
        assert not ok and viol > 0.5


class TestChshScore:
    def test_ideal_strategy(self):
        s, w = chsh_score(distribution_from_strategy(ideal_chsh_strategy()))
        assert abs(s - 2.0 * SQRT2) < 1e-12
        assert abs(w - (2.0 + SQRT2) / 4.0) < 1e-12

    def test_uniform_outputs(self):
        s, w = chsh_score(BipartiteDistribution(np.full((2, 2, 2, 2), 0.25)))
        assert s == 0.0 and w == 0.5

    def test_score_winning_relation(self):
        d = apply_depolarizing(distribution_from_strategy(ideal_chsh_strategy()), 0.07)
        s, w = chsh_score(d)
        assert abs(w - (s + 4.0) / 8.0) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            chsh_score(BipartiteDistribution(np.full((1, 1, 2, 2), 0.25)))


class TestApplyDepolarizing:
    def test_identity_at_zero(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        assert np.allclose(apply_depolarizing(d, 0.0).table, d.table)

    def test_uniform_at_half(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        assert np.allclose(apply_depolarizing(d, 0.5).table, 0.25)

    def test_linearity_of_score(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        s0, _ = chsh_score(d)
        for q in (0.1, 0.25, 0.4):
            s, w = chsh_score(apply_depolarizing(d, q))
            assert abs(s - (1.0 - 2.0 * q) * s0) < 1e-12
            assert abs(w - ((1.0 - 2.0 * q) * (2.0 + SQRT2) / 4.0 + q)) < 1e-12

    def test_preserves_ns(self):
        d = apply_depolarizing(pr_box(), 0.3)
        ok, _ = check_ns(d)
        assert ok

    def test_out_of_range(self):
        d = pr_box()
        with pytest.raises(DomainError):
            apply_depolarizing(d, 0.6)
        with pytest.raises(DomainError):
            apply_depolarizing(d, -0.01)


class TestApplyDetectionEfficiency:
    def test_identity_at_one(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        assert np.allclose(apply_detection_efficiency(d, 1.0).table, d.table)

    def test_all_dark_bins_to_minus_one(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        out = apply_detection_efficiency(d, 0.0)
        for x, y in product(range(2), repeat=2):
            assert out.table[x, y, 1, 1] == 1.0

    def test_binned_marginal_identity(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        out = apply_detection_efficiency(d, 0.83)
        for x, y in product(range(2), repeat=2):
            before = d.alice_marginal(x, y)
            after = out.alice_marginal(x, y)
            corr0 = before[0] - before[1]
            corr1 = after[0] - after[1]
            assert abs(corr1 - (0.83 * corr0 - 0.17)) < 1e-12

    def test_keep_bob_perp_extends_alphabet(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        out = apply_detection_efficiency(d, 0.9, "keep_bob_perp")
        assert out.nb == (3, 3) and out.na == (2, 2)
        ok, _ = check_ns(out)
        assert ok
        # No-click mass on Bob's side is exactly 1 - eta.
        for x, y in product(range(2), repeat=2):
            assert abs(out.bob_marginal(x, y)[2] - 0.1) < 1e-12

    def test_binned_score_drop(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        eta = 0.92
        s, _ = chsh_score(apply_detection_efficiency(d, eta))
        expected = eta**2 * 2.0 * SQRT2 + 2.0 * (1.0 - eta) ** 2
        assert abs(s - expected) < 1e-12

    def test_unknown_mapping(self):
        with pytest.raises(ValidationError):
            apply_detection_efficiency(pr_box(), 0.9, "discard")


class TestDistributionFromStrategy:
    def test_perfect_correlation(self):
        phi = np.zeros((4, 4))
        phi[0, 0] = phi[0, 3] = phi[3, 0] = phi[3, 3] = 0.5
        d = distribution_from_strategy(
            QubitStrategy(phi, (PAULI_Z,), (PAULI_Z,))
        )
        assert abs(d.table[0, 0, 0, 0] - 0.5) < 1e-12
        assert abs(d.table[0, 0, 1, 1] - 0.5) < 1e-12
        assert d.table[0, 0, 0, 1] < 1e-12

    def test_maximally_mixed_is_uniform(self):
        d = distribution_from_strategy(
            QubitStrategy(np.eye(4) / 4.0, (PAULI_Z, PAULI_X), (PAULI_Z, PAULI_X))
        )
        assert np.allclose(d.table, 0.25)

    def test_random_strategies_are_ns(self):
        rng = np.random.default_rng(17)
        for _ in range(1000):
            d = distribution_from_strategy(random_strategy(rng))
            ok, viol = check_ns(d, tol=1e-10)
            assert ok, viol

    def test_quantum_scores_respect_tsirelson(self):
        rng = np.random.default_rng(19)
        for _ in range(200):
            s, _ = chsh_score(distribution_from_strategy(random_strategy(rng)))
            assert abs(s) <= 2.0 * SQRT2 + 1e-9

    def test_non_resolving_projectors(self):
        proj = np.diag([1.0, 0.0])
        with pytest.raises(ValidationError):
            distribution_from_strategy(np.eye(4) / 4.0, [(proj, proj)], [(proj, proj)])


class TestLhvOptimum:
    def test_chsh_equals_two(self):
        coeffs = [
            [
                [
                    [
                        Fraction((-1) ** (x * y) * outcome_sign(a) * outcome_sign(b))
                        for y in (0, 1)
                    ]
                    for x in (0, 1)
                ]
                for b in (0, 1)
            ]
            for a in (0, 1)
        ]
        val, (fa, fb) = lhv_optimum(coeffs, 2, 2)
        assert val == 2
        assert len(fa) == 2 and len(fb) == 2

    def test_constant_game(self):
        coeffs = [[[[Fraction(1, 4)] * 2] * 2] * 2] * 2
        val, _ = lhv_optimum(coeffs, 2, 2)
        assert val == 1

    def test_all_deterministic_ns_points_are_product(self):
        for fa in product(range(2), repeat=2):
            for fb in product(range(2), repeat=2):
                t = np.zeros((2, 2, 2, 2))
                for x, y in product(range(2), repeat=2):
                    t[x, y, fa[x], fb[y]] = 1.0
                assert deterministic_ns_is_product(BipartiteDistribution(t))

    def test_non_ns_deterministic_rejected(self):
        t = np.zeros((2, 2, 2, 2))
        t[0, 0, 0, 0] = 1.0
        t[0, 1, 1, 0] = 1.0
        t[1, 0, 0, 0] = 1.0
        t[1, 1, 0, 0] = 1.0
        with pytest.raises(ValidationError):
            deterministic_ns_is_product(BipartiteDistribution(t))

    def test_non_deterministic_rejected(self):
        with pytest.raises(ValidationError):
            deterministic_ns_is_product(pr_box())


class TestSymmetrizeOutputs:
    def test_symmetric_fixed_point(self):
        d = distribution_from_strategy(ideal_chsh_strategy())
        sym = symmetrize_outputs(d)
        again = symmetrize_outputs(sym)
        assert np.allclose(sym.table, again.table)

    def test_biased_deterministic(self):
        t = np.zeros((1, 1, 2, 2))
        t[0, 0, 0, 0] = 1.0
        sym = symmetrize_outputs(BipartiteDistribution(t))
        assert abs(sym.table[0, 0, 0, 0] - 0.5) < 1e-15
        assert abs(sym.table[0, 0, 1, 1] - 0.5) < 1e-15

    def test_marginals_become_uniform_and_qber_invariant(self):
        rng = np.random.default_rng(23)
        for _ in range(20):
            raw = rng.uniform(0.0, 1.0, size=(2, 2, 2, 2))
            raw /= raw.sum(axis=(2, 3), keepdims=True)
            d = BipartiteDistribution(raw)
            sym = symmetrize_outputs(d)
            for x, y in product(range(2), repeat=2):
                assert np.allclose(sym.alice_marginal(x, y), 0.5)
                qber = d.table[x, y, 0, 1] + d.table[x, y, 1, 0]
                qber_sym = sym.table[x, y, 0, 1] + sym.table[x, y, 1, 0]
                assert abs(qber - qber_sym) < 1e-12
