"""Magic-square game, its symmetries, and the NS hidden-variable LPs."""

import numpy as np
import pytest

from diqkd.errors import ValidationError
from diqkd.games import (
    ALICE_OUTPUTS,
    BOB_OUTPUTS,
    OBSERVABLE_GRID,
    chsh_bell_coefficients,
    guessing_probability_lp,
    ms_canonical_distribution,
    ms_explicit_ns_attack,
    ms_lhv_coefficients,
    ms_relabel,
    ms_win_prob,
    ms_wins,
    ns_hv_feasibility_lp,
)
from diqkd.nonlocality import (
    BipartiteDistribution,
    check_ns,
    chsh_score,
    lhv_optimum,
    pr_box,
)
from fractions import Fraction
from itertools import product


@pytest.fixture(scope="module")
def canonical():
    return ms_canonical_distribution()


@pytest.fixture(scope="module")
def attack():
    return ms_explicit_ns_attack()


def uniform_parity_table() -> BipartiteDistribution:
    t = np.full((3, 3, 4, 4), 1.0 / 16.0)
    return BipartiteDistribution(t, (4, 4, 4), (4, 4, 4))


class TestWinPredicate:
    def test_alphabets(self):
        assert len(ALICE_OUTPUTS) == 4 and len(BOB_OUTPUTS) == 4
        for s in ALICE_OUTPUTS:
            assert s.count("1") % 2 == 0
        for s in BOB_OUTPUTS:
            assert s.count("1") % 2 == 1

    def test_win_counts_per_input_pair(self):
        # At every input pair exactly half of the 16 output pairs win.
        for x, y in product(range(3), repeat=2):
            wins = sum(
                ms_wins(a, b, x, y) for a, b in product(range(4), repeat=2)
            )
            assert wins == 8

    def test_uniform_parity_outputs_win_half(self):
        assert ms_win_prob(uniform_parity_table()) == pytest.approx(0.5, abs=1e-12)

    def test_lhv_optimum_is_eight_ninths(self):
        value, _ = lhv_optimum(ms_lhv_coefficients(), 4, 4)
        assert value == Fraction(8, 9)

    def test_chsh_lhv_optimum_for_contrast(self):
        value, _ = lhv_optimum(chsh_bell_coefficients(), 2, 2)
        assert value == Fraction(2)


class TestCanonicalDistribution:
    def test_uniform_on_winners(self, canonical):
        t = canonical.dist.table
        for x, y in product(range(3), repeat=2):
            for a, b in product(range(4), repeat=2):
                want = 0.125 if ms_wins(a, b, x, y) else 0.0
                assert abs(t[x, y, a, b] - want) <= 1e-9

    def test_named_entry(self, canonical):
        assert canonical.prob("000", "001", 1, 1) == pytest.approx(0.125, abs=1e-12)

    def test_no_signalling(self, canonical):
        ok, viol = check_ns(canonical.dist, tol=1e-10)
        assert ok, viol

    def test_wins_perfectly(self, canonical):
        assert ms_win_prob(canonical) == pytest.approx(1.0, abs=1e-12)

    def test_observable_grid_products(self):
        eye = np.eye(4)
        for i in range(3):
            row = OBSERVABLE_GRID[i][0] @ OBSERVABLE_GRID[i][1] @ OBSERVABLE_GRID[i][2]
            assert np.abs(row - eye).max() < 1e-12
        for j in range(3):
            col = OBSERVABLE_GRID[0][j] @ OBSERVABLE_GRID[1][j] @ OBSERVABLE_GRID[2][j]
            assert np.abs(col + eye).max() < 1e-12

    def test_rows_and_columns_commute(self):
        for i in range(3):
            for j, k in ((0, 1), (0, 2), (1, 2)):
                a, b = OBSERVABLE_GRID[i][j], OBSERVABLE_GRID[i][k]
                assert np.abs(a @ b - b @ a).max() < 1e-12
                a, b = OBSERVABLE_GRID[j][i], OBSERVABLE_GRID[k][i]
                assert np.abs(a @ b - b @ a).max() < 1e-12


class TestRelabel:
    def test_identity_is_noop(self, canonical):
        for side in ("alice_out_bob_in", "bob_out_alice_in"):
            out = ms_relabel(canonical, (1, 2, 3), side=side)
            assert np.array_equal(out.dist.table, canonical.dist.table)

    def test_swap_is_involution(self, attack):
        for side in ("alice_out_bob_in", "bob_out_alice_in"):
            once = ms_relabel(attack, (1, 3, 2), side=side)
            twice = ms_relabel(once, (1, 3, 2), side=side)
            assert np.array_equal(twice.dist.table, attack.dist.table)

    def test_inverse_composition(self, canonical):
        fwd, inv = (2, 3, 1), (3, 1, 2)
        out = ms_relabel(ms_relabel(canonical, fwd), inv)
        assert np.abs(out.dist.table - canonical.dist.table).max() < 1e-15

    def test_win_probability_preserved(self, canonical, attack):
        noisy = BipartiteDistribution(
            0.7 * canonical.dist.table + 0.3 * uniform_parity_table().table,
            (4, 4, 4),
            (4, 4, 4),
        )
        for d in (canonical, attack, noisy):
            w = ms_win_prob(d)
            for side in ("alice_out_bob_in", "bob_out_alice_in"):
                out = ms_relabel(d, (2, 3, 1), side=side)
                assert ms_win_prob(out) == pytest.approx(w, abs=1e-12)
                assert check_ns(out.dist, tol=1e-10)[0]

    def test_swapped_attack_still_wins(self, attack):
        out = ms_relabel(attack, (1, 3, 2), side="bob_out_alice_in")
        assert ms_win_prob(out) == pytest.approx(1.0, abs=1e-12)

    def test_mapping_form_matches_tuple_form(self, attack):
        a = ms_relabel(attack, {1: 1, 2: 3, 3: 2}, side="bob_out_alice_in")
        b = ms_relabel(attack, (1, 3, 2), side="bob_out_alice_in")
        assert np.array_equal(a.dist.table, b.dist.table)

    def test_rejects_non_permutation(self, attack):
        with pytest.raises(ValidationError):
            ms_relabel(attack, (1, 1, 3))
        with pytest.raises(ValidationError):
            ms_relabel(attack, (1, 2, 3), side="both")


class TestExplicitAttack:
    def test_deterministic_at_first_pair(self, attack):
        assert attack.prob("000", "001", 1, 1) == 1.0
        block = attack.dist.table[0, 0]
        assert np.count_nonzero(block) == 1

    def test_no_signalling(self, attack):
        ok, viol = check_ns(attack.dist, tol=1e-12)
        assert ok, viol

    def test_alice_marginals_independent_of_y(self, attack):
        for x in range(3):
            base = attack.dist.alice_marginal(x, 0)
            for y in (1, 2):
                assert np.abs(attack.dist.alice_marginal(x, y) - base).max() == 0.0

    def test_wins_perfectly(self, attack):
        assert ms_win_prob(attack) == pytest.approx(1.0, abs=1e-12)

    def test_half_integer_entries(self, attack):
        vals = np.unique(attack.dist.table)
        assert set(vals.tolist()) <= {0.0, 0.5, 1.0}


class TestMixedAttack:
    def mixture(self, attack):
        rel = ms_relabel(attack, (1, 3, 2), side="bob_out_alice_in")
        half = 0.5 * attack.dist.table + 0.5 * rel.dist.table
        return BipartiteDistribution(half, (4, 4, 4), (4, 4, 4))

    def test_every_entry_at_most_half(self, attack):
        mix = self.mixture(attack)
        assert float(mix.table.max()) <= 0.5 + 1e-15

    def test_still_wins_and_ns(self, attack):
        mix = self.mixture(attack)
        assert ms_win_prob(mix) == pytest.approx(1.0, abs=1e-12)
        assert check_ns(mix, tol=1e-12)[0]

    def test_alice_side_relabel_keeps_unit_entry(self, attack):
        # The mirror relabeling fixes the deterministic cell at (1,1), so
        # the analogous mixture stays deterministic there.
        rel = ms_relabel(attack, (1, 3, 2), side="alice_out_bob_in")
        half = 0.5 * attack.dist.table + 0.5 * rel.dist.table
        assert float(half.max()) == 1.0


class TestFeasibilityLp:
    def test_canonical_eight_lambdas(self, canonical):
        model = ns_hv_feasibility_lp(canonical, 1, 1, n_lambda=8)
        assert model is not None
        assert len(model.weights) == 8
        assert np.abs(model.weights - 0.125).max() < 1e-7
        assert np.abs(model.mixture() - canonical.dist.table).max() < 1e-7
        for comp in model.components:
            block = comp.table[0, 0]
            big = block[block > 1e-7]
            assert big.size == 1 and abs(float(big[0]) - 1.0) < 1e-7
            assert check_ns(comp, tol=1e-7)[0]

    def test_two_lambda_mixture(self, attack):
        rel = ms_relabel(attack, (1, 3, 2), side="bob_out_alice_in")
        half = BipartiteDistribution(
            0.5 * attack.dist.table + 0.5 * rel.dist.table, (4, 4, 4), (4, 4, 4)
        )
        model = ns_hv_feasibility_lp(half, 1, 1, n_lambda=2)
        assert model is not None
        assert sorted(np.round(model.weights, 9).tolist()) == [0.5, 0.5]
        assert np.abs(model.mixture() - half.table).max() < 1e-7

    def test_deterministic_product_trivially_feasible(self):
        t = np.zeros((2, 2, 2, 2))
        t[:, :, 0, 0] = 1.0
        d = BipartiteDistribution(t, (2, 2), (2, 2))
        model = ns_hv_feasibility_lp(d, 1, 1)
        assert model is not None and len(model.weights) == 1
        assert model.weights[0] == pytest.approx(1.0, abs=1e-9)

    def test_pr_box_infeasible(self):
        assert ns_hv_feasibility_lp(pr_box(), 1, 1) is None

    def test_lambda_count_preconditions(self, canonical):
        with pytest.raises(ValidationError):
            ns_hv_feasibility_lp(canonical, 1, 1, n_lambda=17)
        with pytest.raises(ValidationError):
            ns_hv_feasibility_lp(canonical, 1, 1, n_lambda=4)

    def test_signalling_target_rejected(self):
        t = np.zeros((2, 2, 2, 2))
        t[0, :, 0, 0] = 1.0
        t[1, 0, 0, 0] = 1.0
        t[1, 1, 1, 1] = 1.0
        d = BipartiteDistribution(t, (2, 2), (2, 2))
        with pytest.raises(ValidationError):
            ns_hv_feasibility_lp(d, 1, 1)


class TestGuessingLp:
    def test_canonical_perfectly_guessable(self, canonical):
        assert guessing_probability_lp(canonical, 1, 1) == pytest.approx(1.0, abs=1e-9)

    def test_deterministic_product(self):
        t = np.zeros((2, 2, 2, 2))
        t[:, :, 0, 0] = 1.0
        d = BipartiteDistribution(t, (2, 2), (2, 2))
        assert guessing_probability_lp(d, 1, 1) == pytest.approx(1.0, abs=1e-12)

    def test_isotropic_at_classical_bound(self):
        iso = BipartiteDistribution(
            0.5 * pr_box().table + 0.5 * 0.25, (2, 2), (2, 2)
        )
        assert chsh_score(iso)[0] == pytest.approx(2.0, abs=1e-12)
        assert guessing_probability_lp(iso, 1, 1) == pytest.approx(1.0, abs=1e-9)

    def test_pr_box_unguessable(self):
        assert guessing_probability_lp(pr_box(), 1, 1) == pytest.approx(0.5, abs=1e-9)

    def test_isotropic_above_bound(self):
        iso = BipartiteDistribution(
            0.75 * pr_box().table + 0.25 * 0.25, (2, 2), (2, 2)
        )
        assert guessing_probability_lp(iso, 1, 1) == pytest.approx(0.75, abs=1e-6)

    def test_unknown_model_rejected(self, canonical):
        with pytest.raises(ValidationError):
            guessing_probability_lp(canonical, 1, 1, model="quantum")
