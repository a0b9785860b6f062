import numpy as np
import pytest
from itertools import product

from diqkd.errors import ValidationError
from diqkd.nonlocality import (
    CorrelatorVector,
    correlators_from_probs,
    correlators_single,
    pr_box,
    probs_from_correlators,
    probs_single,
    _sign_grid,
)


def random_ns_table(rng, n_parties: int, input_counts) -> np.ndarray:
    """Local (hence NS) N-party table from random per-party responses."""
    margs = [
        rng.uniform(0.05, 0.95, size=input_counts[i]) for i in range(n_parties)
    ]
    shape = tuple(input_counts) + (2,) * n_parties
    arr = np.ones(shape)
    for inputs in product(*(range(m) for m in input_counts)):
        block = np.ones((2,) * n_parties)
        for i in range(n_parties):
            p1 = margs[i][inputs[i]]
            w = np.array([p1, 1.0 - p1])
            sh = [1] * n_parties
            sh[i] = 2
            block = block * w.reshape(sh)
        arr[inputs] = block
    return arr


class TestCorrelatorVector:
    def test_requires_unit_empty_subset(self):
        with pytest.raises(ValidationError):
            CorrelatorVector(1, [0.5, 0.0])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValidationError):
            CorrelatorVector(1, [1.0, 1.5])

    def test_subset_value(self):
        cv = CorrelatorVector(2, [1.0, 0.25, -0.5, 0.75])
        assert cv.subset_value(()) == 1.0
        assert cv.subset_value((0,)) == 0.25
        assert cv.subset_value((1,)) == -0.5
        assert cv.subset_value((0, 1)) == 0.75


class TestSingleTransform:
    def test_one_party_point_mass(self):
        cv = correlators_single(np.array([1.0, 0.0]))
        assert np.allclose(cv.values, [1.0, 1.0])

    def test_transform_rows_orthogonal_integer(self):
        for n in range(1, 7):
            rows = np.array(
                [_sign_grid(n, mask).ravel() for mask in range(2**n)], dtype=np.int64
            )
            gram = rows @ rows.T
            assert np.array_equal(gram, (2**n) * np.eye(2**n, dtype=np.int64))

    def test_round_trip_identity(self):
        rng = np.random.default_rng(29)
        for n in (1, 2, 3, 4):
            for _ in range(250):
                q = rng.uniform(0.0, 1.0, size=(2,) * n)
                q /= q.sum()
                back = probs_single(correlators_single(q))
                assert np.abs(back - q).max() < 1e-12


class TestFullParametrization:
    def test_pr_box_correlators(self):
        corrs = correlators_from_probs(pr_box())
        assert len(corrs) == 9
        for x in range(2):
            assert abs(corrs[((0, x),)]) < 1e-12
            assert abs(corrs[((1, x),)]) < 1e-12
        for x, y in product(range(2), repeat=2):
            expected = -1.0 if x == y == 1 else 1.0
            assert abs(corrs[((0, x), (1, y))] - expected) < 1e-12

    def test_pr_box_reconstruction(self):
        corrs = {(): 1.0}
        for x in range(2):
            corrs[((0, x),)] = 0.0
            corrs[((1, x),)] = 0.0
        for x, y in product(range(2), repeat=2):
            corrs[((0, x), (1, y))] = -1.0 if x == y == 1 else 1.0
        arr = probs_from_correlators(corrs, (2, 2))
        for x, y, a, b in product(range(2), repeat=4):
            sign = (1 - 2 * a) * (1 - 2 * b) * (-1) ** (x * y)
            assert abs(arr[x, y, a, b] - (1.0 + sign) / 4.0) < 1e-12

    def test_random_ns_round_trip(self):
        rng = np.random.default_rng(31)
        for n, shape in ((2, (2, 2)), (2, (3, 2)), (3, (2, 2, 2))):
            for _ in range(20):
                arr = random_ns_table(rng, n, shape)
                corrs = correlators_from_probs(arr)
                back = probs_from_correlators(corrs, shape)
                assert np.abs(back - arr).max() < 1e-12

    def test_parameter_count(self):
        # One parametrizing correlator per choice of inputs-or-absence
        # for each party: prod_j (inputs_j + 1).
        arr = random_ns_table(np.random.default_rng(37), 2, (3, 4))
        corrs = correlators_from_probs(arr)
        assert len(corrs) == (3 + 1) * (4 + 1)

    def test_signalling_rejected_with_subset_named(self):
        t = np.zeros((2, 2, 2, 2))
        t[0, 0, 0, 0] = 1.0
        t[0, 1, 1, 0] = 1.0
        t[1, 0, 0, 0] = 1.0
        t[1, 1, 0, 0] = 1.0
        with pytest.raises(ValidationError, match=r"parties \(0,\)"):
            correlators_from_probs(t)

    def test_missing_correlator_rejected(self):
        with pytest.raises(ValidationError):
            probs_from_correlators({(): 1.0}, (1,))
