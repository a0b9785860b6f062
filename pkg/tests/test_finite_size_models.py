"""Honest-device models: winning probability, error rate, EC entropies."""

import math

import pytest

from diqkd.errors import ValidationError
from diqkd.finite_size import HonestModel, W_TSIRELSON
from diqkd.numerics import binary_entropy


class TestConstruction:
    def test_depolarizing_endpoints(self):
        assert HonestModel.depolarizing(q=0.0).winning_prob == pytest.approx(
            W_TSIRELSON, abs=1e-15
        )
        assert HonestModel.depolarizing(q=0.5).winning_prob == pytest.approx(
            0.5, abs=1e-15
        )

    def test_depolarizing_interpolates(self):
        q = 0.07
        m = HonestModel.depolarizing(q=q)
        assert m.winning_prob == pytest.approx(
            (1.0 - 2.0 * q) * W_TSIRELSON + q, abs=1e-15
        )

    def test_experimental_passthrough(self):
        m = HonestModel.experimental(w_exp=0.797, p_err=0.06)
        assert m.winning_prob == 0.797
        assert m.error_prob == 0.06

    def test_kind_exclusive_fields(self):
        with pytest.raises(ValidationError):
            HonestModel(kind="depolarizing", w_exp=0.8)
        with pytest.raises(ValidationError):
            HonestModel(kind="experimental", q=0.02)
        with pytest.raises(ValidationError):
            HonestModel(kind="other", q=0.02)

    def test_range_checks(self):
        with pytest.raises(ValidationError):
            HonestModel.depolarizing(q=0.6)
        with pytest.raises(ValidationError):
            HonestModel.experimental(w_exp=0.3, p_err=0.06)
        with pytest.raises(ValidationError):
            HonestModel.experimental(w_exp=0.9, p_err=0.06)
        with pytest.raises(ValidationError):
            HonestModel.depolarizing(q=0.02, p=0.7)
        with pytest.raises(ValidationError):
            HonestModel.depolarizing(q=0.02, gamma=1.5)


class TestErrorProbability:
    def test_preprocessing_mixes_toward_half(self):
        m = HonestModel.experimental(w_exp=0.797, p_err=0.06, p=0.2)
        assert m.error_prob == pytest.approx(0.2 + 0.6 * 0.06, abs=1e-15)

    def test_depolarizing_base_error_is_q(self):
        m = HonestModel.depolarizing(q=0.02, p=0.1)
        assert m.error_prob == pytest.approx(0.1 + 0.8 * 0.02, abs=1e-15)

    def test_full_preprocessing_gives_half(self):
        m = HonestModel.depolarizing(q=0.02, p=0.5)
        assert m.error_prob == pytest.approx(0.5, abs=1e-15)


class TestEntropies:
    def test_h_generation(self):
        m = HonestModel.experimental(w_exp=0.797, p_err=0.06)
        assert m.h_generation == pytest.approx(binary_entropy(0.06), abs=1e-15)

    def test_h_hon_combination(self):
        m = HonestModel.experimental(w_exp=0.797, p_err=0.06, gamma=0.05)
        expected = 0.5 * 0.95 * binary_entropy(0.06) + 0.05 * binary_entropy(0.797)
        assert m.h_hon() == pytest.approx(expected, abs=1e-14)

    def test_h_hon_preshared_drops_sifting(self):
        m = HonestModel.depolarizing(q=0.03, gamma=0.1)
        expected = 0.9 * binary_entropy(0.03) + 0.1 * binary_entropy(m.winning_prob)
        assert m.h_hon_preshared() == pytest.approx(expected, abs=1e-14)

    def test_noiseless_untested_run_needs_no_ec(self):
        m = HonestModel.depolarizing(q=0.0, gamma=0.0)
        assert m.h_hon() == 0.0

    def test_preshared_at_least_sifted(self):
        for q in (0.0, 0.02, 0.05):
            m = HonestModel.depolarizing(q=q, gamma=0.07)
            assert m.h_hon_preshared() >= m.h_hon() - 1e-15
