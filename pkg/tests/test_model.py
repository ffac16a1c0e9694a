"""Model core: basis profiles, design matrices, least squares, posterior."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from rbfanneal.criteria import Criterion, penalized_score
from rbfanneal.model import (EUCLIDEAN, Basis, Dataset, DegenerateDesignError,
                             Metric, build_design_matrix, fit_least_squares,
                             log_marginal_posterior, noise_variance_estimates,
                             predict, residual_quadratics)
from rbfanneal.moves import BirthRegion

from oracles import (explicit_projection_quadratics,
                     normal_equation_coefficients, oracle_design,
                     random_problem)


class TestBasisProfiles:
    def test_linear_is_identity_on_distance(self):
        b = Basis("linear")
        assert_allclose(b.profile([0.0, 1.0, 2.5]), [0.0, 1.0, 2.5])

    def test_cubic_value(self):
        assert Basis("cubic").profile(5.0) == 125.0

    def test_thin_plate_values(self):
        b = Basis("thin-plate")
        # zero both at the centre and at unit distance (ln 1 = 0)
        assert b.profile(0.0) == 0.0
        assert b.profile(1.0) == 0.0
        assert_allclose(b.profile(math.e), math.e ** 2, rtol=1e-14)

    def test_gaussian_values(self):
        b = Basis("gaussian", width=0.5)
        assert b.profile(0.0) == 1.0
        assert_allclose(b.profile(0.5 * math.sqrt(2.0)), math.exp(-1.0),
                        rtol=1e-14)

    def test_negative_distance_rejected(self):
        with pytest.raises(ValueError):
            Basis("cubic").profile(-1.0)

    def test_validation(self):
        with pytest.raises(ValueError, match="basis kind"):
            Basis("quintic")
        with pytest.raises(ValueError, match="width"):
            Basis("gaussian")
        with pytest.raises(ValueError, match="width"):
            Basis("gaussian", width=-1.0)
        with pytest.raises(ValueError, match="no width"):
            Basis("cubic", width=0.3)


class TestDesignMatrix:
    def test_shape_and_fixed_columns(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((7, 3))
        centres = rng.standard_normal((4, 3))
        design = build_design_matrix(x, centres, Basis("cubic"))
        assert design.shape == (7, 1 + 3 + 4)
        assert_allclose(design[:, 0], 1.0)
        assert_allclose(design[:, 1:4], x)

    def test_no_centres_gives_affine_design(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((5, 2))
        design = build_design_matrix(x, np.empty((0, 2)), Basis("cubic"))
        assert design.shape == (5, 3)
        assert_allclose(design, np.hstack([np.ones((5, 1)), x]))

    @pytest.mark.parametrize("kind,width", [
        ("linear", None), ("cubic", None), ("thin-plate", None),
        ("gaussian", 0.7),
    ])
    def test_matches_distance_oracle(self, kind, width):
        rng = np.random.default_rng(42)
        for _ in range(10):
            x, _, centres = random_problem(rng, k=int(rng.integers(1, 6)))
            design = build_design_matrix(x, centres, Basis(kind, width))
            assert_allclose(design, oracle_design(x, centres, kind, width),
                            rtol=1e-12, atol=1e-13)

    def test_gaussian_column_peaks_at_centre(self):
        x = np.array([[0.3, -0.2], [1.0, 1.0]])
        design = build_design_matrix(x, x[:1], Basis("gaussian", width=0.4))
        assert design[0, 3] == 1.0
        assert design[1, 3] < 1.0

    def test_dimension_mismatch_raises(self):
        with pytest.raises(ValueError):
            build_design_matrix(np.zeros((4, 2)), np.zeros((1, 3)),
                                Basis("cubic"))


def _dataset(rng, n=30, d=2, c=2):
    x = rng.uniform(-1.5, 1.5, (n, d))
    y = rng.standard_normal((n, c))
    return Dataset(x, y)


class TestLeastSquares:
    def test_recovers_planted_coefficients(self):
        rng = np.random.default_rng(3)
        x, _, centres = random_problem(rng, n=40, d=2, c=2, k=3)
        design = oracle_design(x, centres, "cubic")
        truth = rng.standard_normal((design.shape[1], 2))
        ds = Dataset(x, design @ truth)
        coef = fit_least_squares(ds, centres, Basis("cubic"))
        assert_allclose(coef, truth, rtol=1e-8, atol=1e-10)

    def test_matches_normal_equation_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            x, y, centres = random_problem(rng)
            ds = Dataset(x, y)
            coef = fit_least_squares(ds, centres, Basis("cubic"))
            design = build_design_matrix(x, centres, Basis("cubic"))
            assert_allclose(coef, normal_equation_coefficients(design, y),
                            rtol=1e-7, atol=1e-9)

    def test_residual_orthogonal_to_columns(self):
        rng = np.random.default_rng(5)
        x, y, centres = random_problem(rng, n=35, d=2, c=1, k=4)
        ds = Dataset(x, y)
        coef = fit_least_squares(ds, centres, Basis("cubic"))
        design = build_design_matrix(x, centres, Basis("cubic"))
        assert_allclose(design.T @ (y - design @ coef), 0.0, atol=1e-9)

    def test_duplicate_centre_is_degenerate(self):
        rng = np.random.default_rng(6)
        ds = _dataset(rng)
        centre = rng.uniform(-1, 1, (1, 2))
        centres = np.vstack([centre, centre])
        with pytest.raises(DegenerateDesignError):
            fit_least_squares(ds, centres, Basis("cubic"))
        with pytest.raises(DegenerateDesignError):
            residual_quadratics(ds, centres, Basis("cubic"))

    def test_dataset_left_intact_by_fitting(self):
        # single-output targets are contiguous both ways, which must not
        # let the in-place factorization reach the caller's arrays
        rng = np.random.default_rng(23)
        x = rng.uniform(-1, 1, (15, 2))
        y = rng.standard_normal((15, 1))
        ds = Dataset(x, y)
        x_before, y_before = ds.x.copy(), ds.y.copy()
        centres = rng.uniform(-1, 1, (2, 2))
        fit_least_squares(ds, centres, Basis("cubic"))
        residual_quadratics(ds, centres, Basis("cubic"))
        assert np.array_equal(ds.x, x_before)
        assert np.array_equal(ds.y, y_before)


class TestResidualQuadratics:
    def test_hand_computed_affine_residual(self):
        # y = (0, 0, 3) against [1 | x] with x = (0, 1, 2): residual 1.5
        ds = Dataset(np.array([[0.0], [1.0], [2.0]]),
                     np.array([[0.0], [0.0], [3.0]]))
        rss = residual_quadratics(ds, np.empty((0, 1)), Basis("cubic"))
        assert_allclose(rss, [1.5], rtol=1e-13)

    def test_zero_when_targets_in_column_space(self):
        rng = np.random.default_rng(7)
        x, _, centres = random_problem(rng, n=30, d=2, c=2, k=2)
        design = oracle_design(x, centres, "cubic")
        ds = Dataset(x, design @ rng.standard_normal((design.shape[1], 2)))
        rss = residual_quadratics(ds, centres, Basis("cubic"))
        assert np.all(rss >= 0.0)
        assert np.all(rss < 1e-18)

    def test_matches_projection_oracle(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            x, y, centres = random_problem(rng)
            ds = Dataset(x, y)
            rss = residual_quadratics(ds, centres, Basis("cubic"))
            design = build_design_matrix(x, centres, Basis("cubic"))
            expected = explicit_projection_quadratics(design, y)
            assert_allclose(rss, expected, rtol=1e-8)

    def test_never_negative_and_monotone_in_columns(self):
        rng = np.random.default_rng(9)
        for _ in range(10):
            x, y, centres = random_problem(rng, n=40, k=3)
            ds = Dataset(x, y)
            rss_small = residual_quadratics(ds, centres[:2], Basis("cubic"))
            rss_big = residual_quadratics(ds, centres, Basis("cubic"))
            assert np.all(rss_small >= 0.0)
            assert np.all(rss_big <= rss_small + 1e-12 * np.abs(rss_small))

    def test_noise_variance_is_rss_over_n(self):
        rng = np.random.default_rng(10)
        x, y, centres = random_problem(rng, n=25, d=1, c=2, k=2)
        ds = Dataset(x, y)
        rss = residual_quadratics(ds, centres, Basis("cubic"))
        sigma2 = noise_variance_estimates(ds, centres, Basis("cubic"))
        assert np.array_equal(sigma2, rss / 25)


class TestLogMarginalPosterior:
    def test_score_differences_match_penalized_score(self):
        rng = np.random.default_rng(11)
        ds = _dataset(rng, n=40)
        crit = Criterion("mdl", 40, 2, 2)
        basis = Basis("cubic")
        k2 = rng.uniform(-1.5, 1.5, (2, 2))
        k5 = rng.uniform(-1.5, 1.5, (5, 2))
        gap_lmp = (log_marginal_posterior(ds, k5, basis, crit)
                   - log_marginal_posterior(ds, k2, basis, crit))
        gap_ps = (penalized_score(ds, k5, basis, crit)
                  - penalized_score(ds, k2, basis, crit))
        assert abs(gap_lmp - gap_ps) < 1e-12

    def test_offset_from_penalized_score_is_k0_penalty(self):
        rng = np.random.default_rng(12)
        ds = _dataset(rng, n=30)
        crit = Criterion("aic", 30, 2, 2)
        centres = rng.uniform(-1.5, 1.5, (3, 2))
        lmp = log_marginal_posterior(ds, centres, Basis("cubic"), crit)
        ps = penalized_score(ds, centres, Basis("cubic"), crit)
        assert_allclose(lmp - ps, crit.penalty(0), rtol=1e-12)

    def test_outside_region_scores_minus_inf(self):
        rng = np.random.default_rng(13)
        ds = _dataset(rng)
        region = BirthRegion.from_inputs(ds.x, margin=0.1)
        outside = region.upper + 1.0
        crit = Criterion("mdl", ds.n_samples, 2, 2)
        lp = log_marginal_posterior(ds, outside[None, :], Basis("cubic"),
                                    crit, region=region)
        assert lp == -np.inf

    def test_degenerate_design_scores_minus_inf(self):
        rng = np.random.default_rng(14)
        ds = _dataset(rng)
        centre = rng.uniform(-1, 1, (1, 2))
        crit = Criterion("mdl", ds.n_samples, 2, 2)
        lp = log_marginal_posterior(ds, np.vstack([centre, centre]),
                                    Basis("cubic"), crit)
        assert lp == -np.inf

    def test_exact_interpolation_warns_and_scores_minus_inf(self):
        # square full-rank design: zero residual on every output
        ds = Dataset(np.array([[0.0], [1.0]]), np.array([[1.0], [-1.0]]))
        crit = Criterion("mdl", 2, 1, 1)
        with pytest.warns(RuntimeWarning, match="zero"):
            lp = log_marginal_posterior(ds, np.empty((0, 1)), Basis("cubic"),
                                        crit)
        assert lp == -np.inf

    def test_finite_on_generic_state(self):
        rng = np.random.default_rng(15)
        ds = _dataset(rng)
        crit = Criterion("bic", ds.n_samples, 2, 2)
        centres = rng.uniform(-1.5, 1.5, (4, 2))
        assert math.isfinite(
            log_marginal_posterior(ds, centres, Basis("cubic"), crit))


class TestPredict:
    def test_affine_data_reproduced_without_centres(self):
        rng = np.random.default_rng(16)
        x = rng.standard_normal((20, 2))
        coef_true = rng.standard_normal((3, 2))
        y = np.hstack([np.ones((20, 1)), x]) @ coef_true
        ds = Dataset(x, y)
        coef = fit_least_squares(ds, np.empty((0, 2)), Basis("cubic"))
        out = predict(x, np.empty((0, 2)), coef, Basis("cubic"))
        assert_allclose(out, y, rtol=1e-9, atol=1e-12)

    def test_square_design_interpolates(self):
        rng = np.random.default_rng(17)
        x = np.array([[0.0], [0.4], [1.1], [2.0]])
        y = rng.standard_normal((4, 1))
        centres = np.array([[0.2], [1.5]])  # 1 + d + k = 4 columns
        ds = Dataset(x, y)
        coef = fit_least_squares(ds, centres, Basis("cubic"))
        assert_allclose(predict(x, centres, coef, Basis("cubic")), y,
                        rtol=1e-8, atol=1e-10)

    def test_coefficient_shape_checked(self):
        with pytest.raises(ValueError, match="coefficients"):
            predict(np.zeros((3, 2)), np.empty((0, 2)), np.zeros((5, 1)),
                    Basis("cubic"))


class TestMetric:
    def test_identity_weight_equals_euclidean(self):
        rng = np.random.default_rng(18)
        x = rng.standard_normal((10, 2))
        centres = rng.standard_normal((3, 2))
        d_euc = build_design_matrix(x, centres, Basis("gaussian", 0.5))
        d_id = build_design_matrix(x, centres, Basis("gaussian", 0.5),
                                   Metric(np.eye(2)))
        assert_allclose(d_id, d_euc, rtol=1e-15)

    def test_diagonal_weight_equals_axis_scaling(self):
        rng = np.random.default_rng(19)
        x = rng.standard_normal((12, 2))
        centres = rng.standard_normal((4, 2))
        weighted = build_design_matrix(x, centres, Basis("cubic"),
                                       Metric(np.diag([4.0, 1.0])))
        scale = np.array([2.0, 1.0])
        plain = oracle_design(x * scale, centres * scale, "cubic")
        # the affine block keeps the raw inputs; only distances are weighted
        assert_allclose(weighted[:, 3:], plain[:, 3:], rtol=1e-12)
        assert_allclose(weighted[:, 1:3], x)

    def test_rejects_bad_weight_matrices(self):
        with pytest.raises(ValueError, match="positive definite"):
            Metric(np.diag([1.0, -1.0]))
        with pytest.raises(ValueError, match="symmetric"):
            Metric(np.array([[1.0, 0.5], [0.0, 1.0]]))
        with pytest.raises(ValueError, match="square"):
            Metric(np.ones((2, 3)))


class TestDatasetValidation:
    def test_rejects_bad_shapes_and_values(self):
        with pytest.raises(ValueError, match="rows"):
            Dataset(np.zeros((3, 1)), np.zeros((4, 1)))
        with pytest.raises(ValueError, match="2-D"):
            Dataset(np.zeros(3), np.zeros((3, 1)))
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(np.array([[np.nan]]), np.array([[1.0]]))
        with pytest.raises(ValueError, match="at least one sample"):
            Dataset(np.zeros((0, 1)), np.zeros((0, 1)))

    def test_coerces_to_float64(self):
        ds = Dataset(np.array([[1], [2]], dtype=np.int32),
                     np.array([[1], [2]], dtype=np.int32))
        assert ds.x.dtype == np.float64
        assert ds.y.dtype == np.float64
        assert ds.n_samples == 2 and ds.n_inputs == 1 and ds.n_outputs == 1
