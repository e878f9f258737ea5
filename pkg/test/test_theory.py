import math

import pytest

from modules.distributions import MixtureSpec, XLaw, sample_unlabeled
from modules.errors import DomainError, InvalidResolutionError
from modules.estimators import construct_init, self_train_step
from modules.numerics import SeedSpec
from modules.theory import (accuracy_from_cot, cot_bounds, cot_limit, cot_to_correlation, cot_update,
                            early_stop_factor, fixed_point_unlabeled, folded_tail_bound, iterate_prediction,
                            margin_lower_bound, quantities, rejection_mislabel_bound, ridge_kappa, supervised_cot,
                            supervised_cot_bounds)


class TestQuantities:
    def test_without_threshold(self):
        q = quantities(0.6, 0.75, 0.0)
        assert q.rho == pytest.approx(1.0)
        assert q.nu == pytest.approx(0.211855, abs=1e-6)
        assert q.lambda_ == pytest.approx(0.579384, abs=1e-6)

    def test_with_threshold(self):
        q = quantities(0.6, 0.75, 0.5)
        assert q.gbar_plus == pytest.approx(-2 / 15)
        assert q.gbar_minus == pytest.approx(22 / 15)
        assert 0 < q.rho < 1

    @pytest.mark.parametrize("alpha, sigma, threshold", [(0.0, 0.75, 0.0), (1.5, 0.75, 0.0), (0.6, 0.0, 0.0),
                                                         (0.6, 0.75, -1.0)])
    def test_domain(self, alpha, sigma, threshold):
        with pytest.raises(DomainError):
            quantities(alpha, sigma, threshold)


class TestCotangentMap:
    def test_known_value(self):
        assert cot_update(0.75, 0.75, 0.0, 2.0) == pytest.approx(1.31998, abs=1e-5)

    def test_more_unlabeled_data_helps(self):
        values = [cot_update(0.5, 0.75, 0.5, u_bar) for u_bar in (0.5, 1, 2, 5, 10, 100)]
        assert values == sorted(values)
        assert values[-1] < cot_limit(0.5, 0.75, 0.5)

    def test_iterates_at_small_u_bar(self):
        assert iterate_prediction(0.05, 3.0, 0.75, 0.0, 1) == pytest.approx(0.663, abs=5e-3)
        assert iterate_prediction(0.05, 3.0, 0.75, 0.0, 2) == pytest.approx(1.372, abs=5e-3)

    def test_domain(self):
        with pytest.raises(DomainError):
            cot_update(-1.0, 0.75, 0.0, 2.0)
        with pytest.raises(DomainError):
            cot_update(1.0, 0.75, 0.0, 0.0)

    def test_iterate_prediction(self):
        assert iterate_prediction(0.05, 3.0, 0.75, 0.0, 0) == pytest.approx(0.29814, abs=1e-5)
        one = iterate_prediction(0.05, 3.0, 0.75, 0.0, 1)
        assert one == pytest.approx(cot_update(supervised_cot(0.05, 0.75), 0.75, 0.0, 3.0))
        assert iterate_prediction(0.05, 3.0, 0.75, 0.0, 2) == pytest.approx(cot_update(one, 0.75, 0.0, 3.0))

    def test_correlation_conversion(self):
        assert cot_to_correlation(0.75) == pytest.approx(0.6)
        assert cot_to_correlation(math.inf) == 1.0
        assert accuracy_from_cot(math.inf, 0.75) == pytest.approx(0.908789, abs=1e-6)


class TestFixedPoint:
    def test_step_at_the_fixed_point_changes_nothing(self):
        u_star = fixed_point_unlabeled(0.5, 0.75, 0.0)
        assert cot_update(0.5, 0.75, 0.0, u_star) == pytest.approx(0.5, abs=1e-8)
        assert cot_update(0.5, 0.75, 0.0, 2 * u_star) > 0.5
        assert cot_update(0.5, 0.75, 0.0, u_star / 2) < 0.5

    def test_beyond_search_range(self):
        u_star = fixed_point_unlabeled(0.5, 0.75, 0.0)
        with pytest.raises(DomainError):
            fixed_point_unlabeled(0.5, 0.75, 0.0, highest=u_star / 2)


class TestCotBounds:
    def test_sandwich(self):
        bounds = cot_bounds(0.6, 0.75, 0.5, 400, 800, 0.05)
        assert bounds.lower <= bounds.asymptotic <= bounds.upper
        assert bounds.limit == pytest.approx(cot_update(0.75, 0.75, 0.5, 2.0))
        assert bounds.limit == pytest.approx(bounds.asymptotic, rel=5e-3)

    def test_sandwich_narrows_with_epsilon(self):
        wide = cot_bounds(0.6, 0.75, 0.0, 400, 800, 0.2)
        narrow = cot_bounds(0.6, 0.75, 0.0, 400, 800, 0.01)
        assert wide.lower < narrow.lower and narrow.upper < wide.upper

    @pytest.mark.parametrize("epsilon", [0.0, 0.5, 0.7])
    def test_bad_epsilon(self, epsilon):
        with pytest.raises(InvalidResolutionError):
            cot_bounds(0.6, 0.75, 0.0, 400, 800, epsilon)

    def test_small_p(self):
        with pytest.raises(DomainError):
            cot_bounds(0.6, 0.75, 0.0, 2, 800, 0.1)

    def test_supervised_bounds(self):
        bounds = supervised_cot_bounds(0.75, 400, 20, 0.1)
        assert bounds.asymptotic == pytest.approx(supervised_cot(0.05, 0.75))
        assert bounds.contains(bounds.asymptotic)

    @pytest.mark.slow
    @pytest.mark.parametrize("threshold", [0.0, 0.5])
    @pytest.mark.parametrize("u_bar", [1, 2])
    def test_one_step_lands_inside_the_sandwich(self, threshold, u_bar):
        p, trials = 2000, 40
        spec = MixtureSpec.of_dimension(p, 0.75)
        bounds = cot_bounds(0.6, 0.75, threshold, p, u_bar * p, 0.05)
        inside = 0
        for t in range(trials):
            seed = SeedSpec(51, t)
            model = construct_init(spec, 0.6, seed)
            step = self_train_step(model, sample_unlabeled(spec, u_bar * p, seed.child(1)), threshold)
            inside += bounds.contains(step.cotangent(spec.mu))
        assert inside >= 0.95 * trials


class TestRegularisedFits:
    def test_ridge_kappa(self):
        assert ridge_kappa(1.0, 1.0) == pytest.approx(4 / 3)
        assert ridge_kappa(0.0, 0.75) == pytest.approx(1.0)
        assert ridge_kappa(math.inf, 0.5) == early_stop_factor(0.5) == pytest.approx(5.0)

    def test_ridge_kappa_grows_with_lambda(self):
        values = [ridge_kappa(lam, 1.0) for lam in (0.0, 0.1, 1.0, 10.0, 1000.0)]
        assert values == sorted(values)
        assert values[-1] < early_stop_factor(1.0) == 2.0


class TestMarginBound:
    def test_condition_met(self):
        bound = margin_lower_bound(0.9, 1.0, 0.4, 1.0)
        assert bound.condition_met
        assert not bound.vacuous
        assert bound.bound == pytest.approx(0.657, abs=1e-3)
        assert bound.strong_bound <= bound.bound

    def test_strong_form_value(self):
        # C = 0.8^2 / (2 * 0.2^2) = 8
        bound = margin_lower_bound(0.8, 1.0, 0.2, 1.0)
        assert bound.condition_met
        assert bound.bound == pytest.approx(0.05 * math.exp(8.0) - 0.3, rel=1e-12)
        assert bound.strong_bound == pytest.approx(0.02 * math.exp(8.0), rel=1e-12)
        assert bound.strong_bound <= bound.bound

    def test_condition_fails_at_unit_noise(self):
        assert not margin_lower_bound(0.8, 1.0, 1.0, 1.0).condition_met

    def test_vacuous(self, caplog):
        bound = margin_lower_bound(0.5, 1.0, 0.5, 1.0)
        assert bound.vacuous
        assert not bound.condition_met
        assert "vacuous" in caplog.text

    def test_domain(self):
        with pytest.raises(DomainError):
            margin_lower_bound(0.9, 0.3, 0.4, 1.0)
        with pytest.raises(DomainError):
            margin_lower_bound(0.9, 1.0, 0.4, 0.5)


class TestTailBounds:
    def test_rejection_bound_without_threshold(self):
        assert rejection_mislabel_bound(0.5, 2.0, 0.0) == pytest.approx(0.31731, abs=1e-5)

    def test_rejection_bound_vacuous_when_nothing_is_accepted(self):
        assert rejection_mislabel_bound(0.5, 1.0, 2.0, sigma=1.0, x_law=XLaw.of_constant_one()) == math.inf

    def test_folded_tail_bound(self):
        assert folded_tail_bound(1.0) == pytest.approx(0.48394, abs=1e-5)
        assert folded_tail_bound(0.0) == pytest.approx(math.sqrt(2 / math.pi))
