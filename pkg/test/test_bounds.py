import json
import math

import numpy as np
import pytest

from modules.bounds import (FiniteClass, clustering_bound_check, clustering_error, constrained_erm,
                            deterministic_transfer_check, empirical_rademacher, epsilon_tilde, margin_loss,
                            population_losses, ramp_loss, transfer_pass_rate, two_cluster_set, unsup_erm,
                            weak_supervision_trial)
from modules.distributions import MixtureSpec, XLaw, sample_labeled, sample_unlabeled
from modules.errors import InfeasibleError
from modules.estimators import LinearModel
from modules.numerics import SeedSpec


class TestLosses:
    @pytest.mark.parametrize("x, expected", [(0.0, 1.0), (0.25, 1.0), (0.375, 0.5), (0.5, 0.0), (3.0, 0.0)])
    def test_margin_loss(self, x, expected):
        assert margin_loss(x, 0.25) == pytest.approx(expected)

    def test_margin_loss_domain(self):
        with pytest.raises(ValueError):
            margin_loss(-0.1, 0.25)
        with pytest.raises(ValueError):
            margin_loss(0.1, 0.0)

    def test_ramp_loss(self):
        assert list(ramp_loss([-1.0, 0.5, 2.0])) == [1.0, 0.5, 0.0]

    @pytest.mark.parametrize("gamma", [0.1, 0.25, 1.0])
    def test_margin_loss_sits_between_indicators(self, gamma):
        x = np.linspace(0.0, 3.0, 3001)
        loss = margin_loss(x, gamma)
        assert np.all((x <= gamma) <= loss)
        assert np.all(loss <= (x <= 2 * gamma))

    def test_margin_loss_scale_invariance(self):
        x = np.linspace(0.0, 2.0, 201)
        assert np.allclose(margin_loss(3.0 * x, 0.25), margin_loss(x, 0.25 / 3.0), rtol=0, atol=1e-12)


class TestFiniteClass:
    def test_of_angles(self):
        hypotheses = FiniteClass.of_angles(4)
        assert hypotheses.size == 4
        assert np.allclose(hypotheses.directions[1], [0.0, 1.0])

    def test_negations_and_scaling(self):
        hypotheses = FiniteClass.of_angles(3)
        assert hypotheses.with_negations().size == 6
        assert np.allclose(hypotheses.scaled(2.0).members[0].beta, [2.0, 0.0])

    def test_random_dictionary_includes_mu(self, seed):
        spec = MixtureSpec.of_dimension(10, 0.5)
        hypotheses = FiniteClass.of_random_dictionary(5, 10, seed, include=spec.mu)
        assert np.allclose(hypotheses.directions[0], spec.mu)

    def test_rejects_non_positive_scales(self):
        with pytest.raises(ValueError):
            FiniteClass([[1.0, 0.0]], scales=[0.0])


class TestClusteringError:
    def test_closed_form(self):
        spec = MixtureSpec.of_dimension(2, 1.0)
        model = LinearModel(spec.mu)
        # Q(-1.5) - Q(-0.5)
        assert clustering_error(model, spec, 0.5) == pytest.approx(0.241730, abs=1e-6)

    @pytest.mark.parametrize("x_law", [XLaw.of_constant_one(), XLaw.of_folded_normal(),
                                       XLaw.of_bounded_margin(2.0)])
    def test_closed_form_matches_sample_fraction(self, x_law, seed):
        spec = MixtureSpec.of_dimension(2, 0.5, x_law)
        model = LinearModel(np.array([2.0, 1.0]))
        data = sample_unlabeled(spec, 200000, seed)
        assert clustering_error(model, data, 0.5) == pytest.approx(clustering_error(model, spec, 0.5), abs=0.005)

    def test_scale_invariance(self):
        spec = MixtureSpec.of_dimension(2, 0.5)
        model = LinearModel(np.array([1.0, 1.0]))
        assert clustering_error(model.scaled(2.0), spec, 0.5) == pytest.approx(clustering_error(model, spec, 0.25))

    def test_scale_invariance_on_samples(self, seed):
        data = sample_unlabeled(MixtureSpec.of_dimension(2, 0.5), 1000, seed)
        model = LinearModel(np.array([1.0, 1.0]))
        assert clustering_error(model.scaled(4.0), data, 0.5) == clustering_error(model, data, 0.125)


def test_unsup_erm_follows_the_widest_gap(seed):
    data = two_cluster_set(1000, seed)
    result = unsup_erm(FiniteClass.of_angles(36), data.unlabeled(), 2.0)
    assert abs(result.model.beta[1]) > 0.99
    # the labels split along the other axis, so the chosen separator is useless for them
    assert abs(np.mean(result.model.predict(data.inputs) == data.labels) - 0.5) < 0.1


class TestRademacher:
    def test_scales_linearly(self, seed):
        spec = MixtureSpec.of_dimension(2, 0.5)
        data = sample_unlabeled(spec, 200, seed)
        hypotheses = FiniteClass.of_angles(12)
        base, _ = empirical_rademacher(hypotheses, data, 50, seed.child(1))
        doubled, _ = empirical_rademacher(hypotheses.scaled(2.0), data, 50, seed.child(1))
        assert doubled == pytest.approx(2 * base)

    def test_non_negative_for_symmetric_class(self, seed):
        spec = MixtureSpec.of_dimension(2, 0.5)
        data = sample_unlabeled(spec, 200, seed)
        value, _ = empirical_rademacher(FiniteClass.of_angles(6).with_negations(), data, 50, seed.child(1))
        assert value >= 0

    def test_singleton_class_is_near_zero(self, seed):
        spec = MixtureSpec.of_dimension(2, 0.5)
        data = sample_unlabeled(spec, 1000, seed)
        value, stderr = empirical_rademacher(FiniteClass([[1.0, 0.0]]), data, 400, seed.child(1))
        assert abs(value) < 4 * stderr + 1e-3


def test_clustering_bound_holds(seed):
    spec = MixtureSpec.of_dimension(2, 0.5)
    report = clustering_bound_check(FiniteClass.of_angles(36), spec, 0.25, 500, 0.1, 5, seed, sign_draws=50)
    assert report.violations == 0
    assert report.violation_rate == 0.0
    assert len(report.population_errors) == 5
    json.dumps(report.to_dict())


@pytest.mark.slow
def test_clustering_bound_violation_rate():
    spec = MixtureSpec.of_dimension(2, 0.5)
    report = clustering_bound_check(FiniteClass.of_angles(36), spec, 0.25, 500, 0.1, 200, SeedSpec(61))
    assert report.trials == 200
    assert report.violation_rate <= 0.1 + 3 * math.sqrt(0.1 / 200)


class TestCommonality:
    def test_epsilon_tilde(self):
        report = epsilon_tilde(None, [0.0, 1.0], [1.0, 0.0], 0.5)
        assert report.epsilon_tilde == pytest.approx(1.0)
        assert report.witness == 0

    def test_shared_minimiser_needs_no_slack(self):
        assert epsilon_tilde(None, [0.0, 1.0], [0.0, 1.0], 0.1).epsilon_tilde == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            epsilon_tilde(None, [0.0, 1.0], [1.0], 0.5)


class TestTransfer:
    def test_premises_and_conclusion(self):
        pop_loss = [0.0, 0.5, 1.0]
        pop_pseudo = [0.3, 0.0, 0.1]
        report = deterministic_transfer_check(None, pop_loss, pop_pseudo, pop_loss, pop_pseudo, 0.05, 0.0, 0.3)
        assert report.premises_hold
        assert report.chosen == 0
        assert report.excess_loss == 0.0
        assert report.conclusion

    def test_small_xi_bar_fails_premises(self):
        pop_loss = [0.0, 0.5, 1.0]
        pop_pseudo = [0.3, 0.0, 0.1]
        report = deterministic_transfer_check(None, pop_loss, pop_pseudo, pop_loss, pop_pseudo, 0.05, 0.0, 0.1)
        assert not report.premises_hold
        assert report.chosen is None and report.conclusion is None
        assert report.to_dict()["premises_hold"] is False

    def test_pass_rate_on_random_cases(self, seed):
        summary = transfer_pass_rate(200, 20, seed)
        assert summary["cases"] == 200
        assert summary["premises_true"] > 0
        assert summary["premises_true_conclusion_false"] == 0
        assert summary["pass_rate"] == 1.0

    @pytest.mark.slow
    def test_no_counterexample_in_a_thousand_cases(self):
        summary = transfer_pass_rate(1000, 20, SeedSpec(62))
        assert summary["cases"] == 1000
        assert summary["premises_true_conclusion_false"] == 0


def test_constrained_erm_infeasible(seed):
    spec = MixtureSpec.of_dimension(2, 0.5)
    labeled = sample_labeled(spec, 20, seed)
    unlabeled = sample_unlabeled(spec, 20, seed.child(1))
    with pytest.raises(InfeasibleError):
        constrained_erm(FiniteClass.of_angles(8), labeled, unlabeled, -1.0)


def test_constrained_erm_without_constraint_is_plain_erm(seed):
    spec = MixtureSpec.of_dimension(2, 0.5)
    labeled = sample_labeled(spec, 200, seed)
    unlabeled = sample_unlabeled(spec, 200, seed.child(1))
    hypotheses = FiniteClass.of_angles(8)
    result = constrained_erm(hypotheses, labeled, unlabeled, 1.0)
    risks = ramp_loss(labeled.labels[:, None] * hypotheses.outputs(labeled.inputs)).mean(axis=0)
    assert result.index == int(np.argmin(risks))
    assert result.index == 0


def test_weak_supervision_trial(seed):
    spec = MixtureSpec.of_dimension(2, 0.5)
    hypotheses = FiniteClass.of_angles(36)
    population = population_losses(hypotheses, spec, 50000, seed)
    assert population.label.shape == (36,)
    assert int(np.argmin(population.label)) == 0
    commonality = epsilon_tilde(hypotheses, population.label, population.pseudo, 0.05)
    report = weak_supervision_trial(hypotheses, spec, population, 50, 500, 0.05,
                                    commonality.epsilon_tilde + 0.1, seed.child(1))
    if report.premises_hold:
        assert report.conclusion
    assert math.isfinite(report.epsilon_tilde)
