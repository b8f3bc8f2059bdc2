"""Tests for the Bernoulli linear classifiers and their simulation."""

import numpy as np
import pytest

from snrkit.parametric import (
    BernoulliProblem,
    LinearClassifier,
    SimProtocol,
    calibrate_tau,
    fisher_information_bernoulli,
    ml_classifier_weights,
    benchmark_configuration,
    simulate_accuracy,
    snr_classifier_weights,
)


class TestFisherInformation:
    def test_half(self):
        assert fisher_information_bernoulli(np.array([0.5]))[0] == pytest.approx(4.0)

    def test_point_one(self):
        assert fisher_information_bernoulli(np.array([0.1]))[0] == pytest.approx(
            11.111111111111, abs=1e-9
        )

    def test_blowup_near_boundary(self):
        vals = fisher_information_bernoulli(np.array([0.9, 0.99, 0.999999]))
        assert np.all(np.diff(vals) > 0)
        assert vals[-1] > 1e6

    def test_singular_rejected(self):
        for theta in ([0.0], [1.0], [0.5, 1.0]):
            with pytest.raises(ValueError):
                fisher_information_bernoulli(np.array(theta))


class TestWeights:
    def test_arccos_values(self):
        w = snr_classifier_weights(BernoulliProblem(np.array([0.1, 0.001]))).weights
        assert w[0] == pytest.approx(1.470628906, abs=1e-8)
        assert w[1] == pytest.approx(1.569796327, abs=1e-8)

    def test_arccos_vanishes_near_one(self):
        w = snr_classifier_weights(BernoulliProblem(np.array([1 - 1e-12]))).weights
        assert w[0] == pytest.approx(0.0, abs=1e-5)

    def test_ml_values(self):
        w = ml_classifier_weights(BernoulliProblem(np.array([0.1, 0.001]))).weights
        assert w[0] == pytest.approx(2.302585093, abs=1e-8)
        assert w[1] == pytest.approx(6.907755279, abs=1e-8)

    def test_weight_ordering_rarer_heavier(self):
        p = np.array([0.001, 0.01, 0.1, 0.5, 0.9])
        for make in (snr_classifier_weights, ml_classifier_weights):
            w = make(BernoulliProblem(p)).weights
            assert np.all(np.diff(w) < 0)

    def test_problem_validation(self):
        with pytest.raises(ValueError):
            BernoulliProblem(np.array([0.0, 0.5]))
        with pytest.raises(ValueError):
            BernoulliProblem(np.array([1.0]))


class TestCalibrateTau:
    def test_zero_weights_tie_break(self):
        prob = BernoulliProblem(np.array([0.2, 0.4]))
        proto = SimProtocol(n_trials=1000, seed=3, calibration_trials=1000)
        c = LinearClassifier(weights=np.zeros(2))
        assert calibrate_tau(c, prob, proto) == 0.0

    def test_separable_single_coordinate(self):
        # class 0 never fires, class 1 always fires: tau must sit strictly
        # between the two achievable scores
        prob = BernoulliProblem(np.array([0.5]))
        proto = SimProtocol(
            n_trials=1000,
            seed=1,
            calibration_trials=1000,
            sampler_class0=lambda rng, p, n: np.zeros((n, p.size)),
            sampler_class1=lambda rng, p, n: np.ones((n, p.size)),
        )
        c = snr_classifier_weights(prob)
        tau = calibrate_tau(c, prob, proto)
        assert 0.0 <= tau < c.weights[0]
        r = simulate_accuracy(prob, proto)
        assert r.acc_snr == 1.0 and r.acc_ml == 1.0

    def test_deterministic(self):
        prob = benchmark_configuration()
        proto = SimProtocol(n_trials=1000, seed=9)
        c = snr_classifier_weights(prob)
        assert calibrate_tau(c, prob, proto) == calibrate_tau(c, prob, proto)


class TestSimulateAccuracy:
    def test_paired_determinism(self):
        prob = benchmark_configuration()
        proto = SimProtocol(n_trials=20_000, seed=7)
        r1 = simulate_accuracy(prob, proto)
        r2 = simulate_accuracy(prob, proto)
        assert (r1.acc_snr, r1.acc_ml, r1.tau_snr, r1.tau_ml) == (
            r2.acc_snr,
            r2.acc_ml,
            r2.tau_snr,
            r2.tau_ml,
        )

    def test_indistinguishable_classes_give_coin_flip(self):
        # identical theta distribution under both classes
        sampler = lambda rng, p, n: rng.uniform(0.0, 1.0, size=(n, p.size))
        prob = BernoulliProblem(np.array([0.3, 0.6, 0.5]))
        proto = SimProtocol(
            n_trials=40_000, seed=5, sampler_class0=sampler, sampler_class1=sampler
        )
        r = simulate_accuracy(prob, proto)
        se = np.sqrt(0.25 / proto.n_trials)
        assert abs(r.acc_snr - 0.5) <= 3 * se + 1e-9
        assert abs(r.acc_ml - 0.5) <= 3 * se + 1e-9

    def test_benchmark_configuration_ordering(self):
        r = simulate_accuracy(benchmark_configuration(), SimProtocol(n_trials=50_000, seed=0))
        assert r.acc_snr > r.acc_ml

    def test_decision_invariance_under_positive_scaling(self):
        prob = benchmark_configuration()
        proto = SimProtocol(n_trials=5_000, seed=11)
        base = snr_classifier_weights(prob, proto)
        scaled = LinearClassifier(weights=7.5 * base.weights, tau=7.5 * base.tau)
        rng = np.random.default_rng(2)
        x = (rng.uniform(size=(4_000, prob.dim)) < 0.3).astype(float)
        assert np.array_equal(base.predict(x), scaled.predict(x))
