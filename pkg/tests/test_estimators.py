import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from adversarial_ht.core import EmpiricalType
from adversarial_ht.estimators import KnownSourceDetector, OptimalAttacker, TrainingDataDetector
from adversarial_ht.strategies import GameConfig, defender_decide_tr, optimal_attack_tr
from adversarial_ht.transport import DistortionSpec

HAMMING = [[0, 1], [1, 0]]


def seq_of(counts):
    return np.repeat(np.arange(len(counts)), counts)


class TestTrainingDataDetector:
    def test_params_and_clone(self):
        det = TrainingDataDetector(lam=0.2, threshold_mode="asymptotic")
        assert det.get_params() == {"alphabet_size": 2, "lam": 0.2, "threshold_mode": "asymptotic"}
        assert clone(det).get_params() == det.get_params()

    def test_not_fitted(self):
        with pytest.raises(NotFittedError):
            TrainingDataDetector().predict([[0, 1]])

    def test_agrees_with_defender(self):
        rng = np.random.default_rng(0)
        t = rng.integers(0, 2, 40)
        X = rng.integers(0, 2, (25, 20))
        det = TrainingDataDetector(lam=0.1, threshold_mode="asymptotic").fit(t)
        g = GameConfig(2, 20, 0.1, DistortionSpec.hamming(2, 0), c=2.0, threshold_mode="asymptotic")
        expected = [
            int(not defender_decide_tr(EmpiricalType.from_sequence(x, 2), EmpiricalType.from_sequence(t, 2), g).accepted)
            for x in X
        ]
        np.testing.assert_array_equal(det.predict(X), expected)

    def test_rejects_bad_symbols(self):
        det = TrainingDataDetector().fit([0, 1, 1, 0])
        with pytest.raises(ValueError):
            det.predict([[0, 2, 1, 0]])


class TestKnownSourceDetector:
    def test_identical_type_accepted(self):
        det = KnownSourceDetector(P_X=[0.5, 0.5], lam=0.1, threshold_mode="asymptotic").fit()
        assert det.predict([seq_of((5, 5)), seq_of((0, 10))]).tolist() == [0, 1]
        assert det.decision_function([seq_of((5, 5))])[0] == pytest.approx(-0.1)


class TestOptimalAttacker:
    def test_reference_rewrite(self):
        att = OptimalAttacker(cost=HAMMING, budget=0.125).fit(seq_of((5, 3)))
        y = np.array([1, 1, 0, 1, 1, 0, 1, 1])
        z = att.transform([y])[0]
        assert np.bincount(z, minlength=2).tolist() == [3, 5]
        assert (z != y).sum() == 1 and z[0] == 0

    def test_matches_type_level_attack(self):
        rng = np.random.default_rng(4)
        t = rng.integers(0, 3, 30)
        cost = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
        att = OptimalAttacker(cost=cost, budget=0.2).fit(t)
        g = GameConfig(3, 15, 1.0, DistortionSpec(cost, 0.2), c=2.0, threshold_mode="asymptotic")
        for y in rng.integers(0, 3, (10, 15)):
            z = att.transform([y])[0]
            ref = optimal_attack_tr(EmpiricalType.from_sequence(y, 3), EmpiricalType.from_sequence(t, 3), g)
            assert tuple(np.bincount(z, minlength=3)) == ref.z_type.counts
            spent = sum(cost[a][b] for a, b in zip(y, z))
            assert spent <= 0.2 * 15 + 1e-9

    def test_pipeline_with_detector_defeats_it(self):
        t = seq_of((50, 50))
        det = TrainingDataDetector(lam=0.05, threshold_mode="asymptotic").fit(t)
        att = OptimalAttacker(cost=HAMMING, budget=0.2).fit(t)
        y = np.array([seq_of((30, 70))])
        assert det.predict(y)[0] == 1
        assert det.predict(att.transform(y))[0] == 0

    def test_version_a_quantises(self):
        att = OptimalAttacker(cost=HAMMING, budget=0.0, defender_training_length=200).fit(np.r_[np.zeros(33, int), np.ones(67, int)])
        np.testing.assert_allclose(att.target_, [0.33, 0.67])

    def test_known_source(self):
        att = OptimalAttacker(cost=HAMMING, budget=0.1, game="ks").fit([0.5, 0.5])
        z = att.transform([seq_of((2, 8))])[0]
        assert np.bincount(z).tolist() == [3, 7]
