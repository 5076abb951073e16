import math

import numpy as np
from django.test import SimpleTestCase

from trainer import logistic
from trainer.data import MiniBatch
from trainer.exceptions import ModelInputError
from trainer.optim import OptimizerState, Rule


def _batch(features, labels, batch_id=0):
    return MiniBatch(id=batch_id, features=np.asarray(features, dtype=float), labels=np.asarray(labels))


def _numeric_gradient(W, batch, h=1e-5):
    grad = np.zeros_like(W)
    for index in np.ndindex(W.shape):
        up, down = W.copy(), W.copy()
        up[index] += h
        down[index] -= h
        grad[index] = (logistic.loss(up, batch) - logistic.loss(down, batch)) / (2 * h)
    return grad


class PredictProbsTests(SimpleTestCase):

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(3)
        W = rng.normal(size=(3, 5))
        probs = logistic.predict_probs(W, rng.normal(size=4))
        self.assertEqual(probs.shape, (3,))
        self.assertAlmostEqual(probs.sum(), 1.0, places=12)

    def test_zero_weights_are_uniform(self):
        probs = logistic.predict_probs(np.zeros((2, 3)), [1.0, -2.0])
        np.testing.assert_array_equal(probs, [0.5, 0.5])

    def test_zero_weights_three_classes(self):
        probs = logistic.predict_probs(np.zeros((3, 3)), [0.3, -1.2])
        np.testing.assert_allclose(probs, [1 / 3, 1 / 3, 1 / 3], rtol=0, atol=1e-15)

    def test_scores_one_and_zero(self):
        W = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        np.testing.assert_array_equal(logistic.scores(W, np.array([1.0, 0.0])), [1.0, 0.0])
        probs = logistic.predict_probs(W, [1.0, 0.0])
        np.testing.assert_allclose(probs, [0.73106, 0.26894], rtol=0, atol=5e-6)

    def test_feature_length_mismatch(self):
        with self.assertRaises(ModelInputError):
            logistic.predict_probs(np.zeros((2, 3)), [1.0, 2.0, 3.0])

    def test_matrix_input_rejected(self):
        with self.assertRaises(ModelInputError):
            logistic.predict_probs(np.zeros((2, 3)), np.zeros((2, 2)))


class LossTests(SimpleTestCase):

    def test_confident_correct_prediction_is_zero(self):
        W = np.array([[50.0, 0.0], [-50.0, 0.0]])
        self.assertLess(logistic.loss(W, _batch([[1.0], [2.0]], [0, 0])), 1e-11)

    def test_zero_weights_binary_is_ln2(self):
        self.assertAlmostEqual(logistic.loss(np.zeros((2, 3)), _batch([[1.0, 2.0]], [1])), math.log(2), places=12)

    def test_hand_evaluated_mean(self):
        # x = 0 gives p0 = 0.5; x = 1 gives p0 = 1/3 / (1/3 + 1) = 0.25
        W = np.array([[math.log(1 / 3), 0.0], [0.0, 0.0]])
        value = logistic.loss(W, _batch([[0.0], [1.0]], [0, 0]))
        self.assertAlmostEqual(value, (math.log(2) + math.log(4)) / 2, places=12)
        self.assertAlmostEqual(value, 1.03972, places=5)

    def test_empty_batch(self):
        with self.assertRaises(ModelInputError):
            logistic.loss(np.zeros((2, 2)), _batch(np.zeros((0, 1)), np.zeros(0, dtype=int)))


class GradientTests(SimpleTestCase):

    def test_single_binary_example(self):
        g = logistic.gradient(np.zeros((2, 2)), _batch([[1.0]], [0]))
        np.testing.assert_array_equal(g, [[-0.5, -0.5], [0.5, 0.5]])

    def test_shape_matches_weights(self):
        W = np.zeros((3, 5))
        g = logistic.gradient(W, _batch(np.ones((2, 4)), [0, 2]))
        self.assertEqual(g.shape, W.shape)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(2024)
        for n_classes in (2, 3):
            for _ in range(100):
                W = rng.normal(size=(n_classes, 4))
                batch = _batch(rng.normal(size=(5, 3)), rng.integers(0, n_classes, size=5))
                analytic = logistic.gradient(W, batch)
                numeric = _numeric_gradient(W, batch)
                error = np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(analytic)), 1e-8)
                self.assertLess(error, 1e-6)

    def test_is_average_of_single_example_gradients(self):
        rng = np.random.default_rng(11)
        W = rng.normal(size=(3, 4))
        features = rng.normal(size=(6, 3))
        labels = rng.integers(0, 3, size=6)
        whole = logistic.gradient(W, _batch(features, labels))
        singles = [logistic.gradient(W, _batch(features[i:i + 1], labels[i:i + 1])) for i in range(6)]
        np.testing.assert_allclose(whole, np.mean(singles, axis=0), rtol=0, atol=1e-12)


class DescentTests(SimpleTestCase):

    def test_small_vanilla_step_lowers_loss(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(200):
            n_classes = int(rng.integers(2, 5))
            W = rng.normal(size=(n_classes, 4))
            batch = _batch(rng.normal(size=(8, 3)), rng.integers(0, n_classes, size=8))
            g = logistic.gradient(W, batch)
            if np.linalg.norm(g) <= 1e-8:
                continue
            stepped = OptimizerState(rule=Rule.VANILLA, eta=1e-3).step(W, g)
            self.assertLess(logistic.loss(stepped, batch), logistic.loss(W, batch))
            checked += 1
        self.assertGreater(checked, 150)


class AccuracyTests(SimpleTestCase):

    def test_two_of_three(self):
        W = np.zeros((3, 2))
        W[:, -1] = [1.0, 0.0, 0.0]  # always predicts class 0
        self.assertAlmostEqual(logistic.accuracy(W, _batch([[0.0], [1.0], [2.0]], [0, 0, 1])), 2 / 3)

    def test_ties_go_to_lowest_class(self):
        np.testing.assert_array_equal(logistic.predict(np.zeros((3, 2)), [[1.0], [-1.0]]), [0, 0])

    def test_empty_examples(self):
        with self.assertRaises(ModelInputError):
            logistic.accuracy(np.zeros((2, 2)), _batch(np.zeros((0, 1)), np.zeros(0, dtype=int)))
