"""Dice, weighted cross-entropy, cross-teaching and classification losses."""

import math

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from s4mi.model.enums import WeightScheme
from s4mi.model.errors import InvalidInputError
from s4mi.model.models import ClassWeights, LossValue, PseudoMask
from s4mi.training.losses import (
    classification_loss,
    combine_supervised,
    cross_teach_unsup_loss,
    dice_loss,
    pseudo_label,
    supervised_loss,
    total_semi_loss,
    weighted_cross_entropy,
)


def _one_hot(target, classes=2):
    return F.one_hot(target, classes).permute(0, 3, 1, 2).double()


def _loss(value):
    return LossValue(torch.tensor(value, dtype=torch.float64))


class TestDiceLoss:

    def test_perfect_overlap(self):
        target = torch.tensor([[[0, 1], [1, 1]]])
        assert dice_loss(_one_hot(target), target).item() < 1e-4

    def test_disjoint(self):
        target = torch.tensor([[[0, 1], [1, 0]]])
        assert dice_loss(_one_hot(1 - target), target).item() > 1 - 1e-3

    def test_hand_evaluated_two_pixel_case(self):
        # class 1: 1 − 2·1/(1+2) = 1/3; class 0: no target pixels, one predicted → ≈ 1
        probs = torch.tensor([[[[0.0, 1.0]], [[1.0, 0.0]]]], dtype=torch.float64)
        target = torch.tensor([[[1, 1]]])
        value = dice_loss(probs, target).item()
        assert value == pytest.approx((1 / 3 + 1.0) / 2, abs=1e-4)

    def test_rejects_non_simplex(self):
        with pytest.raises(InvalidInputError):
            dice_loss(torch.full((1, 2, 2, 2), 0.7), torch.zeros(1, 2, 2, dtype=torch.long))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            dice_loss(torch.full((1, 2, 2, 2), 0.5), torch.zeros(1, 3, 2, dtype=torch.long))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        logits = torch.tensor(rng.normal(size=(1, 2, 4, 4)), requires_grad=True)
        target = torch.tensor(rng.integers(0, 2, size=(1, 4, 4)))
        assert torch.autograd.gradcheck(
            lambda x: dice_loss(torch.softmax(x, dim=1), target).value, (logits,), eps=1e-6, atol=1e-6, rtol=1e-3
        )


class TestWeightedCrossEntropy:

    def test_uniform_logits(self):
        value = weighted_cross_entropy(torch.zeros(1, 2, 3, 3), torch.zeros(1, 3, 3, dtype=torch.long))
        assert value.item() == pytest.approx(math.log(2), abs=1e-6)

    def test_confident_correct(self):
        target = torch.tensor([[[0, 1]]])
        logits = 20.0 * (2 * _one_hot(target) - 1).float()
        assert weighted_cross_entropy(logits, target).item() < 1e-6

    def test_weighted_mean_matches_brute_force(self, rng):
        logits = torch.tensor(rng.normal(size=(2, 3, 4, 5)))
        target = torch.tensor(rng.integers(0, 3, size=(2, 4, 5)))
        w = np.array([0.5, 2.0, 1.25])
        log_p = torch.log_softmax(logits, dim=1).numpy()
        num = den = 0.0
        for b in range(2):
            for i in range(4):
                for j in range(5):
                    y = int(target[b, i, j])
                    num += -w[y] * log_p[b, y, i, j]
                    den += w[y]
        value = weighted_cross_entropy(logits, target, ClassWeights(w, WeightScheme.PIXEL_RATIO)).item()
        assert value == pytest.approx(num / den, rel=1e-9)

    def test_scaling_weights_is_neutral(self, rng):
        logits = torch.tensor(rng.normal(size=(1, 2, 4, 4)))
        target = torch.tensor(rng.integers(0, 2, size=(1, 4, 4)))
        w = ClassWeights(np.array([0.3, 1.7]), WeightScheme.PIXEL_RATIO)
        w2 = ClassWeights(2 * w.weights, WeightScheme.PIXEL_RATIO)
        assert weighted_cross_entropy(logits, target, w).item() == pytest.approx(
            weighted_cross_entropy(logits, target, w2).item(), rel=1e-12)

    def test_non_finite_logits(self):
        logits = torch.zeros(1, 2, 2, 2)
        logits[0, 0, 0, 0] = float('nan')
        with pytest.raises(InvalidInputError):
            weighted_cross_entropy(logits, torch.zeros(1, 2, 2, dtype=torch.long))

    def test_weight_count_mismatch(self):
        with pytest.raises(InvalidInputError):
            weighted_cross_entropy(torch.zeros(1, 2, 2, 2), torch.zeros(1, 2, 2, dtype=torch.long),
                                   ClassWeights(np.ones(3), WeightScheme.PIXEL_RATIO))

    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(42)
        logits = torch.tensor(rng.normal(size=(1, 2, 4, 4)), requires_grad=True)
        target = torch.tensor(rng.integers(0, 2, size=(1, 4, 4)))
        weights = ClassWeights(np.array([0.4, 1.6]), WeightScheme.PIXEL_RATIO)
        assert torch.autograd.gradcheck(
            lambda x: weighted_cross_entropy(x, target, weights).value, (logits,), eps=1e-6, atol=1e-6, rtol=1e-3
        )


class TestSupervisedLoss:

    def test_arithmetic_mean(self):
        combined = combine_supervised(_loss(0.4), _loss(0.6))
        assert combined.item() == pytest.approx(0.5)
        assert set(combined.components) == {'dice', 'ce', 'supervised'}

    def test_perfect_prediction(self):
        target = torch.tensor([[[0, 1], [1, 0]]])
        logits = 30.0 * (2 * _one_hot(target) - 1)
        assert supervised_loss(logits, target).item() < 1e-4

    def test_identity_on_random_instances(self):
        rng = np.random.default_rng(42)
        weights = ClassWeights(np.array([0.6, 1.4]), WeightScheme.PIXEL_RATIO)
        for _ in range(1000):
            seg = torch.tensor(rng.normal(size=(1, 2, 4, 4)))
            target = torch.tensor(rng.integers(0, 2, size=(1, 4, 4)))
            dice = dice_loss(torch.softmax(seg, dim=1), target).item()
            ce = weighted_cross_entropy(seg, target, weights).item()
            assert supervised_loss(seg, target, weights).item() == pytest.approx(0.5 * (dice + ce), abs=1e-9)


class TestPseudoLabels:

    def test_argmax_and_ties(self):
        logits = torch.tensor([[[[0.2, 0.5]], [[0.8, 0.5]]]])
        assert pseudo_label(logits).values.tolist() == [[[1, 0]]]

    def test_shift_invariance(self, rng):
        logits = torch.tensor(rng.normal(size=(2, 3, 5, 5)))
        shift = torch.tensor(rng.normal(size=(2, 1, 5, 5)))
        assert torch.equal(pseudo_label(logits).values, pseudo_label(logits + shift).values)

    def test_pseudo_label_carries_no_gradient(self):
        logits = torch.randn(1, 2, 3, 3, requires_grad=True)
        assert not pseudo_label(logits, 'conv').values.requires_grad


class TestCrossTeachLoss:

    def test_agreement(self):
        pseudo = PseudoMask(torch.tensor([[[0, 1], [1, 1]]]))
        logits = 30.0 * (2 * _one_hot(pseudo.values) - 1)
        assert cross_teach_unsup_loss(logits, pseudo).item() < 0.01

    def test_disagreement(self):
        pseudo = PseudoMask(torch.tensor([[[0, 1], [1, 0]]]))
        logits = 30.0 * (2 * _one_hot(1 - pseudo.values) - 1)
        assert cross_teach_unsup_loss(logits, pseudo).item() > 0.99

    def test_delegates_to_dice(self, rng):
        logits = torch.tensor(rng.normal(size=(2, 2, 4, 4)))
        pseudo = PseudoMask(torch.tensor(rng.integers(0, 2, size=(2, 4, 4))))
        direct = dice_loss(torch.softmax(logits, dim=1), pseudo.values).item()
        assert cross_teach_unsup_loss(logits, pseudo).item() == pytest.approx(direct, abs=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            cross_teach_unsup_loss(torch.zeros(1, 2, 4, 4), PseudoMask(torch.zeros(1, 3, 3, dtype=torch.long)))


class TestTotalSemiLoss:

    def test_sum(self):
        total = total_semi_loss(_loss(0.5), _loss(0.3))
        assert total.item() == pytest.approx(0.8)
        assert total.components['total'] == pytest.approx(0.8)

    def test_zero_unsup_is_identity(self):
        assert total_semi_loss(_loss(0.42), _loss(0.0)).item() == pytest.approx(0.42)

    def test_identity_and_bound_on_random_pairs(self):
        rng = np.random.default_rng(42)
        for sup, unsup in rng.uniform(0, 3, size=(1000, 2)):
            total = total_semi_loss(_loss(sup), _loss(unsup)).item()
            assert total == pytest.approx(sup + unsup, abs=1e-9)
            assert total >= max(sup, unsup)

    def test_unsup_weight(self):
        assert total_semi_loss(_loss(0.5), _loss(0.3), unsup_weight=0.5).item() == pytest.approx(0.65)

    def test_negative_terms_rejected(self):
        with pytest.raises(InvalidInputError):
            total_semi_loss(_loss(-0.1), _loss(0.3))


class TestClassificationLoss:

    def test_single_label(self):
        logits = torch.zeros(4, 3)
        value = classification_loss(logits, torch.tensor([0, 1, 2, 0]))
        assert value.item() == pytest.approx(math.log(3), abs=1e-6)

    def test_multilabel(self):
        logits = torch.zeros(2, 3)
        value = classification_loss(logits, torch.tensor([[1, 0, 1], [0, 0, 1]]), multilabel=True)
        assert value.item() == pytest.approx(math.log(2), abs=1e-6)

    def test_multilabel_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            classification_loss(torch.zeros(2, 3), torch.zeros(2, 2), multilabel=True)
