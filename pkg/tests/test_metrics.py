"""Overlap and classification scores, seed aggregation and saliency."""

import itertools

import numpy as np
import pytest
import torch
from torch import nn

from s4mi.evaluation.aggregate import aggregate_seeds, interval_multiplier
from s4mi.evaluation.metrics import (
    classification_scores,
    confusion_counts,
    dice_coefficient,
    f1,
    iou,
    macro_f1,
    mean_iou,
    micro_f1,
    precision,
    recall,
    segmentation_scores,
)
from s4mi.evaluation.saliency import saliency_map
from s4mi.model.enums import Averaging, IntervalKind
from s4mi.model.errors import InvalidInputError
from s4mi.presentation.saliency_images import render_saliency

ALL_2X2 = [np.array(bits, dtype=np.int64).reshape(2, 2) for bits in itertools.product([0, 1], repeat=4)]


class TestOverlap:

    def test_all_2x2_pairs_against_set_definitions(self):
        for pred, gt in itertools.product(ALL_2X2, ALL_2X2):
            u = {i for i, v in enumerate(pred.ravel()) if v}
            v = {i for i, x in enumerate(gt.ravel()) if x}
            expected_iou = len(u & v) / len(u | v) if u | v else 1.0
            expected_dice = 2 * len(u & v) / (len(u) + len(v)) if u or v else 1.0
            assert iou(pred, gt, positive_class=1) == pytest.approx(expected_iou)
            assert dice_coefficient(pred, gt, positive_class=1) == pytest.approx(expected_dice)
            assert dice_coefficient(pred, gt, 1) == pytest.approx(2 * expected_iou / (1 + expected_iou))
            if u or v:
                assert f1(confusion_counts(pred, gt)) == pytest.approx(expected_dice)
            assert 0.0 <= iou(pred, gt, 1) <= dice_coefficient(pred, gt, 1) <= 1.0

    def test_hand_evaluated_case(self):
        pred = np.array([[1, 1], [0, 0]])
        gt = np.array([[1, 0], [1, 0]])
        counts = confusion_counts(pred, gt)
        assert (counts.tp, counts.fp, counts.fn, counts.tn) == (1, 1, 1, 1)
        assert iou(pred, gt, 1) == pytest.approx(1 / 3)
        assert f1(counts) == pytest.approx(0.5)
        assert precision(counts) == pytest.approx(0.5)
        assert recall(counts) == pytest.approx(0.5)

    def test_empty_masks(self):
        empty = np.zeros((3, 3), dtype=np.int64)
        assert iou(empty, empty, 1) == 1.0
        assert dice_coefficient(empty, empty, 1) == 1.0
        counts = confusion_counts(empty, empty)
        assert not counts.f1_defined
        assert f1(counts) == 0.0 and precision(counts) == 0.0 and recall(counts) == 0.0

    def test_mean_iou_skips_absent_classes(self):
        pred = np.array([[0, 1], [1, 1]])
        gt = np.array([[0, 1], [1, 0]])
        # class 0: 1/2, class 1: 2/3, class 2 absent
        assert mean_iou(pred, gt, num_classes=3) == pytest.approx((0.5 + 2 / 3) / 2)

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            iou(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_segmentation_scores_average_per_image(self):
        preds = [np.array([[1, 1], [0, 0]]), np.ones((2, 2), dtype=np.int64)]
        gts = [np.array([[1, 0], [1, 0]]), np.ones((2, 2), dtype=np.int64)]
        scores = segmentation_scores(preds, gts)
        assert scores['iou'] == pytest.approx((1 / 3 + 1.0) / 2)
        assert scores['dice'] == pytest.approx((0.5 + 1.0) / 2)
        assert set(scores) == {'iou', 'dice', 'precision', 'recall', 'f1'}

    def test_segmentation_scores_need_pairs(self):
        with pytest.raises(InvalidInputError):
            segmentation_scores([], [])


class TestClassificationScores:

    def test_binary(self):
        scores = classification_scores(np.array([1, 1, 0, 0]), np.array([1, 0, 1, 0]), num_classes=2)
        assert scores == pytest.approx({'f1': 0.5, 'recall': 0.5, 'precision': 0.5})

    def test_macro_and_micro(self):
        pred, target = np.array([0, 1, 2, 2]), np.array([0, 1, 1, 2])
        assert macro_f1(pred, target, 3) == pytest.approx((1 + 2 / 3 + 2 / 3) / 3)
        assert micro_f1(pred, target, 3) == pytest.approx(0.75)
        micro = classification_scores(pred, target, 3, averaging=Averaging.MICRO)
        assert micro['f1'] == pytest.approx(0.75)

    def test_multilabel(self):
        pred = np.array([[1, 0, 1], [0, 1, 0]])
        target = np.array([[1, 0, 0], [0, 1, 0]])
        scores = classification_scores(pred, target, 3, multilabel=True)
        # class 2 has a false positive only: F1 0
        assert scores['f1'] == pytest.approx((1.0 + 1.0 + 0.0) / 3)
        assert micro_f1(pred, target, 3, multilabel=True) == pytest.approx(2 * 2 / (2 * 2 + 1))


class TestAggregate:

    def test_two_seeds(self):
        agg = aggregate_seeds([0.5, 0.7])
        assert agg.mean == pytest.approx(0.6)
        assert agg.ci_halfwidth == pytest.approx(0.196, abs=1e-6)
        assert agg.format() == "0.6000 ± 0.1960"

    def test_identical_values(self):
        agg = aggregate_seeds([0.4, 0.4, 0.4])
        assert agg.mean == pytest.approx(0.4) and agg.ci_halfwidth == 0.0

    def test_student_t(self):
        assert interval_multiplier(2, 0.95, IntervalKind.STUDENT_T) == pytest.approx(12.7062, abs=1e-3)
        agg = aggregate_seeds([0.5, 0.7], interval=IntervalKind.STUDENT_T)
        assert agg.ci_halfwidth > aggregate_seeds([0.5, 0.7]).ci_halfwidth
        assert agg.to_dict()['interval'] == IntervalKind.STUDENT_T.value

    def test_other_confidence(self):
        assert interval_multiplier(5, 0.9) == pytest.approx(1.6449, abs=1e-4)

    def test_needs_two_values(self):
        with pytest.raises(InvalidInputError):
            aggregate_seeds([0.5])


class _Constant(nn.Module):

    def __init__(self):
        super().__init__()
        self.bias = nn.Parameter(torch.tensor([0.3, -0.2]))

    def forward(self, x):
        return self.bias.expand(x.shape[0], -1)


class TestSaliency:

    def test_linear_model_gives_weight_magnitudes(self):
        torch.manual_seed(0)
        model = nn.Sequential(nn.Flatten(), nn.Linear(3 * 4 * 4, 2)).double()
        image = torch.rand(3, 4, 4, dtype=torch.float64)
        sal = saliency_map(model, image, class_index=1, normalize=False)
        expected = model[1].weight[1].detach().abs().reshape(3, 4, 4).amax(dim=0).numpy()
        np.testing.assert_allclose(sal.values, expected)
        assert sal.class_index == 1

    def test_matches_finite_differences(self):
        torch.manual_seed(0)
        model = nn.Sequential(nn.Conv2d(1, 2, 3, padding=1), nn.Tanh(), nn.Flatten(), nn.Linear(2 * 16, 2)).double()
        image = torch.rand(1, 4, 4, dtype=torch.float64)
        sal = saliency_map(model, image, class_index=0, normalize=False)
        eps = 1e-6
        numeric = np.zeros((4, 4))
        with torch.no_grad():
            for i in range(4):
                for j in range(4):
                    up, down = image.clone(), image.clone()
                    up[0, i, j] += eps
                    down[0, i, j] -= eps
                    numeric[i, j] = abs(float(model(up[None])[0, 0] - model(down[None])[0, 0])) / (2 * eps)
        np.testing.assert_allclose(sal.values, numeric, rtol=1e-4, atol=1e-8)

    def test_normalized_peak(self, rng):
        model = nn.Sequential(nn.Flatten(), nn.Linear(3 * 4 * 4, 2))
        sal = saliency_map(model, rng.random((4, 4, 3)).astype(np.float32), class_index=0)
        assert sal.values.shape == (4, 4)
        assert sal.values.max() == pytest.approx(1.0)
        assert sal.values.min() >= 0.0

    def test_constant_model_gives_zero_map(self):
        sal = saliency_map(_Constant(), torch.rand(3, 4, 4), class_index=0)
        np.testing.assert_array_equal(sal.values, np.zeros((4, 4)))

    def test_training_mode_restored(self):
        model = nn.Sequential(nn.Flatten(), nn.Linear(3 * 4 * 4, 2))
        saliency_map(model, torch.rand(3, 4, 4), class_index=0)
        assert model.training

    def test_class_index_out_of_range(self):
        model = nn.Sequential(nn.Flatten(), nn.Linear(3 * 4 * 4, 2))
        with pytest.raises(InvalidInputError):
            saliency_map(model, torch.rand(3, 4, 4), class_index=2)

    def test_batch_rejected(self):
        model = nn.Sequential(nn.Flatten(), nn.Linear(3 * 4 * 4, 2))
        with pytest.raises(InvalidInputError):
            saliency_map(model, torch.rand(1, 3, 4, 4), class_index=0)

    def test_render_writes_one_figure_per_image(self, tmp_path):
        torch.manual_seed(0)
        model = nn.Sequential(nn.Flatten(), nn.Linear(3 * 8 * 8, 2))
        paths = render_saliency(model, torch.rand(2, 3, 8, 8), ['a', 'b'], tmp_path / 'saliency')
        assert [p.name for p in paths] == ['saliency_a.png', 'saliency_b.png']
        assert all(p.stat().st_size > 0 for p in paths)
