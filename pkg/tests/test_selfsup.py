"""Self-supervised pretraining, view pairs and labeled fine-tuning."""

import numpy as np
import pytest
import torch
import torch.nn.functional as F

from s4mi.executor.synthetic import synthetic_samples
from s4mi.model.config import ModelSpec, OptimizerConfig, PreprocessProfile, ScheduleConfig, SyntheticSpec
from s4mi.model.enums import ModelFamily, PreprocessMode, ViewRegime
from s4mi.model.errors import ConfigError, InvalidInputError, TrainingAbortedError
from s4mi.model.models import Embedding
from s4mi.networks.zoo import build_model
from s4mi.preprocessing.pipeline import preprocess_all
from s4mi.training.audit import AuditedDataset, LabelAccessAudit
from s4mi.training.data import ClassificationData
from s4mi.training.selfsup import embedding_variance, finetune, make_view_pair, pretrain, similarity_loss

CONV = ModelSpec(ModelFamily.CONV_CLASSIFIER, width=4, depth=2, input_size=16)
ATTENTION = ModelSpec(ModelFamily.ATTENTION_CLASSIFIER, width=8, depth=1, input_size=16, patch_size=8, num_heads=2)


@pytest.fixture
def class_data(tiny_samples):
    return ClassificationData.from_samples(tiny_samples)


class TestViewPairs:

    def test_architecture_regime_same_image(self, rng):
        image = rng.random((16, 16, 3)).astype(np.float32)
        pair = make_view_pair(image, ViewRegime.ARCHITECTURE_ASYMMETRIC, seed=0)
        np.testing.assert_array_equal(pair.view_a, pair.view_b)
        assert pair.transforms == []

    def test_augmentation_regime(self, rng):
        image = rng.random((16, 16, 3)).astype(np.float32)
        pair = make_view_pair(image, ViewRegime.AUGMENTATION_ASYMMETRIC, seed=5)
        assert pair.view_a.shape == image.shape and pair.view_a.dtype == image.dtype
        assert len(pair.transforms) == 2
        assert not np.array_equal(pair.view_a, pair.view_b)
        assert pair.view_a.min() >= 0.0 and pair.view_a.max() <= 1.0

    def test_seeded(self, rng):
        image = rng.random((16, 16, 3)).astype(np.float32)
        a = make_view_pair(image, ViewRegime.AUGMENTATION_ASYMMETRIC, seed=5)
        b = make_view_pair(image, ViewRegime.AUGMENTATION_ASYMMETRIC, seed=5)
        np.testing.assert_array_equal(a.view_a, b.view_a)
        assert a.transforms == b.transforms


class TestSimilarityLoss:

    def test_identical_embeddings(self, rng):
        e = torch.tensor(rng.normal(size=(4, 8)))
        assert similarity_loss(e, e.clone()).item() == pytest.approx(0.0, abs=1e-12)

    def test_opposite_embeddings(self, rng):
        e = torch.tensor(rng.normal(size=(4, 8)))
        assert similarity_loss(e, -e).item() == pytest.approx(2.0)

    def test_scale_invariance(self, rng):
        a, b = torch.tensor(rng.normal(size=(4, 8))), torch.tensor(rng.normal(size=(4, 8)))
        assert similarity_loss(3.0 * a, 0.5 * b).item() == pytest.approx(similarity_loss(a, b).item(), rel=1e-9)

    def test_bounds_on_random_pairs(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            a, b = torch.tensor(rng.normal(size=(2, 5))), torch.tensor(rng.normal(size=(2, 5)))
            assert 0.0 <= similarity_loss(Embedding(a), Embedding(b)).item() <= 2.0

    def test_stop_gradient(self, rng):
        a = torch.tensor(rng.normal(size=(3, 6)), requires_grad=True)
        b = torch.tensor(rng.normal(size=(3, 6)))
        similarity_loss(a, b).value.backward()
        reference = a.detach().clone().requires_grad_(True)
        (0.5 * (1.0 - F.cosine_similarity(reference, b, dim=-1))).mean().backward()
        torch.testing.assert_close(a.grad, reference.grad)

    def test_each_side_gets_half_the_finite_difference_gradient(self):
        rng = np.random.default_rng(42)
        a = torch.tensor(rng.normal(size=(1, 8)), requires_grad=True)
        b = torch.tensor(rng.normal(size=(1, 8)), requires_grad=True)
        similarity_loss(a, b).value.backward()
        h = 1e-6
        for tensor, grad in ((a, a.grad), (b, b.grad)):
            numeric = torch.zeros_like(grad)
            for i in range(8):
                with torch.no_grad():
                    tensor[0, i] += h
                    up = similarity_loss(a, b).item()
                    tensor[0, i] -= 2 * h
                    down = similarity_loss(a, b).item()
                    tensor[0, i] += h
                numeric[0, i] = (up - down) / (2 * h)
            torch.testing.assert_close(grad, 0.5 * numeric, rtol=1e-3, atol=1e-8)

    def test_zero_norm_rejected(self):
        with pytest.raises(InvalidInputError):
            similarity_loss(torch.zeros(2, 4), torch.ones(2, 4))

    def test_shape_mismatch(self):
        with pytest.raises(InvalidInputError):
            similarity_loss(torch.ones(2, 4), torch.ones(2, 5))

    def test_collapsed_embeddings_have_no_variance(self, rng):
        row = torch.tensor(rng.normal(size=(1, 8)))
        assert embedding_variance(row.repeat(6, 1)) == pytest.approx(0.0, abs=1e-15)
        assert embedding_variance(torch.tensor(rng.normal(size=(6, 8)))) > 0.0


class TestPretrain:

    def test_label_free(self, class_data):
        audit = LabelAccessAudit('pretrain')
        data = AuditedDataset(class_data.images, _labels=class_data.labels, audit=audit)
        result = pretrain(build_model(CONV, 0), data, epochs=2, regime=ViewRegime.AUGMENTATION_ASYMMETRIC,
                          optimizer_cfg=OptimizerConfig(), schedule_cfg=ScheduleConfig(), seed=0, batch_size=6,
                          embedding_dim=8)
        audit.assert_untouched()
        assert len(result.history) == 2
        assert 0.0 <= result.history.loss_trace()[-1] <= 2.0

    def test_architecture_regime_trains_both(self, class_data):
        conv, attention = build_model(CONV, 0), build_model(ATTENTION, 1)
        before = [p.detach().clone() for p in attention.parameters()]
        result = pretrain([conv, attention], class_data.images, epochs=1,
                          regime=ViewRegime.ARCHITECTURE_ASYMMETRIC, optimizer_cfg=OptimizerConfig(lr=1e-2),
                          schedule_cfg=ScheduleConfig(), seed=0, batch_size=6, embedding_dim=8)
        assert result.backbones == [conv, attention]
        assert any(not torch.equal(a, b) for a, b in zip(before, attention.parameters()))

    def test_backbone_count_checked(self, class_data):
        with pytest.raises(ConfigError):
            pretrain(build_model(CONV, 0), class_data.images, 1, ViewRegime.ARCHITECTURE_ASYMMETRIC,
                     OptimizerConfig(), ScheduleConfig(), seed=0)

    def test_reading_labels_is_caught(self, class_data):
        data = AuditedDataset(class_data.images, _labels=class_data.labels)
        _ = data.labels
        with pytest.raises(TrainingAbortedError) as info:
            data.audit.assert_untouched()
        assert info.value.diagnostic == {'label_reads': 1}


class TestFinetune:

    @pytest.mark.parametrize("fraction, expected", [(0.1, 1), (0.5, 6), (1.0, 12)])
    def test_labeled_subset_size(self, class_data, fraction, expected):
        _, history = finetune(build_model(CONV, 0), class_data, epochs=1, fraction=fraction,
                              optimizer_cfg=OptimizerConfig(), schedule_cfg=ScheduleConfig(), seed=0,
                              num_classes=2, val_data=class_data, batch_size=4)
        assert history.records[0].extra['num_labeled'] == expected
        assert 0.0 <= history.best_val_metric <= 1.0

    def test_zero_fraction_rejected(self, class_data):
        with pytest.raises(InvalidInputError):
            finetune(build_model(CONV, 0), class_data, 1, 0.0, OptimizerConfig(), ScheduleConfig(), 0, 2)

    def test_classifier_outputs(self, class_data):
        classifier, _ = finetune(build_model(ATTENTION, 0), class_data, epochs=1, fraction=1.0,
                                 optimizer_cfg=OptimizerConfig(), schedule_cfg=ScheduleConfig(), seed=0,
                                 num_classes=3)
        assert classifier(class_data.images[:2]).shape == (2, 3)


@pytest.mark.slow
class TestClassificationBenchmark:

    def test_hue_class_is_learnable(self):
        spec = SyntheticSpec(n_images=64, image_size=32, foreground_fraction=0.3, seed=1)
        profile = PreprocessProfile(mode=PreprocessMode.INTERPOLATE, intermediate_size=32, target_size=32,
                                    normalize_red=False)
        data = ClassificationData.from_samples(preprocess_all(synthetic_samples(spec), profile))
        train, test = data.select(data.ids[:48]), data.select(data.ids[48:])
        backbone = build_model(ModelSpec(ModelFamily.CONV_CLASSIFIER, width=8, depth=2, input_size=32), 0)
        _, history = finetune(backbone, train, epochs=25, fraction=1.0, optimizer_cfg=OptimizerConfig(lr=3e-3),
                              schedule_cfg=ScheduleConfig(t_max=25, lr_min=1e-4), seed=0, num_classes=2,
                              val_data=test, batch_size=8)
        assert history.best_val_metric > 0.7

    def test_similarity_loss_decreases_without_labels(self):
        spec = SyntheticSpec(n_images=200, image_size=64, foreground_fraction=0.2, seed=0)
        profile = PreprocessProfile(mode=PreprocessMode.INTERPOLATE, intermediate_size=64, target_size=64,
                                    normalize_red=False)
        data = ClassificationData.from_samples(preprocess_all(synthetic_samples(spec), profile))
        audit = LabelAccessAudit('pretrain')
        backbone = build_model(ModelSpec(ModelFamily.CONV_CLASSIFIER, width=16, depth=3, input_size=64), 1)
        result = pretrain(backbone, AuditedDataset(data.images, _labels=data.labels, audit=audit), epochs=5,
                          regime=ViewRegime.AUGMENTATION_ASYMMETRIC, optimizer_cfg=OptimizerConfig(),
                          schedule_cfg=ScheduleConfig(), seed=1, batch_size=16, embedding_dim=64)
        assert audit.reads == 0
        trace = result.history.loss_trace()
        assert len(trace) == 5
        assert trace[-1] < trace[0]
