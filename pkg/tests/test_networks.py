"""Model zoo, parameter-matched pairs and checkpoints."""

import numpy as np
import pytest
import torch

from s4mi.model.config import ModelSpec
from s4mi.model.enums import ModelFamily
from s4mi.model.errors import ConfigError, InvalidInputError
from s4mi.networks.checkpoints import (
    load_checkpoint,
    load_classifier,
    load_pretrained_weights,
    save_checkpoint,
    save_classifier,
)
from s4mi.networks.classifiers import EmbeddingNetwork, LinearHeadClassifier
from s4mi.networks.zoo import build_model, comparable_pair, parameter_count

SIZE = 32

SPECS = {
    ModelFamily.CONV_UNET: ModelSpec(ModelFamily.CONV_UNET, width=4, depth=3, input_size=SIZE),
    ModelFamily.WINDOWED_ATTENTION: ModelSpec(ModelFamily.WINDOWED_ATTENTION, width=8, depth=2, input_size=SIZE,
                                              patch_size=4, window_size=4, num_heads=2),
    ModelFamily.CONV_CLASSIFIER: ModelSpec(ModelFamily.CONV_CLASSIFIER, width=4, depth=2, num_classes=3,
                                           input_size=SIZE),
    ModelFamily.ATTENTION_CLASSIFIER: ModelSpec(ModelFamily.ATTENTION_CLASSIFIER, width=8, depth=1, num_classes=3,
                                                input_size=SIZE, patch_size=8, num_heads=2),
    ModelFamily.POINTWISE: ModelSpec(ModelFamily.POINTWISE, width=4, depth=2, input_size=SIZE),
}


def _same_state(a, b):
    sa, sb = a.state_dict(), b.state_dict()
    return sa.keys() == sb.keys() and all(torch.equal(sa[k], sb[k]) for k in sa)


class TestBuildModel:

    @pytest.mark.parametrize("family", list(SPECS))
    def test_output_shapes(self, family):
        model = build_model(SPECS[family], seed=0).eval()
        with torch.no_grad():
            out = model(torch.randn(2, 3, SIZE, SIZE))
        if family.is_segmenter:
            assert out.shape == (2, 2, SIZE, SIZE)
        else:
            assert out.shape == (2, 3)

    @pytest.mark.parametrize("family", list(SPECS))
    def test_seed_determinism(self, family):
        assert _same_state(build_model(SPECS[family], 5), build_model(SPECS[family], 5))
        assert not _same_state(build_model(SPECS[family], 5), build_model(SPECS[family], 6))

    def test_global_rng_untouched(self):
        torch.manual_seed(1)
        expected = torch.rand(3)
        torch.manual_seed(1)
        build_model(SPECS[ModelFamily.CONV_UNET], seed=9)
        assert torch.equal(torch.rand(3), expected)

    def test_indivisible_input_rejected(self):
        with pytest.raises(ConfigError):
            build_model(ModelSpec(ModelFamily.CONV_UNET, depth=3, input_size=30), seed=0)

    def test_window_grid_rejected(self):
        spec = ModelSpec(ModelFamily.WINDOWED_ATTENTION, width=8, input_size=SIZE, patch_size=4, window_size=3)
        with pytest.raises(ConfigError):
            build_model(spec, seed=0)

    def test_heads_must_divide_width(self):
        spec = ModelSpec(ModelFamily.ATTENTION_CLASSIFIER, width=7, num_heads=2, input_size=SIZE, patch_size=8)
        with pytest.raises(ConfigError):
            build_model(spec, seed=0)

    def test_parameter_groups_cover_everything(self):
        model = build_model(SPECS[ModelFamily.CONV_UNET], seed=0)
        grouped = sum(len(params) for params in model.named_parameter_groups().values())
        assert grouped == len(list(model.parameters()))
        assert model.mode == 'train'
        assert model.eval().mode == 'eval'


class TestParameterCount:

    def test_pointwise_by_hand(self):
        # 3→4 conv (12 + 4) and 4→2 head (8 + 2)
        assert parameter_count(build_model(SPECS[ModelFamily.POINTWISE], 0)) == 26

    def test_comparable_pair_within_tolerance(self):
        conv, attention = comparable_pair(50_000, input_size=SIZE, window_size=4)
        assert conv.spec.family == ModelFamily.CONV_UNET
        assert attention.spec.family == ModelFamily.WINDOWED_ATTENTION
        for model in (conv, attention):
            assert abs(parameter_count(model) - 50_000) / 50_000 < 0.2

    def test_budget_too_small(self):
        with pytest.raises(ConfigError):
            comparable_pair(100, input_size=SIZE, window_size=4)


class TestCheckpoints:

    def test_round_trip(self, tmp_path):
        model = build_model(SPECS[ModelFamily.CONV_UNET], seed=2)
        path = save_checkpoint(model, tmp_path / 'nested' / 'model.pt', extra={'epoch': 3})
        restored, extra = load_checkpoint(path)
        assert extra == {'epoch': 3}
        assert restored.spec == model.spec
        x = torch.randn(1, 3, SIZE, SIZE)
        with torch.no_grad():
            torch.testing.assert_close(restored.eval()(x), model.eval()(x))

    def test_no_temporary_files_left(self, tmp_path):
        save_checkpoint(build_model(SPECS[ModelFamily.POINTWISE], 0), tmp_path / 'm.pt')
        assert [p.name for p in tmp_path.iterdir()] == ['m.pt']

    def test_classifier_round_trip(self, tmp_path):
        backbone = build_model(SPECS[ModelFamily.CONV_CLASSIFIER], seed=0)
        classifier = LinearHeadClassifier(backbone, num_classes=4)
        path = save_classifier(classifier, tmp_path / 'classifier.pt', extra={'method': 'transfer'})
        restored, extra = load_classifier(path)
        assert extra['method'] == 'transfer'
        x = torch.randn(2, 3, SIZE, SIZE)
        with torch.no_grad():
            torch.testing.assert_close(restored.eval()(x), classifier.eval()(x))

    def test_plain_checkpoint_is_not_a_classifier(self, tmp_path):
        path = save_checkpoint(build_model(SPECS[ModelFamily.CONV_CLASSIFIER], 0), tmp_path / 'b.pt')
        with pytest.raises(InvalidInputError):
            load_classifier(path)


class TestPretrainedWeights:

    def test_named_arrays_loaded(self, tmp_path):
        source = build_model(SPECS[ModelFamily.POINTWISE], seed=1)
        arrays = {name: tensor.numpy() for name, tensor in source.state_dict().items()}
        np.savez(tmp_path / 'weights.npz', **arrays)
        target = build_model(SPECS[ModelFamily.POINTWISE], seed=2)
        loaded = load_pretrained_weights(target, tmp_path / 'weights.npz', strict=True)
        assert sorted(loaded) == sorted(arrays)
        assert _same_state(source, target)

    def test_unused_arrays_skipped_unless_strict(self, tmp_path):
        model = build_model(SPECS[ModelFamily.POINTWISE], seed=1)
        np.savez(tmp_path / 'w.npz', unrelated=np.zeros(3))
        assert load_pretrained_weights(model, tmp_path / 'w.npz') == []
        with pytest.raises(InvalidInputError):
            load_pretrained_weights(model, tmp_path / 'w.npz', strict=True)

    def test_shape_mismatch(self, tmp_path):
        model = build_model(SPECS[ModelFamily.POINTWISE], seed=1)
        np.savez(tmp_path / 'w.npz', **{'head.bias': np.zeros(5, dtype=np.float32)})
        with pytest.raises(InvalidInputError):
            load_pretrained_weights(model, tmp_path / 'w.npz')


class TestEmbeddingNetwork:

    def test_projection_shape(self):
        backbone = build_model(SPECS[ModelFamily.ATTENTION_CLASSIFIER], seed=0)
        net = EmbeddingNetwork(backbone, embedding_dim=16)
        assert net(torch.randn(3, 3, SIZE, SIZE)).shape == (3, 16)
