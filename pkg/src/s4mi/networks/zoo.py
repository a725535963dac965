"""Model construction, parameter accounting and parameter-matched pairs."""

import logging
from dataclasses import replace
from typing import Dict, Iterable, Tuple, Type

import torch
from torch import nn

from ..model.config import ModelSpec
from ..model.enums import ModelFamily
from ..model.errors import ConfigError
from .attention import WindowAttentionSegmenter
from .classifiers import AttentionClassifier, ConvClassifier
from .interfaces import DifferentiableModel
from .unet import ConvUNet, PointwiseNet

logger = logging.getLogger(__name__)

FAMILIES: Dict[ModelFamily, Type[DifferentiableModel]] = {
    ModelFamily.CONV_UNET: ConvUNet,
    ModelFamily.WINDOWED_ATTENTION: WindowAttentionSegmenter,
    ModelFamily.CONV_CLASSIFIER: ConvClassifier,
    ModelFamily.ATTENTION_CLASSIFIER: AttentionClassifier,
    ModelFamily.POINTWISE: PointwiseNet,
}

PAIR_TOLERANCE = 0.2
MIN_PAIR_BUDGET = 2_000


def build_model(spec: ModelSpec, seed: int) -> DifferentiableModel:
    """Build a seed-deterministic model; the global RNG state is left untouched."""
    spec.validate()
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        model = FAMILIES[spec.family](spec)
    return model


def parameter_count(model: nn.Module) -> int:
    return sum(parameter.numel() for parameter in model.parameters())


def _count_without_allocation(spec: ModelSpec) -> int:
    with torch.device('meta'):
        return parameter_count(FAMILIES[spec.family](spec))


def _closest_width(base: ModelSpec, widths: Iterable[int], budget: int) -> Tuple[ModelSpec, int]:
    best = None
    for width in widths:
        candidate = replace(base, width=width)
        try:
            candidate.validate()
        except ConfigError:
            continue
        count = _count_without_allocation(candidate)
        if best is None or abs(count - budget) < abs(best[1] - budget):
            best = (candidate, count)
        if count > budget * (1 + PAIR_TOLERANCE):
            break
    if best is None:
        raise ConfigError(f"No valid {base.family.value} width for budget {budget}")
    return best


def comparable_pair(
    budget: int,
    seed: int = 0,
    num_classes: int = 2,
    in_channels: int = 3,
    input_size: int = 224,
    conv_depth: int = 3,
    attention_depth: int = 2,
    window_size: int = 7,
    patch_size: int = 4,
    num_heads: int = 2,
) -> Tuple[DifferentiableModel, DifferentiableModel]:
    """A conv U-Net and a windowed-attention segmenter, each within 20% of budget."""
    if budget < MIN_PAIR_BUDGET:
        raise ConfigError(f"Parameter budget {budget} is below the minimum {MIN_PAIR_BUDGET}")

    conv_base = ModelSpec(ModelFamily.CONV_UNET, width=1, depth=conv_depth, num_classes=num_classes,
                          in_channels=in_channels, input_size=input_size)
    attention_base = ModelSpec(ModelFamily.WINDOWED_ATTENTION, width=num_heads, depth=attention_depth,
                               num_classes=num_classes, in_channels=in_channels, input_size=input_size,
                               patch_size=patch_size, window_size=window_size, num_heads=num_heads)
    conv_spec, conv_count = _closest_width(conv_base, range(1, 513), budget)
    attention_spec, attention_count = _closest_width(attention_base, range(num_heads, 2049, num_heads), budget)

    for spec, count in ((conv_spec, conv_count), (attention_spec, attention_count)):
        if abs(count - budget) / budget >= PAIR_TOLERANCE:
            raise ConfigError(
                f"Cannot reach budget {budget} with {spec.family.value}: closest is {count} parameters"
            )
    logger.info(
        f"Comparable pair for budget {budget}: conv width {conv_spec.width} ({conv_count}), "
        f"attention width {attention_spec.width} ({attention_count})"
    )
    return build_model(conv_spec, seed), build_model(attention_spec, seed + 1)
