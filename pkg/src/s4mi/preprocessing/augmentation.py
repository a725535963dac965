"""Paired geometric augmentation: right-angle rotations and flips."""

from dataclasses import dataclass

import numpy as np

from ..model.models import PreprocessStep, ProcessedSample

FLIPS = ('none', 'horizontal', 'vertical')


@dataclass(frozen=True)
class AugmentParams:
    quarter_turns: int = 0
    flip: str = 'none'

    def to_dict(self):
        return {'quarter_turns': self.quarter_turns, 'flip': self.flip}


def draw_augment_params(seed: int) -> AugmentParams:
    """Draw a rotation in {0,90,180,270} degrees and a flip from the seed."""
    rng = np.random.default_rng(seed)
    quarter_turns = int(rng.integers(4))
    flip = FLIPS[int(rng.integers(len(FLIPS)))]
    return AugmentParams(quarter_turns, flip)


def apply_augment_params(array: np.ndarray, params: AugmentParams) -> np.ndarray:
    """Apply the transform to the two leading (spatial) axes."""
    out = np.rot90(array, params.quarter_turns, axes=(0, 1))
    if params.flip == 'horizontal':
        out = out[:, ::-1]
    elif params.flip == 'vertical':
        out = out[::-1]
    return np.ascontiguousarray(out)


def augment(sample: ProcessedSample, seed: int) -> ProcessedSample:
    """Apply one seed-drawn pixel bijection to the image and its mask."""
    params = draw_augment_params(seed)
    mask = apply_augment_params(sample.mask, params) if sample.mask is not None else None
    return ProcessedSample(
        id=sample.id,
        image=apply_augment_params(sample.image, params),
        mask=mask,
        steps=sample.steps + [PreprocessStep('augment', params.to_dict())],
        label=sample.label,
    )
