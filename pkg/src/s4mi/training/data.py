"""Tensor views of processed samples and batch-level augmentation."""

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
import torch

from ..model.errors import InvalidInputError
from ..model.models import ProcessedSample
from ..preprocessing.augmentation import draw_augment_params


def stack_images(samples: Sequence[ProcessedSample]) -> torch.Tensor:
    """N×C×H×W float32 tensor."""
    if not samples:
        raise InvalidInputError("No samples to stack")
    array = np.stack([sample.image for sample in samples]).astype(np.float32)
    return torch.from_numpy(array).permute(0, 3, 1, 2).contiguous()


def stack_masks(samples: Sequence[ProcessedSample]) -> torch.Tensor:
    if any(sample.mask is None for sample in samples):
        raise InvalidInputError("Every sample needs a mask")
    return torch.from_numpy(np.stack([sample.mask for sample in samples]).astype(np.int64))


def stack_labels(samples: Sequence[ProcessedSample], multilabel: bool = False) -> torch.Tensor:
    if any(sample.label is None for sample in samples):
        raise InvalidInputError("Every sample needs a classification label")
    if multilabel:
        return torch.tensor([list(sample.label) for sample in samples], dtype=torch.float32)
    return torch.tensor([int(sample.label) for sample in samples], dtype=torch.int64)


@dataclass
class SegmentationData:
    images: torch.Tensor
    masks: torch.Tensor

    def __post_init__(self):
        if self.images.shape[0] != self.masks.shape[0] or self.images.shape[2:] != self.masks.shape[1:]:
            raise InvalidInputError(
                f"Images {tuple(self.images.shape)} and masks {tuple(self.masks.shape)} do not line up"
            )

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def pairs(self) -> List[tuple]:
        return [(self.images[i], self.masks[i]) for i in range(len(self))]

    @classmethod
    def from_samples(cls, samples: Sequence[ProcessedSample]) -> 'SegmentationData':
        return cls(stack_images(samples), stack_masks(samples))


@dataclass
class ClassificationData:
    ids: List[str]
    images: torch.Tensor
    labels: torch.Tensor

    def __post_init__(self):
        if not (len(self.ids) == self.images.shape[0] == self.labels.shape[0]):
            raise InvalidInputError("ids, images and labels must have the same length")

    def __len__(self) -> int:
        return len(self.ids)

    def select(self, ids: Sequence[str]) -> 'ClassificationData':
        index = {sample_id: i for i, sample_id in enumerate(self.ids)}
        rows = torch.tensor([index[sample_id] for sample_id in ids], dtype=torch.long)
        return ClassificationData(list(ids), self.images[rows], self.labels[rows])

    @classmethod
    def from_samples(cls, samples: Sequence[ProcessedSample], multilabel: bool = False) -> 'ClassificationData':
        return cls([s.id for s in samples], stack_images(samples), stack_labels(samples, multilabel))


def _transform(x: torch.Tensor, quarter_turns: int, flip: str) -> torch.Tensor:
    out = torch.rot90(x, quarter_turns, dims=(-2, -1))
    if flip == 'horizontal':
        out = torch.flip(out, dims=(-1,))
    elif flip == 'vertical':
        out = torch.flip(out, dims=(-2,))
    return out


def augment_batch(images: torch.Tensor, masks: Optional[torch.Tensor], seed: int):
    """Apply one seed-drawn rotation/flip to a whole batch and its masks."""
    params = draw_augment_params(seed)
    out_images = _transform(images, params.quarter_turns, params.flip)
    out_masks = _transform(masks, params.quarter_turns, params.flip) if masks is not None else None
    return out_images, out_masks


def derive_seed(*parts: int) -> int:
    """Stable 32-bit seed from a tuple of integers."""
    return int(np.random.SeedSequence([int(p) for p in parts]).generate_state(1)[0])
