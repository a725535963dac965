"""Photometric jitter and exact geometric pixel permutations."""

from typing import Sequence, Union

import numpy as np
import torch

from ..model.enums import GeometricKind
from ..model.errors import InvalidInputError
from ..model.models import GeometricTransform

ArrayLike = Union[np.ndarray, torch.Tensor]

GEOMETRIC_KINDS = tuple(GeometricKind)
_QUARTER_TURNS = {GeometricKind.ROT90: 1, GeometricKind.ROT180: 2, GeometricKind.ROT270: 3}


def photometric_transform(image: np.ndarray, seed: int, strength: Sequence[float] = (0.3, 0.3, 0.3)) -> np.ndarray:
    """Brightness, contrast and saturation jitter on an H×W×C image in [0,1].

    Each factor is drawn uniformly within ±strength; a zero strength skips
    that adjustment entirely, so all-zero strengths return the input unchanged.
    """
    brightness, contrast, saturation = strength
    rng = np.random.default_rng(seed)
    out = np.asarray(image, dtype=np.float64)
    shift = rng.uniform(-brightness, brightness)
    scale = rng.uniform(1.0 - contrast, 1.0 + contrast)
    sat = rng.uniform(1.0 - saturation, 1.0 + saturation)
    if brightness > 0:
        out = out + shift
    if contrast > 0:
        mean = out.mean()
        out = (out - mean) * scale + mean
    if saturation > 0 and out.shape[-1] == 3:
        gray = out.mean(axis=-1, keepdims=True)
        out = gray + (out - gray) * sat
    if brightness > 0 or contrast > 0 or saturation > 0:
        out = np.clip(out, 0.0, 1.0)
    return out.astype(np.asarray(image).dtype)


def random_geometric(seed: int) -> GeometricTransform:
    rng = np.random.default_rng(seed)
    return GeometricTransform(GEOMETRIC_KINDS[int(rng.integers(len(GEOMETRIC_KINDS)))])


def apply_geometric(t: GeometricTransform, x: ArrayLike) -> ArrayLike:
    """Permute pixel positions identically for any channel depth.

    numpy arrays are H×W[×C] (spatial axes first); tensors are [B×][C×]H×W
    (spatial axes last).
    """
    is_tensor = isinstance(x, torch.Tensor)
    axes = (-2, -1) if is_tensor else (0, 1)
    h, w = x.shape[axes[0]], x.shape[axes[1]]
    kind = t.kind
    if kind in (GeometricKind.ROT90, GeometricKind.ROT270) and h != w:
        raise InvalidInputError(f"{kind.value} needs a square spatial extent, got {h}×{w}")
    if kind == GeometricKind.IDENTITY:
        return x
    if is_tensor:
        if kind == GeometricKind.HFLIP:
            return torch.flip(x, dims=(-1,))
        if kind == GeometricKind.VFLIP:
            return torch.flip(x, dims=(-2,))
        return torch.rot90(x, _QUARTER_TURNS[kind], dims=axes)
    if kind == GeometricKind.HFLIP:
        return np.ascontiguousarray(x[:, ::-1])
    if kind == GeometricKind.VFLIP:
        return np.ascontiguousarray(x[::-1])
    return np.ascontiguousarray(np.rot90(x, _QUARTER_TURNS[kind], axes=axes))
