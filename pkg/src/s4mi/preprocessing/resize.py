"""Resampling and color normalization for model-ready images."""

import numpy as np
import torch
import torch.nn.functional as F

from ..model.errors import InvalidInputError


def _as_nchw(array: np.ndarray) -> torch.Tensor:
    if array.ndim == 2:
        array = array[..., None]
    return torch.from_numpy(np.ascontiguousarray(array)).permute(2, 0, 1).unsqueeze(0)


def _check_resize(image: np.ndarray, out_h: int, out_w: int) -> None:
    if out_h < 1 or out_w < 1:
        raise InvalidInputError(f"Output size must be positive, got {out_h}×{out_w}")
    if image.ndim not in (2, 3) or image.size == 0:
        raise InvalidInputError(f"Cannot resize an array of shape {image.shape}")


def interpolate_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Corner-aligned bilinear resize of an H×W or H×W×C array.

    Output is clipped to the input range so constants stay exact.
    """
    _check_resize(image, out_h, out_w)
    source = np.asarray(image, dtype=np.float64)
    if source.shape[:2] == (out_h, out_w):
        return source.copy()

    resized = F.interpolate(_as_nchw(source), size=(out_h, out_w), mode='bilinear', align_corners=True)
    result = resized[0].permute(1, 2, 0).numpy()
    result = np.clip(result, source.min(), source.max())
    return result[..., 0] if image.ndim == 2 else result


def resize_mask(mask: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Nearest-neighbour resize of a class-id map."""
    _check_resize(mask, out_h, out_w)
    if mask.shape[:2] == (out_h, out_w):
        return mask.copy()
    resized = F.interpolate(_as_nchw(mask.astype(np.float32)), size=(out_h, out_w), mode='nearest')
    return resized[0, 0].round().numpy().astype(mask.dtype)


def normalize_red_channel(image: np.ndarray) -> np.ndarray:
    """Standardize the red channel, then min-max it back into [0,1].

    A constant red channel maps to 0.5. Green and blue are untouched.
    """
    if image.ndim != 3 or image.shape[2] != 3:
        raise InvalidInputError(f"Red-channel normalization needs an H×W×3 image, got {image.shape}")
    result = np.array(image, dtype=np.float64, copy=True)
    red = result[..., 0]
    std = red.std()
    if std == 0:
        result[..., 0] = 0.5
        return result

    standardized = (red - red.mean()) / std
    low, high = standardized.min(), standardized.max()
    result[..., 0] = (standardized - low) / (high - low)
    return result
