"""The two dataset pipelines: tiling for uniform slides, interpolation otherwise."""

import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..model.config import PreprocessProfile
from ..model.enums import PreprocessMode
from ..model.errors import InvalidInputError
from ..model.models import PreprocessStep, ProcessedSample, RawSample
from .augmentation import AugmentParams, apply_augment_params
from .interfaces import SamplePreprocessor
from .resize import interpolate_bilinear, normalize_red_channel, resize_mask
from .tiling import tile_image

logger = logging.getLogger(__name__)

Arrays = Tuple[np.ndarray, Optional[np.ndarray]]


def _normalize_red(image, mask, params) -> Arrays:
    return normalize_red_channel(image), mask


def _tile(image, mask, params) -> Arrays:
    grid, tiles = tile_image(image, params['tile_size'])
    index = params['row'] * grid.cols + params['col']
    tile_mask = None
    if mask is not None:
        _, mask_tiles = tile_image(mask, params['tile_size'], pad_value=0)
        tile_mask = mask_tiles[index]
    return tiles[index], tile_mask


def _resample(image, mask, params) -> Arrays:
    h, w = params['height'], params['width']
    resized_mask = resize_mask(mask, h, w) if mask is not None else None
    return interpolate_bilinear(image, h, w), resized_mask


def _augment(image, mask, params) -> Arrays:
    aug = AugmentParams(params['quarter_turns'], params['flip'])
    return apply_augment_params(image, aug), apply_augment_params(mask, aug) if mask is not None else None


STEP_FUNCTIONS: Dict[str, Callable[[np.ndarray, Optional[np.ndarray], dict], Arrays]] = {
    'normalize_red': _normalize_red,
    'tile': _tile,
    'interpolate': _resample,
    'resize': _resample,
    'augment': _augment,
}


def apply_step(step: PreprocessStep, image: np.ndarray, mask: Optional[np.ndarray]) -> Arrays:
    try:
        function = STEP_FUNCTIONS[step.name]
    except KeyError:
        raise InvalidInputError(f"Unknown preprocessing step '{step.name}'")
    return function(image, mask, step.params)


def _finalize(raw: RawSample, image: np.ndarray, mask: Optional[np.ndarray],
              steps: List[PreprocessStep], suffix: str = "") -> ProcessedSample:
    return ProcessedSample(
        id=raw.id + suffix,
        image=image.astype(np.float32),
        mask=mask.astype(np.int64) if mask is not None else None,
        steps=list(steps),
        label=raw.label,
    )


def replay_steps(raw: RawSample, steps: List[PreprocessStep]) -> ProcessedSample:
    """Reproduce a processed sample from its raw source and step list."""
    if not steps:
        raise InvalidInputError("Nothing to replay: empty step list")
    image, mask = raw.image, raw.mask
    suffix = ""
    for step in steps:
        image, mask = apply_step(step, image, mask)
        if step.name == 'tile':
            suffix = f"_r{step.params['row']}c{step.params['col']}"
    return _finalize(raw, image, mask, steps, suffix)


class _ProfilePreprocessor(SamplePreprocessor):

    def __init__(self, profile: PreprocessProfile):
        self.profile = profile

    def _color_steps(self, raw: RawSample) -> List[PreprocessStep]:
        if self.profile.normalize_red and raw.image.shape[2] == 3:
            return [PreprocessStep('normalize_red')]
        return []

    def _resize_step(self) -> PreprocessStep:
        size = self.profile.target_size
        return PreprocessStep('resize', {'height': size, 'width': size})

    def replay(self, raw: RawSample, steps: List[PreprocessStep]) -> ProcessedSample:
        return replay_steps(raw, steps)


class TilingPreprocessor(_ProfilePreprocessor):
    """Tile to tile_size with blank padding, then resize every tile."""

    def process(self, raw: RawSample) -> List[ProcessedSample]:
        color_steps = self._color_steps(raw)
        image, mask = raw.image, raw.mask
        for step in color_steps:
            image, mask = apply_step(step, image, mask)

        tile_size = self.profile.tile_size
        grid, tiles = tile_image(image, tile_size)
        mask_tiles = tile_image(mask, tile_size, pad_value=0)[1] if mask is not None else [None] * len(tiles)
        resize_step = self._resize_step()

        samples = []
        for index, (tile, tile_mask) in enumerate(zip(tiles, mask_tiles)):
            row, col = divmod(index, grid.cols)
            tile_step = PreprocessStep('tile', {'tile_size': tile_size, 'row': row, 'col': col})
            out_image, out_mask = apply_step(resize_step, tile, tile_mask)
            samples.append(_finalize(raw, out_image, out_mask, color_steps + [tile_step, resize_step],
                                     f"_r{row}c{col}"))
        logger.debug(f"Tiled {raw.id} into {grid.rows}x{grid.cols} tiles")
        return samples


class InterpolationPreprocessor(_ProfilePreprocessor):
    """Bilinear interpolation to intermediate_size, then resize."""

    def process(self, raw: RawSample) -> List[ProcessedSample]:
        size = self.profile.intermediate_size
        steps = self._color_steps(raw) + [
            PreprocessStep('interpolate', {'height': size, 'width': size}),
            self._resize_step(),
        ]
        image, mask = raw.image, raw.mask
        for step in steps:
            image, mask = apply_step(step, image, mask)
        return [_finalize(raw, image, mask, steps)]


def build_preprocessor(profile: PreprocessProfile) -> SamplePreprocessor:
    if profile.mode == PreprocessMode.TILE:
        return TilingPreprocessor(profile)
    return InterpolationPreprocessor(profile)


def preprocess_sample(raw: RawSample, profile: PreprocessProfile) -> List[ProcessedSample]:
    return build_preprocessor(profile).process(raw)


def preprocess_all(raws: List[RawSample], profile: PreprocessProfile) -> List[ProcessedSample]:
    preprocessor = build_preprocessor(profile)
    processed = []
    for raw in raws:
        processed.extend(preprocessor.process(raw))
    logger.info(f"Preprocessed {len(raws)} raw samples into {len(processed)} {profile.target_size}px samples")
    return processed
