"""Tiling of large slides into fixed-size sub-images with blank edge padding."""

import math
from typing import List, Tuple

import numpy as np

from ..model.errors import InvalidInputError
from ..model.models import TileGrid


def tile_image(image: np.ndarray, tile_size: int, pad_value: float = 0) -> Tuple[TileGrid, List[np.ndarray]]:
    """Split an H×W(×C) array into row-major tiles of tile_size×tile_size.

    Pixels past the original extent are filled with pad_value (0 for images,
    background class 0 for masks).
    """
    if image.ndim not in (2, 3) or image.shape[0] < 1 or image.shape[1] < 1 or image.size == 0:
        raise InvalidInputError(f"Cannot tile an empty image of shape {image.shape}")
    if tile_size < 1:
        raise InvalidInputError(f"Tile size must be positive, got {tile_size}")

    h, w = image.shape[:2]
    rows = math.ceil(h / tile_size)
    cols = math.ceil(w / tile_size)
    grid = TileGrid(
        rows=rows,
        cols=cols,
        tile_size=tile_size,
        orig_h=h,
        orig_w=w,
        pad_bottom=rows * tile_size - h,
        pad_right=cols * tile_size - w,
    )

    pad_width = [(0, grid.pad_bottom), (0, grid.pad_right)] + [(0, 0)] * (image.ndim - 2)
    padded = np.pad(image, pad_width, mode='constant', constant_values=pad_value)
    tiles = [
        padded[r * tile_size:(r + 1) * tile_size, c * tile_size:(c + 1) * tile_size].copy()
        for r in range(rows)
        for c in range(cols)
    ]
    return grid, tiles


def untile(grid: TileGrid, tiles: List[np.ndarray]) -> np.ndarray:
    """Reassemble tiles produced by tile_image, discarding the padding."""
    if len(tiles) != grid.num_tiles:
        raise InvalidInputError(f"Expected {grid.num_tiles} tiles, got {len(tiles)}")
    t = grid.tile_size
    trailing = tiles[0].shape[2:]
    for tile in tiles:
        if tile.shape[:2] != (t, t) or tile.shape[2:] != trailing:
            raise InvalidInputError(f"Tile shape {tile.shape} does not match the {t}×{t} grid")

    canvas = np.empty((grid.rows * t, grid.cols * t) + trailing, dtype=tiles[0].dtype)
    for index, tile in enumerate(tiles):
        r, c = divmod(index, grid.cols)
        canvas[r * t:(r + 1) * t, c * t:(c + 1) * t] = tile
    return canvas[:grid.orig_h, :grid.orig_w]
