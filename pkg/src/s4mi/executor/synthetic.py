"""Desk-scale synthetic lesion corpus.

Elliptical lesions on a smoothly textured skin-tone background. The lesion
hue is the per-image class; attributes add a "multiple lesions" flag for
multilabel runs. Everything is a pure function of the SyntheticSpec.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Tuple, Union

import numpy as np
from scipy.ndimage import gaussian_filter

from ..model.config import SyntheticSpec
from ..model.models import RawSample
from ..preprocessing.dataset_io import ATTRIBUTES_FILE, LABELS_FILE, atomic_write_json, write_image, write_mask

logger = logging.getLogger(__name__)


def _ellipse(size: int, center: Tuple[float, float], axes: Tuple[float, float], angle: float) -> np.ndarray:
    rows, cols = np.mgrid[0:size, 0:size].astype(np.float64)
    dy, dx = rows - center[0], cols - center[1]
    cos, sin = math.cos(angle), math.sin(angle)
    u = (dx * cos + dy * sin) / axes[0]
    v = (-dx * sin + dy * cos) / axes[1]
    return u ** 2 + v ** 2 <= 1.0


def _background(rng: np.random.Generator, spec: SyntheticSpec) -> np.ndarray:
    size = spec.image_size
    texture = gaussian_filter(rng.standard_normal((size, size)), sigma=size / 16)
    texture /= max(np.abs(texture).max(), 1e-12)
    base = np.asarray(spec.background_color, dtype=np.float64)
    return base[None, None, :] + spec.texture_strength * texture[..., None]


def synthesize_image(spec: SyntheticSpec, index: int) -> Tuple[np.ndarray, np.ndarray, int, List[int]]:
    """(image H×W×3, mask H×W, class id, multilabel attributes) for one corpus index."""
    rng = np.random.default_rng([spec.seed, index])
    size = spec.image_size
    image = _background(rng, spec)
    mask = np.zeros((size, size), dtype=np.int64)

    label = int(rng.integers(spec.num_image_classes))
    color = np.asarray(spec.lesion_colors[label], dtype=np.float64)
    count = int(rng.integers(spec.lesion_count[0], spec.lesion_count[1] + 1))
    fraction = float(np.clip(
        spec.foreground_fraction + rng.uniform(-spec.fraction_jitter, spec.fraction_jitter), 0.01, 0.69
    ))
    area = fraction * size * size / count
    for _ in range(count):
        aspect = rng.uniform(*spec.aspect_range)
        major = math.sqrt(area / (math.pi * aspect))
        minor = major * aspect
        margin = min(major, size / 2)
        center = (rng.uniform(margin, size - margin), rng.uniform(margin, size - margin))
        mask[_ellipse(size, center, (major, minor), rng.uniform(0, math.pi))] = 1

    shade = 1.0 + 0.5 * spec.texture_strength * rng.standard_normal((size, size, 1))
    image = np.where(mask[..., None] == 1, color[None, None, :] * shade, image)
    image = image + spec.noise_level * rng.standard_normal(image.shape)
    attributes = [int(label == c) for c in range(spec.num_image_classes)] + [int(count > 1)]
    return np.clip(image, 0.0, 1.0), mask, label, attributes


def synthetic_samples(spec: SyntheticSpec, multilabel: bool = False, dataset_tag: str = "synthetic") -> List[RawSample]:
    samples = []
    for index in range(spec.n_images):
        image, mask, label, attributes = synthesize_image(spec, index)
        samples.append(RawSample(
            id=f"synth_{index:04d}",
            image=image,
            mask=mask,
            dataset_tag=dataset_tag,
            num_classes=2,
            label=attributes if multilabel else label,
        ))
    return samples


def generate_synthetic(spec: SyntheticSpec, out_dir: Union[str, Path]) -> Path:
    """Write images/, masks/, labels.json, attributes.json and spec.json under out_dir."""
    out_dir = Path(out_dir)
    (out_dir / 'images').mkdir(parents=True, exist_ok=True)
    (out_dir / 'masks').mkdir(parents=True, exist_ok=True)
    labels: Dict[str, int] = {}
    attributes: Dict[str, List[int]] = {}
    for index in range(spec.n_images):
        image, mask, label, attrs = synthesize_image(spec, index)
        sample_id = f"synth_{index:04d}"
        write_image(out_dir / 'images' / f"{sample_id}.png", image)
        write_mask(out_dir / 'masks' / f"{sample_id}.png", mask)
        labels[sample_id] = label
        attributes[sample_id] = attrs
    atomic_write_json(out_dir / LABELS_FILE, labels)
    atomic_write_json(out_dir / ATTRIBUTES_FILE, attributes)
    atomic_write_json(out_dir / 'spec.json', {'spec': spec.to_dict(), 'spec_hash': spec.spec_hash()})
    logger.info(f"Wrote {spec.n_images} synthetic samples to {out_dir}")
    return out_dir


def corpus_summary(samples: List[RawSample]) -> Dict[str, float]:
    masks = [s.mask for s in samples if s.mask is not None]
    foreground = float(np.mean([m.mean() for m in masks])) if masks else 0.0
    return {'n_images': len(samples), 'foreground_fraction': foreground}
