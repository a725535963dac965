"""File interfaces: image/mask directories, processed sample files, manifests."""

import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from PIL import Image

from ..model.errors import InvalidInputError
from ..model.models import PreprocessStep, ProcessedSample, RawSample

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = ('.png', '.jpg', '.jpeg', '.tif', '.tiff', '.bmp')
MASK_SUFFIX = '_mask'
LABELS_FILE = 'labels.json'
ATTRIBUTES_FILE = 'attributes.json'

PathLike = Union[str, Path]


def atomic_write_text(path: PathLike, content: str) -> Path:
    """Write a file via a temporary sibling and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, 'w') as f:
            f.write(content)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def atomic_write_json(path: PathLike, payload) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True))


def read_image(path: PathLike) -> np.ndarray:
    """Read an image file as H×W×C floats in [0,1] (C is 1 or 3)."""
    with Image.open(path) as img:
        if img.mode not in ('L', 'RGB'):
            img = img.convert('RGB')
        array = np.asarray(img, dtype=np.float64) / 255.0
    return array[..., None] if array.ndim == 2 else array


def read_mask(path: PathLike) -> np.ndarray:
    """Read a class-id mask; {0,255} binary masks are mapped to {0,1}."""
    with Image.open(path) as img:
        array = np.asarray(img.convert('L'), dtype=np.int64)
    if set(np.unique(array).tolist()) <= {0, 255}:
        array = array // 255
    return array


def write_image(path: PathLike, image: np.ndarray) -> None:
    data = np.clip(np.rint(np.asarray(image) * 255.0), 0, 255).astype(np.uint8)
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[..., 0]
    Image.fromarray(data).save(path)


def write_mask(path: PathLike, mask: np.ndarray, binary_as_255: bool = True) -> None:
    data = np.asarray(mask).astype(np.int64)
    if binary_as_255 and data.size and data.max() <= 1:
        data = data * 255
    Image.fromarray(data.astype(np.uint8)).save(path)


def _image_files(directory: Path) -> List[Path]:
    return sorted(
        p for p in directory.iterdir()
        if p.suffix.lower() in IMAGE_SUFFIXES and not p.stem.endswith(MASK_SUFFIX)
    )


def mask_files(directory: PathLike) -> Dict[str, Path]:
    """Mask files keyed by stem, with a trailing `_mask` dropped."""
    directory = Path(directory)
    if not directory.is_dir():
        raise InvalidInputError(f"Mask directory {directory} does not exist")
    files: Dict[str, Path] = {}
    for path in sorted(p for p in directory.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES):
        stem = path.stem[:-len(MASK_SUFFIX)] if path.stem.endswith(MASK_SUFFIX) else path.stem
        if stem in files:
            raise InvalidInputError(f"Two masks for {stem} in {directory}: {files[stem].name}, {path.name}")
        files[stem] = path
    return files


def _find_mask(stem: str, image_dir: Path, mask_dir: Optional[Path]) -> Optional[Path]:
    candidates = []
    if mask_dir is not None:
        candidates += [mask_dir / f"{stem}{suffix}" for suffix in IMAGE_SUFFIXES]
    candidates += [image_dir / f"{stem}{MASK_SUFFIX}{suffix}" for suffix in IMAGE_SUFFIXES]
    return next((c for c in candidates if c.exists()), None)


def load_raw_samples(
    image_dir: PathLike,
    mask_dir: Optional[PathLike] = None,
    dataset_tag: str = "unknown",
    num_classes: int = 2,
    labels_name: str = LABELS_FILE,
) -> List[RawSample]:
    """Read a directory of images with masks matched by stem.

    Masks live either in mask_dir under the same stem or next to the image
    as `<stem>_mask.<ext>`. An optional labels file (labels.json for class
    ids, attributes.json for multilabel indicators) maps ids to image labels.
    """
    image_dir = Path(image_dir)
    mask_path = Path(mask_dir) if mask_dir is not None else None
    if not image_dir.is_dir():
        raise InvalidInputError(f"Image directory not found: {image_dir}")

    labels: Dict[str, object] = {}
    for labels_dir in (image_dir, image_dir.parent):
        if (labels_dir / labels_name).exists():
            with open(labels_dir / labels_name) as f:
                labels = json.load(f)
            break

    samples = []
    for path in _image_files(image_dir):
        mask_file = _find_mask(path.stem, image_dir, mask_path)
        samples.append(RawSample(
            id=path.stem,
            image=read_image(path),
            mask=read_mask(mask_file) if mask_file is not None else None,
            dataset_tag=dataset_tag,
            num_classes=num_classes,
            label=labels.get(path.stem),
        ))
    if not samples:
        raise InvalidInputError(f"No images found in {image_dir}")
    logger.info(f"Loaded {len(samples)} samples from {image_dir}")
    return samples


def save_processed(sample: ProcessedSample, out_dir: PathLike) -> Path:
    """Write one processed sample as <id>.npz (image, mask, steps, label)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{sample.id}.npz"
    arrays = {
        'image': sample.image,
        'steps': np.array(json.dumps([step.to_dict() for step in sample.steps])),
        'label': np.array(json.dumps(sample.label)),
    }
    if sample.mask is not None:
        arrays['mask'] = sample.mask
    np.savez_compressed(path, **arrays)
    return path


def load_processed(path: PathLike) -> ProcessedSample:
    path = Path(path)
    with np.load(path) as data:
        return ProcessedSample(
            id=path.stem,
            image=data['image'],
            mask=data['mask'] if 'mask' in data.files else None,
            steps=[PreprocessStep.from_dict(s) for s in json.loads(str(data['steps']))],
            label=json.loads(str(data['label'])),
        )


def load_processed_dir(directory: PathLike) -> List[ProcessedSample]:
    return [load_processed(p) for p in sorted(Path(directory).glob('*.npz'))]


def write_manifest(path: PathLike, splits: Dict[str, List[str]], extra: Optional[Dict] = None) -> Path:
    payload = {name: list(ids) for name, ids in splits.items()}
    if extra:
        payload['meta'] = extra
    return atomic_write_json(path, payload)


def read_manifest(path: PathLike) -> Dict[str, List[str]]:
    with open(path) as f:
        payload = json.load(f)
    return {name: ids for name, ids in payload.items() if name in ('train', 'val', 'test')}
