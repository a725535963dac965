"""Versioned checkpoints and externally supplied named-array weights."""

import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import torch

from ..model.config import ModelSpec
from ..model.errors import ConfigError, InvalidInputError
from .classifiers import LinearHeadClassifier
from .interfaces import DifferentiableModel
from .zoo import build_model

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


def save_checkpoint(
    model: DifferentiableModel,
    path: Union[str, Path],
    extra: Optional[Dict[str, Any]] = None,
) -> Path:
    """Write spec + state dict atomically."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        'format_version': CHECKPOINT_VERSION,
        'spec': model.spec.to_dict(),
        'state_dict': {name: tensor.detach().cpu() for name, tensor in model.state_dict().items()},
        'extra': extra or {},
    }
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    os.close(fd)
    try:
        torch.save(payload, tmp_name)
        os.replace(tmp_name, path)
    finally:
        if os.path.exists(tmp_name):
            os.remove(tmp_name)
    logger.debug(f"Saved checkpoint {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[DifferentiableModel, Dict[str, Any]]:
    """Rebuild a model from a checkpoint written by save_checkpoint."""
    payload = torch.load(path, map_location='cpu', weights_only=True)
    version = payload.get('format_version')
    if version != CHECKPOINT_VERSION:
        raise ConfigError(f"Unsupported checkpoint version {version} in {path}")
    model = build_model(ModelSpec.from_dict(payload['spec']), seed=0)
    model.load_state_dict(payload['state_dict'])
    return model, payload.get('extra', {})


def load_pretrained_weights(model: torch.nn.Module, path: Union[str, Path], strict: bool = False) -> List[str]:
    """Copy arrays from an .npz archive into parameters of the same name and shape.

    Returns the names that were loaded. With strict=True any unmatched
    parameter or array raises InvalidInputError.
    """
    state = model.state_dict()
    loaded = []
    with np.load(path) as archive:
        skipped = []
        for name in archive.files:
            if name not in state:
                skipped.append(name)
                continue
            array = archive[name]
            if tuple(array.shape) != tuple(state[name].shape):
                raise InvalidInputError(
                    f"Pretrained weight {name} has shape {array.shape}, model expects {tuple(state[name].shape)}"
                )
            state[name] = torch.as_tensor(array, dtype=state[name].dtype)
            loaded.append(name)
    missing = sorted(set(state) - set(loaded))
    if strict and (skipped or missing):
        raise InvalidInputError(f"Pretrained weights do not match: unused {skipped}, missing {missing}")
    model.load_state_dict(state)
    logger.info(f"Loaded {len(loaded)} pretrained arrays from {path} ({len(skipped)} unused)")
    return loaded


def save_classifier(classifier: LinearHeadClassifier, path: Union[str, Path],
                    extra: Optional[Dict[str, Any]] = None) -> Path:
    """Backbone checkpoint with the linear head stored alongside in `extra`."""
    head = {name: tensor.detach().cpu() for name, tensor in classifier.classifier.state_dict().items()}
    payload = dict(extra or {})
    payload.update({'head_state': head, 'num_classes': classifier.classifier.out_features})
    return save_checkpoint(classifier.backbone, path, payload)


def load_classifier(path: Union[str, Path]) -> Tuple[LinearHeadClassifier, Dict[str, Any]]:
    backbone, extra = load_checkpoint(path)
    if 'head_state' not in extra:
        raise InvalidInputError(f"{path} holds no classification head")
    classifier = LinearHeadClassifier(backbone, int(extra['num_classes']))
    classifier.classifier.load_state_dict(extra['head_state'])
    return classifier, extra
