"""Vanilla gradient saliency: |∂ class score / ∂ pixel|."""

from typing import Union

import numpy as np
import torch
from torch import nn

from ..model.errors import InvalidInputError
from ..model.models import SaliencyMap


def saliency_map(
    classifier: nn.Module,
    image: Union[np.ndarray, torch.Tensor],
    class_index: int,
    normalize: bool = True,
) -> SaliencyMap:
    """Gradient magnitude of one class score, max-reduced over channels.

    `image` is C×H×W (tensor) or H×W×C (array). With normalize=True the map
    is divided by its maximum; an all-zero map stays zero.
    """
    if isinstance(image, np.ndarray):
        image = torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1)))
    if image.dim() != 3:
        raise InvalidInputError(f"Expected a single C×H×W image, got shape {tuple(image.shape)}")

    was_training = classifier.training
    classifier.eval()
    try:
        x = image.detach().clone().to(next(classifier.parameters(), image).dtype).unsqueeze(0)
        x.requires_grad_(True)
        with torch.enable_grad():
            scores = classifier(x)
            if scores.dim() != 2 or not 0 <= class_index < scores.shape[1]:
                raise InvalidInputError(f"Class index {class_index} out of range for scores {tuple(scores.shape)}")
            score = scores[0, class_index]
            if not score.requires_grad:
                raise InvalidInputError("Classifier output is not differentiable")
            (grad,) = torch.autograd.grad(score, x, allow_unused=True)
    finally:
        classifier.train(was_training)

    if grad is None:
        values = np.zeros(tuple(image.shape[1:]), dtype=np.float64)
    else:
        values = grad[0].abs().amax(dim=0).detach().to(torch.float64).numpy()
    if normalize:
        peak = values.max()
        if peak > 0:
            values = values / peak
    return SaliencyMap(values, class_index)
