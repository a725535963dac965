"""Image / saliency side-by-side figures for trained classifiers."""

from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import torch
from matplotlib.figure import Figure
from torch import nn

from ..evaluation.saliency import saliency_map
from ..model.models import SaliencyMap


def save_saliency_figure(image: np.ndarray, saliency: SaliencyMap, path: Union[str, Path],
                         title: Optional[str] = None) -> Path:
    """`image` is H×W×C in [0,1]."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig = Figure(figsize=(6, 3))
    left, right = fig.subplots(1, 2)
    left.imshow(image[..., 0] if image.shape[2] == 1 else image, cmap='gray' if image.shape[2] == 1 else None)
    left.set_title('input')
    right.imshow(image.mean(axis=2), cmap='gray')
    right.imshow(saliency.values, cmap='inferno', alpha=0.7)
    right.set_title(f"saliency (class {saliency.class_index})")
    for ax in (left, right):
        ax.axis('off')
    if title:
        fig.suptitle(title, fontsize='small')
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return path


def render_saliency(
    classifier: nn.Module,
    images: torch.Tensor,
    ids: Sequence[str],
    out_dir: Union[str, Path],
    class_indices: Optional[Sequence[int]] = None,
) -> List[Path]:
    """One figure per image, for the given class or the predicted one."""
    out_dir = Path(out_dir)
    paths = []
    for i, sample_id in enumerate(ids):
        image = images[i]
        if class_indices is None:
            with torch.no_grad():
                class_index = int(classifier(image.unsqueeze(0)).argmax(dim=1))
        else:
            class_index = int(class_indices[i])
        saliency = saliency_map(classifier, image, class_index)
        array = image.detach().permute(1, 2, 0).cpu().numpy().clip(0.0, 1.0)
        paths.append(save_saliency_figure(array, saliency, out_dir / f"saliency_{sample_id}.png", sample_id))
    return paths
