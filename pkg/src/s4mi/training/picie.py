"""Unsupervised segmentation by cross-view pixel clustering.

Two photometric views of each image are embedded per pixel; the second view
is also geometrically transformed. Each epoch clusters the current features,
then trains the extractor so that each view's pixels fall into both their own
and the other view's clusters (photometric invariance, geometric equivariance).
"""

import logging
from typing import Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..model.config import OptimizerConfig, ScheduleConfig
from ..model.errors import CollapseError, InvalidInputError
from ..model.models import ClusterModel, EpochRecord, GeometricTransform, LossValue, TrainHistory
from .audit import AuditedDataset, as_images
from .clustering import assign_clusters, minibatch_kmeans
from .data import derive_seed
from .geometry import apply_geometric, photometric_transform, random_geometric
from .schedule import build_optimizer, lr_at, set_lr
from .supervised import EpochAccumulator, check_finite

logger = logging.getLogger(__name__)


def cluster_logits(features: torch.Tensor, centroids: torch.Tensor) -> torch.Tensor:
    """B×D×h×w features -> B×K×h×w logits −‖f − μ_k‖²."""
    flat = features.permute(0, 2, 3, 1)
    d = (flat.unsqueeze(-2) - centroids).pow(2).sum(-1)
    return (-d).permute(0, 3, 1, 2)


def picie_step_loss(
    f1: torch.Tensor,
    f2: torch.Tensor,
    clusters: ClusterModel,
    t: GeometricTransform,
) -> LossValue:
    """Within-view plus cross-view clustering cross-entropy.

    f1 holds the plain view's features; t is applied to it here so that it
    lines up with f2, the transformed view's features.
    """
    aligned = apply_geometric(t, f1)
    if aligned.shape != f2.shape:
        raise InvalidInputError(f"Feature maps do not align: {tuple(aligned.shape)} vs {tuple(f2.shape)}")
    if aligned.shape[1] != clusters.dim:
        raise InvalidInputError(f"Feature dim {aligned.shape[1]} != centroid dim {clusters.dim}")

    centroids = torch.as_tensor(clusters.centroids, dtype=f2.dtype, device=f2.device)
    logits1 = cluster_logits(aligned, centroids)
    logits2 = cluster_logits(f2, centroids)
    labels1 = logits1.detach().argmax(dim=1)
    labels2 = logits2.detach().argmax(dim=1)

    within1 = F.cross_entropy(logits1, labels1)
    within2 = F.cross_entropy(logits2, labels2)
    cross12 = F.cross_entropy(logits1, labels2)
    cross21 = F.cross_entropy(logits2, labels1)
    value = within1 + within2 + cross12 + cross21
    return LossValue(value, {
        'within_1': float(within1.detach()),
        'within_2': float(within2.detach()),
        'cross_12': float(cross12.detach()),
        'cross_21': float(cross21.detach()),
        'total': float(value.detach()),
    })


def pixel_features(model: nn.Module, images: torch.Tensor) -> torch.Tensor:
    """Per-pixel L2-normalized features at input resolution."""
    features = model(images)
    if features.shape[-2:] != images.shape[-2:]:
        features = F.interpolate(features, size=images.shape[-2:], mode='bilinear', align_corners=False)
    return F.normalize(features, dim=1)


def _photometric_batch(images: torch.Tensor, seed: int, jitter: Sequence[float]) -> torch.Tensor:
    arrays = images.permute(0, 2, 3, 1).cpu().numpy()
    views = [photometric_transform(a, derive_seed(seed, i), jitter) for i, a in enumerate(arrays)]
    return torch.from_numpy(np.stack(views)).permute(0, 3, 1, 2).contiguous().to(images.dtype)


@torch.no_grad()
def _sample_pixels(
    model: nn.Module, images: torch.Tensor, pixels_per_image: int, seed: int, jitter: Sequence[float], batch_size: int
) -> np.ndarray:
    model.eval()
    rng = np.random.default_rng(seed)
    samples = []
    for start in range(0, images.shape[0], batch_size):
        batch = _photometric_batch(images[start:start + batch_size], derive_seed(seed, start), jitter)
        features = pixel_features(model, batch).permute(0, 2, 3, 1).flatten(1, 2).cpu().numpy()
        for image_features in features:
            count = min(pixels_per_image, image_features.shape[0])
            samples.append(image_features[rng.choice(image_features.shape[0], count, replace=False)])
    return np.concatenate(samples).astype(np.float64)


def _cluster(model, images, k, seed, pixels_per_image, jitter, batch_size, epoch) -> ClusterModel:
    points = _sample_pixels(model, images, pixels_per_image, seed, jitter, batch_size)
    clusters = minibatch_kmeans(points, k, iters=5, seed=seed)
    used = np.unique(assign_clusters(clusters, points))
    if used.size < 2:
        raise CollapseError(
            f"All pixels assigned to a single cluster at epoch {epoch}",
            {'epoch': epoch, 'reason': 'cluster_collapse', 'clusters_used': used.tolist()},
        )
    return clusters


def train_picie(
    model: nn.Module,
    data: Union[torch.Tensor, AuditedDataset],
    epochs: int,
    k: int,
    optimizer_cfg: OptimizerConfig,
    schedule_cfg: ScheduleConfig,
    seed: int,
    batch_size: int = 16,
    jitter: Sequence[float] = (0.3, 0.3, 0.3),
    pixels_per_image: int = 256,
    debug: bool = False,
) -> Tuple[nn.Module, ClusterModel, TrainHistory]:
    """Alternate clustering and gradient steps; only images are ever read."""
    images = as_images(data)
    if images.shape[0] == 0:
        raise InvalidInputError("PiCIE needs at least one image")
    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    optimizer = build_optimizer(model.parameters(), optimizer_cfg)
    history = TrainHistory(metric_name='picie_loss')

    for epoch in range(epochs):
        epoch_seed = derive_seed(seed, epoch)
        clusters = _cluster(model, images, k, epoch_seed, pixels_per_image, jitter, batch_size, epoch)
        lr = lr_at(epoch, schedule_cfg, optimizer_cfg.lr)
        set_lr(optimizer, lr)
        model.train()
        accumulator = EpochAccumulator()
        order = torch.randperm(images.shape[0], generator=generator)
        for step, start in enumerate(range(0, images.shape[0], batch_size)):
            batch = images[order[start:start + batch_size]]
            step_seed = derive_seed(seed, epoch, step)
            t = random_geometric(step_seed)
            view1 = _photometric_batch(batch, step_seed + 1, jitter)
            view2 = apply_geometric(t, _photometric_batch(batch, step_seed + 2, jitter))
            loss = picie_step_loss(pixel_features(model, view1), pixel_features(model, view2), clusters, t)
            check_finite(loss, epoch, step)
            optimizer.zero_grad()
            loss.value.backward()
            optimizer.step()
            accumulator.add(loss.components)
            if debug:
                history.step_traces.append({'epoch': epoch, 'step': step, 'transform': t.kind.value, **loss.components})
        losses = accumulator.means()
        history.records.append(EpochRecord(epoch, lr, losses))
        logger.info(f"[picie] epoch {epoch}: lr {lr:.3e}, loss {losses.get('total', float('nan')):.4f}")

    final = _cluster(model, images, k, derive_seed(seed, epochs), pixels_per_image, jitter, batch_size, epochs)
    return model, final, history


@torch.no_grad()
def segment_unsupervised(model: nn.Module, clusters: ClusterModel, image: Union[np.ndarray, torch.Tensor]) -> np.ndarray:
    """Nearest-centroid cluster id per pixel, at input resolution.

    `image` is C×H×W (tensor) or H×W×C (array); a batch B×C×H×W returns B×H×W.
    """
    if isinstance(image, np.ndarray):
        image = torch.from_numpy(np.ascontiguousarray(image.transpose(2, 0, 1))).float()
    single = image.dim() == 3
    batch = image.unsqueeze(0) if single else image
    was_training = model.training
    model.eval()
    features = pixel_features(model, batch)
    model.train(was_training)
    centroids = torch.as_tensor(clusters.centroids, dtype=features.dtype)
    masks = cluster_logits(features, centroids).argmax(dim=1).cpu().numpy()
    return masks[0] if single else masks
