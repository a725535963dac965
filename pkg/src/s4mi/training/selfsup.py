"""Joint-embedding self-supervised pretraining and labeled fine-tuning.

Two regimes share one objective, a symmetrized stop-gradient cosine:
  - augmentation-asymmetric: one backbone, two augmented views of an image;
  - architecture-asymmetric: a conv and an attention backbone, same image.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from ..evaluation.metrics import classification_scores
from ..model.config import OptimizerConfig, ScheduleConfig
from ..model.enums import Averaging, ViewRegime
from ..model.errors import CollapseError, ConfigError, InvalidInputError
from ..model.models import Embedding, EpochRecord, LossValue, TrainHistory, ViewPair
from ..networks.classifiers import EmbeddingNetwork, LinearHeadClassifier
from ..networks.interfaces import Backbone
from ..preprocessing.resize import interpolate_bilinear
from ..preprocessing.splits import subsample_labels
from .audit import AuditedDataset, as_images
from .data import ClassificationData, derive_seed
from .geometry import photometric_transform
from .losses import classification_loss
from .schedule import build_optimizer, lr_at, set_lr
from .supervised import EpochAccumulator, check_finite, snapshot

logger = logging.getLogger(__name__)

COLLAPSE_THRESHOLD = 1e-6
NORM_EPS = 1e-12


def _augmented_view(image: np.ndarray, rng: np.random.Generator, jitter: Sequence[float],
                    crop_scale: Tuple[float, float]) -> Tuple[np.ndarray, Dict]:
    h, w = image.shape[:2]
    scale = rng.uniform(*crop_scale)
    ch, cw = max(1, int(round(h * np.sqrt(scale)))), max(1, int(round(w * np.sqrt(scale))))
    top, left = int(rng.integers(h - ch + 1)), int(rng.integers(w - cw + 1))
    flip = bool(rng.integers(2))
    color_seed = int(rng.integers(2 ** 31))

    view = image[top:top + ch, left:left + cw]
    view = interpolate_bilinear(view, h, w)
    if flip:
        view = view[:, ::-1]
    view = photometric_transform(np.ascontiguousarray(view), color_seed, jitter)
    record = {'crop': [top, left, ch, cw], 'hflip': flip, 'color_seed': color_seed}
    return view.astype(image.dtype), record


def make_view_pair(
    image: np.ndarray,
    regime: ViewRegime,
    seed: int,
    jitter: Sequence[float] = (0.3, 0.3, 0.3),
    crop_scale: Tuple[float, float] = (0.5, 1.0),
) -> ViewPair:
    """Two independently augmented views, or the image twice for the architecture regime."""
    regime = ViewRegime(regime)
    if regime == ViewRegime.ARCHITECTURE_ASYMMETRIC:
        return ViewPair(image, image.copy(), regime)
    rng = np.random.default_rng(seed)
    view_a, record_a = _augmented_view(image, rng, jitter, crop_scale)
    view_b, record_b = _augmented_view(image, rng, jitter, crop_scale)
    return ViewPair(view_a, view_b, regime, [record_a, record_b])


def _vector(e: Union[Embedding, torch.Tensor]) -> torch.Tensor:
    return e.vector if isinstance(e, Embedding) else e


def similarity_loss(e1: Union[Embedding, torch.Tensor], e2: Union[Embedding, torch.Tensor]) -> LossValue:
    """½[(1 − cos(e1, sg(e2))) + (1 − cos(e2, sg(e1)))], averaged over the batch."""
    a, b = _vector(e1), _vector(e2)
    if a.shape != b.shape:
        raise InvalidInputError(f"Embedding shapes differ: {tuple(a.shape)} vs {tuple(b.shape)}")
    norms = torch.cat([a.detach().norm(dim=-1).reshape(-1), b.detach().norm(dim=-1).reshape(-1)])
    if bool((norms < NORM_EPS).any()):
        raise InvalidInputError("Zero-norm embedding")

    def one_sided(x, y):
        return 1.0 - (F.normalize(x, dim=-1) * F.normalize(y.detach(), dim=-1)).sum(-1)

    value = (0.5 * (one_sided(a, b) + one_sided(b, a))).mean()
    return LossValue(value, {'similarity': float(value.detach())})


def embedding_variance(embeddings: torch.Tensor) -> float:
    """Mean per-dimension batch variance of L2-normalized embeddings."""
    return float(F.normalize(embeddings.detach(), dim=-1).var(dim=0, unbiased=False).mean())


@dataclass
class PretrainResult:
    networks: List[EmbeddingNetwork]
    history: TrainHistory

    @property
    def backbones(self) -> List[Backbone]:
        return [network.backbone for network in self.networks]


def _views_batch(images: torch.Tensor, regime: ViewRegime, seed: int, jitter: Sequence[float]):
    arrays = images.permute(0, 2, 3, 1).cpu().numpy()
    pairs = [make_view_pair(a, regime, derive_seed(seed, i), jitter) for i, a in enumerate(arrays)]

    def to_tensor(views):
        return torch.from_numpy(np.stack(views)).permute(0, 3, 1, 2).contiguous().to(images.dtype)

    return to_tensor([p.view_a for p in pairs]), to_tensor([p.view_b for p in pairs])


def pretrain(
    backbones: Union[Backbone, Sequence[Backbone]],
    data: Union[torch.Tensor, AuditedDataset],
    epochs: int,
    regime: ViewRegime,
    optimizer_cfg: OptimizerConfig,
    schedule_cfg: ScheduleConfig,
    seed: int,
    batch_size: int = 16,
    embedding_dim: int = 64,
    jitter: Sequence[float] = (0.3, 0.3, 0.3),
    debug: bool = False,
) -> PretrainResult:
    """Maximize embedding similarity between the two branches; reads images only.

    The augmentation regime takes one backbone; the architecture regime takes
    a (conv, attention) pair, both of which are updated every step.
    """
    regime = ViewRegime(regime)
    backbones = [backbones] if isinstance(backbones, Backbone) else list(backbones)
    expected = 1 if regime == ViewRegime.AUGMENTATION_ASYMMETRIC else 2
    if len(backbones) != expected:
        raise ConfigError(f"{regime.value} pretraining needs {expected} backbone(s), got {len(backbones)}")
    images = as_images(data)

    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    networks = [EmbeddingNetwork(backbone, embedding_dim) for backbone in backbones]
    params = [p for network in networks for p in network.parameters()]
    optimizer = build_optimizer(params, optimizer_cfg)
    history = TrainHistory(metric_name='similarity_loss')

    for epoch in range(epochs):
        lr = lr_at(epoch, schedule_cfg, optimizer_cfg.lr)
        set_lr(optimizer, lr)
        for network in networks:
            network.train()
        accumulator = EpochAccumulator()
        order = torch.randperm(images.shape[0], generator=generator)
        for step, start in enumerate(range(0, images.shape[0], batch_size)):
            batch = images[order[start:start + batch_size]]
            view_a, view_b = _views_batch(batch, regime, derive_seed(seed, epoch, step), jitter)
            e1 = networks[0](view_a)
            e2 = networks[-1](view_b)
            loss = similarity_loss(Embedding(e1, 'branch_a'), Embedding(e2, 'branch_b'))
            check_finite(loss, epoch, step)
            if batch.shape[0] > 1:
                variance = min(embedding_variance(e1), embedding_variance(e2))
                if variance < COLLAPSE_THRESHOLD:
                    raise CollapseError(
                        f"Embedding collapse at epoch {epoch}, step {step}: variance {variance:.2e}",
                        {'epoch': epoch, 'step': step, 'reason': 'embedding_collapse', 'variance': variance},
                    )
            optimizer.zero_grad()
            loss.value.backward()
            optimizer.step()
            accumulator.add(loss.components)
            if debug:
                history.step_traces.append({'epoch': epoch, 'step': step, **loss.components})
        losses = accumulator.means()
        losses['total'] = losses.get('similarity', float('nan'))
        history.records.append(EpochRecord(epoch, lr, losses))
        logger.info(f"[pretrain/{regime.value}] epoch {epoch}: lr {lr:.3e}, similarity loss {losses['total']:.4f}")
    return PretrainResult(networks, history)


@torch.no_grad()
def predict_classes(model: nn.Module, images: torch.Tensor, multilabel: bool = False, batch_size: int = 64) -> np.ndarray:
    was_training = model.training
    model.eval()
    logits = torch.cat([model(images[i:i + batch_size]) for i in range(0, images.shape[0], batch_size)])
    model.train(was_training)
    if multilabel:
        return (torch.sigmoid(logits) > 0.5).long().cpu().numpy()
    return logits.argmax(dim=1).cpu().numpy()


def evaluate_classifier(model: nn.Module, data: ClassificationData, num_classes: int, multilabel: bool = False,
                        averaging: Averaging = Averaging.MACRO) -> Dict[str, float]:
    preds = predict_classes(model, data.images, multilabel)
    return classification_scores(preds, data.labels.long().cpu().numpy(), num_classes, multilabel, averaging)


def finetune(
    backbone: Backbone,
    train_data: ClassificationData,
    epochs: int,
    fraction: float,
    optimizer_cfg: OptimizerConfig,
    schedule_cfg: ScheduleConfig,
    seed: int,
    num_classes: int,
    val_data: Optional[ClassificationData] = None,
    multilabel: bool = False,
    averaging: Averaging = Averaging.MACRO,
    batch_size: int = 16,
    debug: bool = False,
) -> Tuple[LinearHeadClassifier, TrainHistory]:
    """Attach a linear head and train end to end on round(fraction·N) labeled images."""
    split = subsample_labels(train_data.ids, fraction, seed)
    if not split.labeled:
        raise InvalidInputError(f"Label fraction {fraction} leaves no labeled images out of {len(train_data)}")
    subset = train_data.select(split.labeled)

    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    classifier = LinearHeadClassifier(backbone, num_classes)
    optimizer = build_optimizer(classifier.parameters(), optimizer_cfg)
    history = TrainHistory(metric_name='val_f1')
    logger.info(f"[finetune] {len(subset)} labeled images (fraction {fraction} of {len(train_data)})")

    best_state = None
    if val_data is not None:
        history.initial_val_metric = evaluate_classifier(classifier, val_data, num_classes, multilabel, averaging)['f1']
        history.best_val_metric = history.initial_val_metric
        best_state = snapshot(classifier)

    for epoch in range(epochs):
        lr = lr_at(epoch, schedule_cfg, optimizer_cfg.lr)
        set_lr(optimizer, lr)
        classifier.train()
        accumulator = EpochAccumulator()
        order = torch.randperm(len(subset), generator=generator)
        for step, start in enumerate(range(0, len(subset), batch_size)):
            index = order[start:start + batch_size]
            loss = classification_loss(classifier(subset.images[index]), subset.labels[index], multilabel)
            check_finite(loss, epoch, step)
            optimizer.zero_grad()
            loss.value.backward()
            optimizer.step()
            accumulator.add(loss.components)
            if debug:
                history.step_traces.append({'epoch': epoch, 'step': step, **loss.components})
        losses = accumulator.means()
        losses['total'] = losses.get('ce', float('nan'))
        scores = evaluate_classifier(classifier, val_data, num_classes, multilabel, averaging) if val_data is not None else {}
        val_f1 = scores.get('f1')
        extra = {f'val_{name}': value for name, value in scores.items()}
        extra['num_labeled'] = len(subset)
        history.records.append(EpochRecord(epoch, lr, losses, val_f1, extra))
        if val_f1 is not None and val_f1 > history.best_val_metric:
            history.best_epoch, history.best_val_metric = epoch, val_f1
            best_state = snapshot(classifier)
        logger.info(f"[finetune] epoch {epoch}: lr {lr:.3e}, loss {losses['total']:.4f}, val F1 {val_f1}")

    if best_state is not None:
        classifier.load_state_dict(best_state)
    return classifier, history
