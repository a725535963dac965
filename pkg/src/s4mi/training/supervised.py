"""Supervised segmentation baseline and shared epoch plumbing."""

import copy
import logging
import math
import random
from collections import defaultdict
from typing import Dict, Optional, Tuple

import numpy as np
import torch
from torch import nn

from ..evaluation.metrics import segmentation_scores
from ..model.config import OptimizerConfig, ScheduleConfig
from ..model.errors import InvalidInputError, TrainingAbortedError
from ..model.models import ClassWeights, EpochRecord, LossValue, TrainHistory
from .data import SegmentationData, augment_batch, derive_seed
from .losses import supervised_loss
from .schedule import build_optimizer, lr_at, set_lr

logger = logging.getLogger(__name__)


def check_finite(loss: LossValue, epoch: int, step: int, label: str = "loss") -> None:
    if not math.isfinite(loss.item()):
        raise TrainingAbortedError(
            f"Non-finite {label} at epoch {epoch}, step {step}",
            {'epoch': epoch, 'step': step, 'reason': 'non_finite_loss', 'components': dict(loss.components)},
        )


@torch.no_grad()
def predict_masks(model: nn.Module, images: torch.Tensor, batch_size: int = 32) -> np.ndarray:
    """Argmax class maps, N×H×W."""
    was_training = model.training
    model.eval()
    outputs = [model(images[i:i + batch_size]).argmax(dim=1) for i in range(0, images.shape[0], batch_size)]
    model.train(was_training)
    return torch.cat(outputs).cpu().numpy()


def evaluate_segmenter(model: nn.Module, data: SegmentationData, num_classes: int = 2) -> Dict[str, float]:
    preds = predict_masks(model, data.images)
    return segmentation_scores(list(preds), list(data.masks.cpu().numpy()), num_classes)


def snapshot(model: nn.Module) -> Dict[str, torch.Tensor]:
    return copy.deepcopy(model.state_dict())


class EpochAccumulator:
    """Running means of loss components within an epoch."""

    def __init__(self):
        self.sums: Dict[str, float] = defaultdict(float)
        self.count = 0

    def add(self, components: Dict[str, float]) -> None:
        for name, value in components.items():
            self.sums[name] += value
        self.count += 1

    def means(self) -> Dict[str, float]:
        return {name: total / max(self.count, 1) for name, total in self.sums.items()}


def train_supervised(
    model: nn.Module,
    train_data: SegmentationData,
    optimizer_cfg: OptimizerConfig,
    schedule_cfg: ScheduleConfig,
    epochs: int,
    seed: int,
    val_data: Optional[SegmentationData] = None,
    weights: Optional[ClassWeights] = None,
    batch_size: int = 16,
    augment: bool = False,
    debug: bool = False,
) -> Tuple[nn.Module, TrainHistory]:
    """Adam/SGD on ½(Dice + weighted CE); keeps the best-validation-IoU weights."""
    if len(train_data) == 0:
        raise InvalidInputError("Supervised training needs labeled data")
    num_classes = model.spec.num_classes
    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    optimizer = build_optimizer(model.parameters(), optimizer_cfg)
    history = TrainHistory(metric_name='val_iou')

    best_state = None
    if val_data is not None:
        history.initial_val_metric = evaluate_segmenter(model, val_data, num_classes)['iou']
        history.best_val_metric = history.initial_val_metric
        best_state = snapshot(model)

    for epoch in range(epochs):
        lr = lr_at(epoch, schedule_cfg, optimizer_cfg.lr)
        set_lr(optimizer, lr)
        model.train()
        accumulator = EpochAccumulator()
        order = torch.randperm(len(train_data), generator=generator)
        for step, start in enumerate(range(0, len(train_data), batch_size)):
            index = order[start:start + batch_size]
            images, masks = train_data.images[index], train_data.masks[index]
            if augment:
                images, masks = augment_batch(images, masks, derive_seed(seed, epoch, step))
            loss = supervised_loss(model(images), masks, weights)
            check_finite(loss, epoch, step)
            optimizer.zero_grad()
            loss.value.backward()
            optimizer.step()
            accumulator.add(loss.components)
            if debug:
                history.step_traces.append({'epoch': epoch, 'step': step, **loss.components})

        val_iou = evaluate_segmenter(model, val_data, num_classes)['iou'] if val_data is not None else None
        losses = accumulator.means()
        losses['total'] = losses.get('supervised', 0.0)
        history.records.append(EpochRecord(epoch, lr, losses, val_iou))
        if val_iou is not None and val_iou > history.best_val_metric:
            history.best_epoch, history.best_val_metric = epoch, val_iou
            best_state = snapshot(model)
        logger.info(f"[supervised] epoch {epoch}: lr {lr:.3e}, loss {losses['total']:.4f}, val IoU {val_iou}")

    if best_state is not None:
        model.load_state_dict(best_state)
    return model, history


def seed_everything(seed: int, num_threads: Optional[int] = None) -> None:
    random.seed(seed)
    np.random.seed(seed % 2 ** 32)
    torch.manual_seed(seed)
    if num_threads:
        torch.set_num_threads(num_threads)

