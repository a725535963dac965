"""Cross-teaching between a convolutional and an attention segmenter.

Each step both networks see the labeled half (supervised loss) and the
unlabeled half; each is additionally trained with Dice against the other
network's argmax map on the unlabeled half. Both optimizers step every batch.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import torch
from torch import nn

from ..model.config import OptimizerConfig, ScheduleConfig
from ..model.errors import InvalidInputError
from ..model.models import ClassWeights, EpochRecord, LossValue, PseudoMask, SemiBatch, TrainHistory
from .batching import compose_semi_batch, semi_batch_sizes
from .data import SegmentationData, augment_batch, derive_seed
from .losses import cross_teach_unsup_loss, pseudo_label, supervised_loss, total_semi_loss
from .schedule import build_optimizer, lr_at, set_lr
from .supervised import EpochAccumulator, check_finite, evaluate_segmenter, snapshot

logger = logging.getLogger(__name__)

BRANCHES = ('conv', 'attention')


@dataclass
class CrossTeachingStep:
    """Losses of one step plus the pseudo-labels each network consumed."""

    conv_loss: LossValue
    attn_loss: LossValue
    pseudo_for_conv: Optional[PseudoMask]
    pseudo_for_attn: Optional[PseudoMask]
    conv_unlabeled_logits: Optional[torch.Tensor] = None
    attn_unlabeled_logits: Optional[torch.Tensor] = None


def _zero_unsup(reference: torch.Tensor) -> LossValue:
    return LossValue(reference.new_zeros(()), {'unsupervised': 0.0})


def cross_teaching_step(
    conv_model: nn.Module,
    attn_model: nn.Module,
    labeled_images: torch.Tensor,
    labeled_masks: torch.Tensor,
    unlabeled_images: Optional[torch.Tensor],
    weights: Optional[ClassWeights] = None,
    unsup_weight: float = 1.0,
) -> CrossTeachingStep:
    """Forward both networks on [labeled; unlabeled] and assemble their losses."""
    n_labeled = labeled_images.shape[0]
    has_unlabeled = unlabeled_images is not None and unlabeled_images.shape[0] > 0
    inputs = torch.cat([labeled_images, unlabeled_images]) if has_unlabeled else labeled_images

    conv_logits = conv_model(inputs)
    attn_logits = attn_model(inputs)
    conv_sup = supervised_loss(conv_logits[:n_labeled], labeled_masks, weights)
    attn_sup = supervised_loss(attn_logits[:n_labeled], labeled_masks, weights)

    if not has_unlabeled:
        return CrossTeachingStep(
            total_semi_loss(conv_sup, _zero_unsup(conv_sup.value), unsup_weight),
            total_semi_loss(attn_sup, _zero_unsup(attn_sup.value), unsup_weight),
            None,
            None,
        )

    conv_unlabeled, attn_unlabeled = conv_logits[n_labeled:], attn_logits[n_labeled:]
    pseudo_for_conv = pseudo_label(attn_unlabeled, source='attention')
    pseudo_for_attn = pseudo_label(conv_unlabeled, source='conv')
    conv_total = total_semi_loss(conv_sup, cross_teach_unsup_loss(conv_unlabeled, pseudo_for_conv), unsup_weight)
    attn_total = total_semi_loss(attn_sup, cross_teach_unsup_loss(attn_unlabeled, pseudo_for_attn), unsup_weight)
    return CrossTeachingStep(
        conv_total, attn_total, pseudo_for_conv, pseudo_for_attn,
        conv_unlabeled.detach(), attn_unlabeled.detach(),
    )


def _steps_per_epoch(n_labeled_pool: int, n_unlabeled_pool: int, n_labeled: int, n_unlabeled: int) -> int:
    steps = math.ceil(n_labeled_pool / n_labeled)
    if n_unlabeled and n_unlabeled_pool:
        steps = max(steps, math.ceil(n_unlabeled_pool / n_unlabeled))
    return max(1, steps)


def _stack_batch(batch: SemiBatch) -> Tuple[torch.Tensor, torch.Tensor, Optional[torch.Tensor]]:
    images = torch.stack([image for image, _ in batch.labeled])
    masks = torch.stack([mask for _, mask in batch.labeled])
    unlabeled = torch.stack(batch.unlabeled) if batch.unlabeled else None
    return images, masks, unlabeled


def train_cross_teaching(
    conv_model: nn.Module,
    attn_model: nn.Module,
    labeled: SegmentationData,
    unlabeled: Optional[torch.Tensor],
    optimizer_cfg: OptimizerConfig,
    schedule_cfg: ScheduleConfig,
    epochs: int,
    seed: int,
    fraction: float,
    val_data: Optional[SegmentationData] = None,
    weights: Optional[ClassWeights] = None,
    batch_size: int = 16,
    unsup_weight: float = 1.0,
    reserve_unlabeled: bool = True,
    evaluate_branch: str = 'attention',
    augment: bool = False,
    debug: bool = False,
) -> Tuple[nn.Module, nn.Module, TrainHistory]:
    """Train both networks simultaneously; keep the best validation epoch of the evaluated branch."""
    if len(labeled) == 0:
        raise InvalidInputError("Cross-teaching needs labeled data")
    if evaluate_branch not in BRANCHES:
        raise InvalidInputError(f"evaluate_branch must be one of {BRANCHES}, got {evaluate_branch}")
    num_classes = conv_model.spec.num_classes
    torch.manual_seed(seed)
    conv_optimizer = build_optimizer(conv_model.parameters(), optimizer_cfg)
    attn_optimizer = build_optimizer(attn_model.parameters(), optimizer_cfg)

    labeled_pool = labeled.pairs()
    unlabeled_pool = [image for image in unlabeled] if unlabeled is not None else []
    n_labeled, n_unlabeled = semi_batch_sizes(fraction, batch_size, reserve_unlabeled)
    steps = _steps_per_epoch(len(labeled_pool), len(unlabeled_pool), n_labeled, n_unlabeled)
    history = TrainHistory(metric_name='val_iou')

    def validate():
        scores = {
            'conv': evaluate_segmenter(conv_model, val_data, num_classes)['iou'],
            'attention': evaluate_segmenter(attn_model, val_data, num_classes)['iou'],
        }
        return scores[evaluate_branch], scores

    best = None
    if val_data is not None:
        history.initial_val_metric, _ = validate()
        history.best_val_metric = history.initial_val_metric
        best = (snapshot(conv_model), snapshot(attn_model))

    for epoch in range(epochs):
        lr = lr_at(epoch, schedule_cfg, optimizer_cfg.lr)
        set_lr(conv_optimizer, lr)
        set_lr(attn_optimizer, lr)
        conv_model.train()
        attn_model.train()
        conv_acc, attn_acc = EpochAccumulator(), EpochAccumulator()
        for step in range(steps):
            step_seed = derive_seed(seed, epoch, step)
            batch = compose_semi_batch(
                labeled_pool, unlabeled_pool, fraction, batch_size, step_seed, reserve_unlabeled
            )
            images, masks, unlabeled_images = _stack_batch(batch)
            if augment:
                images, masks = augment_batch(images, masks, step_seed)
                if unlabeled_images is not None:
                    unlabeled_images, _ = augment_batch(unlabeled_images, None, step_seed + 1)
            result = cross_teaching_step(conv_model, attn_model, images, masks, unlabeled_images, weights, unsup_weight)
            check_finite(result.conv_loss, epoch, step, 'conv loss')
            check_finite(result.attn_loss, epoch, step, 'attention loss')

            conv_optimizer.zero_grad()
            attn_optimizer.zero_grad()
            (result.conv_loss.value + result.attn_loss.value).backward()
            conv_optimizer.step()
            attn_optimizer.step()

            conv_acc.add(result.conv_loss.components)
            attn_acc.add(result.attn_loss.components)
            if debug:
                history.step_traces.append({
                    'epoch': epoch,
                    'step': step,
                    **{f'conv_{k}': v for k, v in result.conv_loss.components.items()},
                    **{f'attention_{k}': v for k, v in result.attn_loss.components.items()},
                })

        losses = {f'conv_{k}': v for k, v in conv_acc.means().items()}
        losses.update({f'attention_{k}': v for k, v in attn_acc.means().items()})
        losses['total'] = losses['conv_total'] + losses['attention_total']
        val_metric, extra = (None, {})
        if val_data is not None:
            val_metric, branch_scores = validate()
            extra = {f'val_iou_{name}': score for name, score in branch_scores.items()}
        history.records.append(EpochRecord(epoch, lr, losses, val_metric, extra))
        if val_metric is not None and val_metric > history.best_val_metric:
            history.best_epoch, history.best_val_metric = epoch, val_metric
            best = (snapshot(conv_model), snapshot(attn_model))
        logger.info(
            f"[cross-teach] epoch {epoch}: lr {lr:.3e}, conv {losses['conv_total']:.4f}, "
            f"attention {losses['attention_total']:.4f}, val IoU ({evaluate_branch}) {val_metric}"
        )

    if best is not None:
        conv_model.load_state_dict(best[0])
        attn_model.load_state_dict(best[1])
    return conv_model, attn_model, history
