"""Segmentation and classification losses.

Supervised loss is the average of soft Dice and weighted cross-entropy;
cross-teaching adds an unweighted Dice term against the peer network's
argmax map, which is treated as a constant target.
"""

from typing import Optional

import torch
import torch.nn.functional as F

from ..model.errors import InvalidInputError
from ..model.models import ClassWeights, LossValue, PseudoMask

DICE_EPS = 1e-5


def _check_target(scores: torch.Tensor, target: torch.Tensor) -> None:
    if scores.dim() != 4 or target.dim() != 3:
        raise InvalidInputError(f"Expected B×C×H×W scores and B×H×W target, got {tuple(scores.shape)} / {tuple(target.shape)}")
    if scores.shape[0] != target.shape[0] or scores.shape[2:] != target.shape[1:]:
        raise InvalidInputError(f"Shape mismatch: scores {tuple(scores.shape)} vs target {tuple(target.shape)}")
    if target.numel() and (int(target.min()) < 0 or int(target.max()) >= scores.shape[1]):
        raise InvalidInputError(f"Target class ids must lie in [0, {scores.shape[1]})")


def dice_loss(probs: torch.Tensor, target: torch.Tensor, eps: float = DICE_EPS) -> LossValue:
    """Soft Dice: 1 − (2·Σpg + ε)/(Σp + Σg + ε) per (sample, class), averaged."""
    _check_target(probs, target)
    sums = probs.detach().sum(dim=1)
    if not torch.allclose(sums, torch.ones_like(sums), atol=1e-5):
        raise InvalidInputError("Dice loss expects probabilities summing to 1 over the class axis")

    one_hot = F.one_hot(target.long(), probs.shape[1]).permute(0, 3, 1, 2).to(probs.dtype)
    intersection = (probs * one_hot).sum(dim=(2, 3))
    denominator = probs.sum(dim=(2, 3)) + one_hot.sum(dim=(2, 3))
    per_class = 1.0 - (2.0 * intersection + eps) / (denominator + eps)
    value = per_class.mean()
    return LossValue(value, {'dice': float(value.detach())})


def weighted_cross_entropy(
    logits: torch.Tensor,
    target: torch.Tensor,
    weights: Optional[ClassWeights] = None,
) -> LossValue:
    """Σ w_y·(−log softmax_y) / Σ w_y over all pixels."""
    _check_target(logits, target)
    if not torch.isfinite(logits).all():
        raise InvalidInputError("Logits contain non-finite values")
    weight = None
    if weights is not None:
        if weights.num_classes != logits.shape[1]:
            raise InvalidInputError(f"{weights.num_classes} class weights for {logits.shape[1]} classes")
        weight = weights.to_tensor(logits.dtype).to(logits.device)
    value = F.cross_entropy(logits, target.long(), weight=weight)
    return LossValue(value, {'ce': float(value.detach())})


def combine_supervised(dice: LossValue, ce: LossValue) -> LossValue:
    value = 0.5 * (dice.value + ce.value)
    return LossValue(value, {'dice': dice.item(), 'ce': ce.item(), 'supervised': float(value.detach())})


def supervised_loss(
    seg: torch.Tensor,
    target: torch.Tensor,
    weights: Optional[ClassWeights] = None,
) -> LossValue:
    """½·(Dice(softmax(seg), target) + weighted CE(seg, target))."""
    dice = dice_loss(torch.softmax(seg, dim=1), target)
    ce = weighted_cross_entropy(seg, target, weights)
    return combine_supervised(dice, ce)


def pseudo_label(logits: torch.Tensor, source: str = "unknown") -> PseudoMask:
    """Per-pixel argmax; ties go to the lowest class index."""
    with torch.no_grad():
        values = torch.argmax(logits.detach(), dim=1)
    return PseudoMask(values, source)


def cross_teach_unsup_loss(logits_self: torch.Tensor, pseudo_other: PseudoMask) -> LossValue:
    """Dice of this network's prediction against the peer's pseudo-label."""
    target = pseudo_other.values.detach()
    if logits_self.shape[:1] + logits_self.shape[2:] != target.shape:
        raise InvalidInputError(
            f"Pseudo-label shape {tuple(target.shape)} does not match logits {tuple(logits_self.shape)}"
        )
    dice = dice_loss(torch.softmax(logits_self, dim=1), target)
    return LossValue(dice.value, {'unsupervised': dice.item()})


def total_semi_loss(sup: LossValue, unsup: LossValue, unsup_weight: float = 1.0) -> LossValue:
    """sup + unsup_weight·unsup, keeping every component."""
    if sup.item() < 0 or unsup.item() < 0:
        raise InvalidInputError("Semi-supervised loss terms must be non-negative")
    value = sup.value + unsup_weight * unsup.value
    components = {**sup.components, **unsup.components}
    components['supervised'] = sup.item()
    components['unsupervised'] = unsup.item()
    components['total'] = float(value.detach())
    return LossValue(value, components)


def classification_loss(logits: torch.Tensor, targets: torch.Tensor, multilabel: bool = False) -> LossValue:
    """Cross-entropy, or per-class binary cross-entropy for multilabel targets."""
    if not torch.isfinite(logits).all():
        raise InvalidInputError("Logits contain non-finite values")
    if multilabel:
        if targets.shape != logits.shape:
            raise InvalidInputError(f"Multilabel targets {tuple(targets.shape)} must match logits {tuple(logits.shape)}")
        value = F.binary_cross_entropy_with_logits(logits, targets.to(logits.dtype))
    else:
        if targets.dim() != 1 or targets.shape[0] != logits.shape[0]:
            raise InvalidInputError(f"Expected {logits.shape[0]} class ids, got shape {tuple(targets.shape)}")
        value = F.cross_entropy(logits, targets.long())
    return LossValue(value, {'ce': float(value.detach())})
