"""Closed-form learning-rate schedules and optimizer construction."""

import math
from typing import Iterable

import torch

from ..model.config import OptimizerConfig, ScheduleConfig
from ..model.enums import OptimizerKind, ScheduleKind
from ..model.errors import ConfigError


def cosine_lr(epoch: int, cfg: ScheduleConfig, lr0: float) -> float:
    """lr_min + ½(lr0 − lr_min)(1 + cos(π·epoch/t_max)), clamped past t_max."""
    if cfg.lr_min > lr0:
        raise ConfigError(f"lr_min {cfg.lr_min} exceeds the initial learning rate {lr0}")
    if epoch <= 0:
        return lr0
    if epoch >= cfg.t_max:
        return cfg.lr_min
    return cfg.lr_min + 0.5 * (lr0 - cfg.lr_min) * (1.0 + math.cos(math.pi * epoch / cfg.t_max))


def step_lr(epoch: int, cfg: ScheduleConfig, lr0: float) -> float:
    return lr0 * cfg.gamma ** (max(epoch, 0) // cfg.step_size)


def lr_at(epoch: int, cfg: ScheduleConfig, lr0: float) -> float:
    if cfg.kind == ScheduleKind.COSINE_ANNEALING:
        return cosine_lr(epoch, cfg, lr0)
    return step_lr(epoch, cfg, lr0)


def build_optimizer(params: Iterable[torch.nn.Parameter], cfg: OptimizerConfig) -> torch.optim.Optimizer:
    if cfg.kind == OptimizerKind.ADAM:
        return torch.optim.Adam(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    return torch.optim.SGD(params, lr=cfg.lr, momentum=cfg.momentum, weight_decay=cfg.weight_decay)


def set_lr(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group['lr'] = lr
