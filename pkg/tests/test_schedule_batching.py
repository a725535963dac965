"""Learning-rate schedules, optimizers and semi-supervised batch composition."""

import numpy as np
import pytest
import torch

from s4mi.model.config import OptimizerConfig, ScheduleConfig
from s4mi.model.enums import OptimizerKind, ScheduleKind
from s4mi.model.errors import ConfigError, InvalidInputError
from s4mi.training.batching import compose_semi_batch, semi_batch_sizes
from s4mi.training.schedule import build_optimizer, cosine_lr, lr_at, set_lr, step_lr


class TestCosineSchedule:

    def test_endpoints_and_midpoint(self):
        cfg = ScheduleConfig(t_max=50, lr_min=3.4e-4)
        assert cosine_lr(0, cfg, 3.6e-4) == pytest.approx(3.6e-4)
        assert cosine_lr(25, cfg, 3.6e-4) == pytest.approx(3.5e-4)
        assert cosine_lr(50, cfg, 3.6e-4) == pytest.approx(3.4e-4)

    def test_monotone_and_bounded(self):
        cfg = ScheduleConfig(t_max=50, lr_min=3.4e-4)
        trace = [cosine_lr(e, cfg, 3.6e-4) for e in range(51)]
        assert all(a >= b for a, b in zip(trace, trace[1:]))
        assert min(trace) >= 3.4e-4 - 1e-15
        assert max(trace) <= 3.6e-4 + 1e-15

    def test_clamped_past_t_max(self):
        cfg = ScheduleConfig(t_max=10, lr_min=1e-5)
        assert cosine_lr(15, cfg, 1e-3) == pytest.approx(1e-5)
        assert cosine_lr(-3, cfg, 1e-3) == pytest.approx(1e-3)

    def test_lr_min_above_lr0(self):
        with pytest.raises(ConfigError):
            cosine_lr(5, ScheduleConfig(lr_min=1e-2), 1e-3)

    def test_invalid_t_max(self):
        with pytest.raises(ConfigError):
            ScheduleConfig(t_max=0)


class TestStepSchedule:

    def test_halves_every_twenty_epochs(self):
        cfg = ScheduleConfig(kind=ScheduleKind.STEP, step_size=20, gamma=0.5)
        assert step_lr(0, cfg, 1e-4) == pytest.approx(1e-4)
        assert step_lr(19, cfg, 1e-4) == pytest.approx(1e-4)
        assert step_lr(20, cfg, 1e-4) == pytest.approx(5e-5)
        assert step_lr(45, cfg, 1e-4) == pytest.approx(2.5e-5)

    def test_lr_at_dispatches(self):
        step = ScheduleConfig.picie_default()
        cosine = ScheduleConfig(t_max=50, lr_min=3.4e-4)
        assert lr_at(40, step, 1e-4) == pytest.approx(2.5e-5)
        assert lr_at(25, cosine, 3.6e-4) == pytest.approx(3.5e-4)


class TestOptimizers:

    def test_adam(self):
        params = [torch.nn.Parameter(torch.zeros(3))]
        optimizer = build_optimizer(params, OptimizerConfig())
        assert isinstance(optimizer, torch.optim.Adam)
        assert optimizer.param_groups[0]['lr'] == pytest.approx(3.6e-4)

    def test_sgd_and_set_lr(self):
        params = [torch.nn.Parameter(torch.zeros(3))]
        optimizer = build_optimizer(params, OptimizerConfig.picie_default())
        assert isinstance(optimizer, torch.optim.SGD)
        assert OptimizerConfig.picie_default().kind == OptimizerKind.SGD
        set_lr(optimizer, 5e-5)
        assert optimizer.param_groups[0]['lr'] == pytest.approx(5e-5)

    def test_non_positive_lr(self):
        with pytest.raises(ConfigError):
            OptimizerConfig(lr=0.0)


class TestSemiBatch:

    @staticmethod
    def _pools(n_labeled, n_unlabeled):
        labeled = [(np.full((2, 2), i), np.zeros((2, 2), dtype=np.int64)) for i in range(n_labeled)]
        unlabeled = [np.full((2, 2), 1000 + i) for i in range(n_unlabeled)]
        return labeled, unlabeled

    def test_sizes(self):
        assert semi_batch_sizes(0.1, 16) == (8, 8)
        assert semi_batch_sizes(0.5, 15) == (7, 8)
        assert semi_batch_sizes(1.0, 16) == (15, 1)
        assert semi_batch_sizes(1.0, 16, reserve_unlabeled=False) == (16, 0)

    def test_batch_too_small(self):
        with pytest.raises(InvalidInputError):
            semi_batch_sizes(0.5, 1)

    def test_half_and_half_below_full_labels(self):
        labeled, unlabeled = self._pools(20, 40)
        for seed in range(100):
            batch = compose_semi_batch(labeled, unlabeled, 0.5, 16, seed)
            assert len(batch.labeled) == 8 and len(batch.unlabeled) == 8
            ids = [int(image[0, 0]) for image, _ in batch.labeled]
            assert len(set(ids)) == 8
            assert len({int(image[0, 0]) for image in batch.unlabeled}) == 8

    def test_full_labels_borrow_one_unlabeled_slot(self):
        labeled, _ = self._pools(30, 0)
        for seed in range(100):
            batch = compose_semi_batch(labeled, [], 1.0, 16, seed)
            assert len(batch.labeled) == 15 and len(batch.unlabeled) == 1
            used = {int(image[0, 0]) for image, _ in batch.labeled}
            assert int(batch.unlabeled[0][0, 0]) not in used

    def test_full_labels_with_unlabeled_pool(self):
        labeled, unlabeled = self._pools(30, 5)
        batch = compose_semi_batch(labeled, unlabeled, 1.0, 16, seed=3)
        assert len(batch.labeled) == 15
        assert int(batch.unlabeled[0][0, 0]) >= 1000

    def test_deterministic_per_seed(self):
        labeled, unlabeled = self._pools(20, 20)
        a = compose_semi_batch(labeled, unlabeled, 0.1, 8, seed=7)
        b = compose_semi_batch(labeled, unlabeled, 0.1, 8, seed=7)
        assert [int(x[0, 0]) for x, _ in a.labeled] == [int(x[0, 0]) for x, _ in b.labeled]

    def test_pool_too_small(self):
        labeled, unlabeled = self._pools(3, 40)
        with pytest.raises(InvalidInputError):
            compose_semi_batch(labeled, unlabeled, 0.1, 16, seed=0)
        labeled, unlabeled = self._pools(20, 2)
        with pytest.raises(InvalidInputError):
            compose_semi_batch(labeled, unlabeled, 0.1, 16, seed=0)
