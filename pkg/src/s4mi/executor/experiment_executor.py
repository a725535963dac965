"""Main executor: seeded runs of every training method, persisted and aggregated."""

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import torch

from ..evaluation.aggregate import aggregate_seeds
from ..evaluation.matching import hungarian_match
from ..evaluation.metrics import segmentation_scores
from ..model.config import MODEL_KEYS, RunRecord, TrainConfig
from ..model.enums import Method, RunStatus, ViewRegime
from ..model.errors import InvalidInputError, S4MIError
from ..model.models import ClassWeights, ClusterModel, ProcessedSample, RawSample, SplitSpec
from ..networks.checkpoints import load_checkpoint, load_classifier, load_pretrained_weights, save_checkpoint, save_classifier
from ..networks.zoo import build_model, comparable_pair, parameter_count
from ..preprocessing.class_weights import class_weights_for, pixel_class_frequencies
from ..preprocessing.dataset_io import (
    ATTRIBUTES_FILE, LABELS_FILE, atomic_write_json, load_raw_samples, mask_files, read_mask, save_processed,
    write_manifest, write_mask,
)
from ..preprocessing.pipeline import preprocess_all
from ..preprocessing.splits import select, split_dataset, subsample_labels
from ..training.audit import AuditedDataset, LabelAccessAudit
from ..training.cross_teaching import train_cross_teaching
from ..training.data import ClassificationData, SegmentationData, stack_images, stack_masks
from ..training.picie import segment_unsupervised, train_picie
from ..training.selfsup import evaluate_classifier, finetune, pretrain
from ..training.supervised import evaluate_segmenter, seed_everything, train_supervised
from .output_manager import OutputManager
from .synthetic import synthetic_samples

DEFAULT_SPLIT_SEED = 0


@dataclass
class PreparedData:
    """Processed samples of the three splits; raw images never straddle splits."""

    train: List[ProcessedSample]
    val: List[ProcessedSample]
    test: List[ProcessedSample]
    raw_splits: Dict[str, List[str]] = field(default_factory=dict)

    def ids(self) -> Dict[str, List[str]]:
        return {name: [s.id for s in getattr(self, name)] for name in ('train', 'val', 'test')}


@dataclass
class MethodOutcome:
    history: Dict[str, Any]
    final_metrics: Dict[str, Dict[str, float]]
    artifacts: Dict[str, str]
    primary_metric: str


def synced_config(cfg: TrainConfig) -> TrainConfig:
    """Every model spec takes its input size from preprocess.target_size."""
    size = cfg.preprocess.target_size
    updates = {key: replace(getattr(cfg, key), input_size=size) for key in MODEL_KEYS}
    return cfg.with_updates(**updates)


def classification_classes(samples: List[ProcessedSample], multilabel: bool) -> int:
    labels = [s.label for s in samples if s.label is not None]
    if not labels:
        raise InvalidInputError("Classification methods need per-image labels")
    if multilabel:
        return len(labels[0])
    return max(2, max(int(label) for label in labels) + 1)


def _run_seed_in_worker(config: Dict[str, Any], seed: int, output_root: str,
                        command_args: Dict[str, Any]) -> Dict[str, Any]:
    executor = ExperimentExecutor(output_root=output_root, command_args=command_args)
    cfg = TrainConfig.from_dict(config).validate()
    return executor.run_seed(cfg, seed).to_dict()


class ExperimentExecutor:
    """Runs one experiment config over all its seeds."""

    def __init__(
        self,
        output_root: Optional[Union[str, Path]] = None,
        command_args: Optional[Dict[str, Any]] = None,
        workers: int = 1,
        verbose: bool = False,
    ):
        self.command_args = command_args or {}
        self.workers = max(1, workers)

        # Setup logging
        logging.basicConfig(
            level=logging.DEBUG if verbose else logging.INFO,
            format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        self.logger = logging.getLogger(__name__)

        self.output_manager = OutputManager(output_root)
        self._data_cache: Dict[str, PreparedData] = {}

    def load_samples(self, cfg: TrainConfig) -> List[RawSample]:
        """The synthetic corpus, or images/ + masks/ (+ labels) under cfg.dataset."""
        if cfg.dataset == 'synthetic':
            return synthetic_samples(cfg.synthetic, multilabel=cfg.multilabel, dataset_tag=cfg.dataset_tag)
        root = Path(cfg.dataset)
        image_dir = root / 'images' if (root / 'images').is_dir() else root
        mask_dir = root / 'masks' if (root / 'masks').is_dir() else None
        labels_name = ATTRIBUTES_FILE if cfg.multilabel else LABELS_FILE
        return load_raw_samples(image_dir, mask_dir, cfg.dataset_tag, labels_name=labels_name)

    def prepare_data(self, cfg: TrainConfig) -> PreparedData:
        """Split raw ids, then preprocess each split with the configured profile."""
        key = cfg.config_hash()
        if key in self._data_cache:
            return self._data_cache[key]
        raws = self.load_samples(cfg)
        by_id = {raw.id: raw for raw in raws}
        split_seed = DEFAULT_SPLIT_SEED if cfg.split_seed is None else cfg.split_seed
        train_ids, val_ids, test_ids = split_dataset(list(by_id), SplitSpec(*cfg.split, seed=split_seed))
        data = PreparedData(
            train=preprocess_all(select(by_id, train_ids), cfg.preprocess),
            val=preprocess_all(select(by_id, val_ids), cfg.preprocess),
            test=preprocess_all(select(by_id, test_ids), cfg.preprocess),
            raw_splits={'train': train_ids, 'val': val_ids, 'test': test_ids},
        )
        self.logger.info(
            f"Prepared {cfg.dataset_tag}: {len(data.train)} train / {len(data.val)} val / {len(data.test)} test samples"
        )
        self._data_cache[key] = data
        return data

    def preprocess_to_disk(self, cfg: TrainConfig, out_dir: Union[str, Path]) -> Path:
        """Write every processed sample as .npz plus manifest.json."""
        out_dir = Path(out_dir)
        data = self.prepare_data(synced_config(cfg))
        for sample in data.train + data.val + data.test:
            save_processed(sample, out_dir / 'processed')
        write_manifest(out_dir / 'manifest.json', data.ids(), {'raw_splits': data.raw_splits,
                                                               'preprocess': cfg.to_dict()['preprocess']})
        self.logger.info(f"Wrote processed samples and manifest to {out_dir}")
        return out_dir

    def class_weights(self, cfg: TrainConfig, masks: List[np.ndarray]) -> Optional[ClassWeights]:
        freqs = pixel_class_frequencies(masks, cfg.conv_model.num_classes)
        weights = class_weights_for(cfg.weight_scheme, freqs, cfg.weight_orientation)
        self.logger.info(f"Class frequencies {np.round(freqs.freqs, 4).tolist()}, "
                         f"weights {None if weights is None else np.round(weights.weights, 4).tolist()}")
        return weights

    def weights_report(self, cfg: TrainConfig) -> Dict[str, Any]:
        data = self.prepare_data(synced_config(cfg))
        masks = [s.mask for s in data.train if s.mask is not None]
        freqs = pixel_class_frequencies(masks, cfg.conv_model.num_classes)
        weights = class_weights_for(cfg.weight_scheme, freqs, cfg.weight_orientation)
        return {
            'dataset': cfg.dataset_tag,
            'scheme': cfg.weight_scheme.value,
            'orientation': cfg.weight_orientation.value,
            'frequencies': freqs.freqs.tolist(),
            'weights': None if weights is None else weights.weights.tolist(),
        }

    def _segmenters(self, cfg: TrainConfig, seed: int):
        if cfg.param_budget is not None:
            conv, attn = comparable_pair(
                cfg.param_budget, seed,
                num_classes=cfg.conv_model.num_classes,
                in_channels=cfg.conv_model.in_channels,
                input_size=cfg.preprocess.target_size,
                conv_depth=cfg.conv_model.depth,
                attention_depth=cfg.attention_model.depth,
                window_size=cfg.attention_model.window_size,
                patch_size=cfg.attention_model.patch_size,
                num_heads=cfg.attention_model.num_heads,
            )
        else:
            conv, attn = build_model(cfg.conv_model, seed), build_model(cfg.attention_model, seed + 1)
        self.logger.info(f"Segmenters: conv {parameter_count(conv)} params, attention {parameter_count(attn)} params")
        return conv, attn

    def _labeled_split(self, cfg: TrainConfig, data: PreparedData, seed: int):
        by_id = {s.id: s for s in data.train}
        split = subsample_labels(list(by_id), cfg.label_fraction, seed)
        if not split.labeled:
            raise InvalidInputError(
                f"Label fraction {cfg.label_fraction} leaves no labeled images out of {len(by_id)}"
            )
        return select(by_id, split.labeled), select(by_id, split.unlabeled)

    def _run_supervised(self, cfg: TrainConfig, data: PreparedData, seed: int, run_dir: Path) -> MethodOutcome:
        labeled, _ = self._labeled_split(cfg, data, seed)
        conv, attn = self._segmenters(cfg, seed)
        model = attn if cfg.evaluate_branch == 'attention' else conv
        val = SegmentationData.from_samples(data.val) if data.val else None
        weights = self.class_weights(cfg, [s.mask for s in labeled])
        model, history = train_supervised(
            model, SegmentationData.from_samples(labeled), cfg.optimizer, cfg.schedule, cfg.epochs, seed,
            val_data=val, weights=weights, batch_size=cfg.batch_size, augment=cfg.augment, debug=cfg.debug,
        )
        num_classes = model.spec.num_classes
        metrics = {'test': evaluate_segmenter(model, SegmentationData.from_samples(data.test), num_classes)}
        if val is not None:
            metrics['val'] = evaluate_segmenter(model, val, num_classes)
        path = save_checkpoint(model, run_dir / f"{cfg.evaluate_branch}.pt", {'num_labeled': len(labeled)})
        return MethodOutcome({'train': history.to_dict(), 'num_labeled': len(labeled)}, metrics,
                             {'model': str(path)}, 'iou')

    def _run_cross_teaching(self, cfg: TrainConfig, data: PreparedData, seed: int, run_dir: Path) -> MethodOutcome:
        labeled, unlabeled = self._labeled_split(cfg, data, seed)
        conv, attn = self._segmenters(cfg, seed)
        val = SegmentationData.from_samples(data.val) if data.val else None
        weights = self.class_weights(cfg, [s.mask for s in labeled])
        conv, attn, history = train_cross_teaching(
            conv, attn, SegmentationData.from_samples(labeled),
            stack_images(unlabeled) if unlabeled else None,
            cfg.optimizer, cfg.schedule, cfg.epochs, seed, cfg.label_fraction,
            val_data=val, weights=weights, batch_size=cfg.batch_size, unsup_weight=cfg.unsup_weight,
            reserve_unlabeled=cfg.reserve_unlabeled, evaluate_branch=cfg.evaluate_branch,
            augment=cfg.augment, debug=cfg.debug,
        )
        test = SegmentationData.from_samples(data.test)
        branches = {'conv': conv, 'attention': attn}
        num_classes = conv.spec.num_classes
        metrics = {f'test_{name}': evaluate_segmenter(model, test, num_classes) for name, model in branches.items()}
        metrics['test'] = metrics[f'test_{cfg.evaluate_branch}']
        if val is not None:
            metrics['val'] = evaluate_segmenter(branches[cfg.evaluate_branch], val, num_classes)
        artifacts = {
            name: str(save_checkpoint(model, run_dir / f"{name}.pt", {'num_labeled': len(labeled)}))
            for name, model in branches.items()
        }
        artifacts['model'] = artifacts[cfg.evaluate_branch]
        return MethodOutcome(
            {'train': history.to_dict(), 'num_labeled': len(labeled), 'num_unlabeled': len(unlabeled)},
            metrics, artifacts, 'iou',
        )

    def _classification_data(self, cfg: TrainConfig, data: PreparedData):
        train = ClassificationData.from_samples(data.train, cfg.multilabel)
        val = ClassificationData.from_samples(data.val, cfg.multilabel) if data.val else None
        test = ClassificationData.from_samples(data.test, cfg.multilabel)
        return train, val, test, classification_classes(data.train, cfg.multilabel)

    def _backbone_spec(self, cfg: TrainConfig):
        return cfg.conv_backbone if cfg.classifier_backbone == 'conv' else cfg.attention_backbone

    def _finetune_outcome(self, cfg: TrainConfig, backbone, train, val, test, num_classes, seed: int,
                          run_dir: Path, history: Dict[str, Any]) -> MethodOutcome:
        classifier, ft_history = finetune(
            backbone, train, cfg.epochs, cfg.label_fraction, cfg.optimizer, cfg.schedule, seed, num_classes,
            val_data=val, multilabel=cfg.multilabel, averaging=cfg.averaging,
            batch_size=cfg.batch_size, debug=cfg.debug,
        )
        metrics = {'test': evaluate_classifier(classifier, test, num_classes, cfg.multilabel, cfg.averaging)}
        if val is not None:
            metrics['val'] = evaluate_classifier(classifier, val, num_classes, cfg.multilabel, cfg.averaging)
        path = save_classifier(classifier, run_dir / 'classifier.pt', {'multilabel': cfg.multilabel})
        history['finetune'] = ft_history.to_dict()
        return MethodOutcome(history, metrics, {'classifier': str(path)}, 'f1')

    def _run_selfsup(self, cfg: TrainConfig, data: PreparedData, seed: int, run_dir: Path) -> MethodOutcome:
        train, val, test, num_classes = self._classification_data(cfg, data)
        audit = LabelAccessAudit(f"pretrain/{cfg.method.value}")
        unlabeled = AuditedDataset(train.images, _labels=train.labels, audit=audit)
        if cfg.method == Method.SELFSUP_AUG:
            regime = ViewRegime.AUGMENTATION_ASYMMETRIC
            backbones = [build_model(self._backbone_spec(cfg), seed)]
        else:
            regime = ViewRegime.ARCHITECTURE_ASYMMETRIC
            backbones = [build_model(cfg.conv_backbone, seed), build_model(cfg.attention_backbone, seed + 1)]
        result = pretrain(
            backbones, unlabeled, cfg.pretrain_epochs, regime, cfg.optimizer, cfg.schedule, seed,
            batch_size=cfg.batch_size, embedding_dim=cfg.embedding_dim, jitter=cfg.jitter, debug=cfg.debug,
        )
        audit.assert_untouched()
        index = 0 if len(result.backbones) == 1 or cfg.classifier_backbone == 'conv' else 1
        history = {'pretrain': result.history.to_dict(), 'pretrain_label_reads': audit.reads}
        return self._finetune_outcome(cfg, result.backbones[index], train, val, test, num_classes, seed,
                                      run_dir, history)

    def _run_transfer(self, cfg: TrainConfig, data: PreparedData, seed: int, run_dir: Path) -> MethodOutcome:
        train, val, test, num_classes = self._classification_data(cfg, data)
        backbone = build_model(self._backbone_spec(cfg), seed)
        history: Dict[str, Any] = {'initialization': 'random'}
        if cfg.pretrained_weights:
            loaded = load_pretrained_weights(backbone, cfg.pretrained_weights)
            history = {'initialization': cfg.pretrained_weights, 'loaded_parameters': loaded}
            self.logger.info(f"Loaded {len(loaded)} pretrained arrays from {cfg.pretrained_weights}")
        return self._finetune_outcome(cfg, backbone, train, val, test, num_classes, seed, run_dir, history)

    def _run_picie(self, cfg: TrainConfig, data: PreparedData, seed: int, run_dir: Path) -> MethodOutcome:
        audit = LabelAccessAudit('picie')
        masks = stack_masks(data.train) if all(s.mask is not None for s in data.train) else None
        unlabeled = AuditedDataset(stack_images(data.train), _masks=masks, audit=audit)
        model = build_model(cfg.feature_model, seed)
        model, clusters, history = train_picie(
            model, unlabeled, cfg.epochs, cfg.picie_k, cfg.picie_optimizer, cfg.picie_schedule, seed,
            batch_size=cfg.batch_size, jitter=cfg.jitter, pixels_per_image=cfg.picie_pixels_per_image,
            debug=cfg.debug,
        )
        audit.assert_untouched()
        metrics, matching = {}, {}
        artifacts: Dict[str, str] = {}
        for name, samples in (('test', data.test), ('val', data.val)):
            if not samples:
                continue
            report, preds = self._match_clusters(model, clusters, samples, cfg.picie_k)
            metrics[name] = {'iou': report.foreground_iou, 'miou': report.matched_miou}
            matching[name] = report.to_dict()
            if name == 'test':
                artifacts['predictions'] = str(self._write_predictions(report.relabel(preds), samples,
                                                                       run_dir / 'predictions'))
        artifacts['matching'] = str(atomic_write_json(run_dir / 'matching.json', matching))
        path = save_checkpoint(model, run_dir / 'picie.pt', {'centroids': torch.from_numpy(clusters.centroids)})
        artifacts['model'] = str(path)
        return MethodOutcome(
            {'train': history.to_dict(), 'label_reads': audit.reads, 'matching': matching},
            metrics, artifacts, 'iou',
        )

    @staticmethod
    def _match_clusters(model, clusters: ClusterModel, samples: List[ProcessedSample], k: int):
        """(match report, raw cluster maps)."""
        preds = segment_unsupervised(model, clusters, stack_images(samples))
        return hungarian_match(preds, stack_masks(samples).numpy(), k), preds

    def _write_predictions(self, masks: np.ndarray, samples: List[ProcessedSample], out_dir: Path) -> Path:
        """One class-id PNG per sample, named by sample id."""
        out_dir.mkdir(parents=True, exist_ok=True)
        for mask, sample in zip(masks, samples):
            write_mask(out_dir / f"{sample.id}.png", mask)
        self.logger.info(f"Wrote {len(samples)} predicted masks to {out_dir}")
        return out_dir

    @staticmethod
    def _aborted_outcome(cfg: TrainConfig) -> MethodOutcome:
        return MethodOutcome({}, {}, {}, 'f1' if cfg.method.is_classification else 'iou')

    def _run_method(self, cfg: TrainConfig, data: PreparedData, seed: int, run_dir: Path) -> MethodOutcome:
        runners = {
            Method.SUPERVISED: self._run_supervised,
            Method.SEMI_CROSS_TEACH: self._run_cross_teaching,
            Method.SELFSUP_AUG: self._run_selfsup,
            Method.SELFSUP_ARCH: self._run_selfsup,
            Method.TRANSFER: self._run_transfer,
            Method.PICIE: self._run_picie,
        }
        return runners[cfg.method](cfg, data, seed, run_dir)

    def run_seed(self, cfg: TrainConfig, seed: int) -> RunRecord:
        """One seeded run; a cached record short-circuits the work."""
        config_hash = cfg.config_hash()
        cached = self.output_manager.load_record(config_hash, seed)
        if cached is not None:
            self.logger.info(f"Cache hit for {config_hash}/seed_{seed} ({cached.status.value})")
            return cached

        stored_config = cfg.to_dict()
        cfg = synced_config(cfg)
        self.logger.info(f"Starting {cfg.method.value} on {cfg.dataset_tag}, fraction {cfg.label_fraction}, seed {seed}")
        start = time.perf_counter()
        seed_everything(seed, cfg.num_threads)
        run_dir = self.output_manager.create_run_directory(config_hash, seed, self.command_args)
        try:
            data = self.prepare_data(cfg)
            outcome = self._run_method(cfg, data, seed, run_dir)
            status, diagnostic = RunStatus.COMPLETED, {}
        except S4MIError as e:
            self.logger.error(f"Run {config_hash}/seed_{seed} aborted: {e}")
            outcome, status = self._aborted_outcome(cfg), RunStatus.ABORTED
            diagnostic = {'error': str(e), 'type': type(e).__name__, **e.diagnostic}
        except Exception as e:
            self.logger.exception(f"Run {config_hash}/seed_{seed} failed")
            outcome, status = self._aborted_outcome(cfg), RunStatus.ABORTED
            diagnostic = {'error': f"{type(e).__name__}: {e}", 'type': type(e).__name__}

        record = RunRecord(
            config_hash=config_hash,
            seed=seed,
            config=stored_config,
            history=outcome.history,
            final_metrics=outcome.final_metrics,
            wall_clock_seconds=time.perf_counter() - start,
            artifacts=outcome.artifacts,
            status=status,
            diagnostic=diagnostic,
            primary_metric=outcome.primary_metric,
        )
        self.output_manager.save_record(record)
        if record.completed:
            self.logger.info(f"Finished seed {seed}: test {record.primary_metric} {record.test_score():.4f} "
                             f"in {record.wall_clock_seconds:.1f}s")
        return record

    def run_experiment(self, cfg: TrainConfig) -> List[RunRecord]:
        """Run every seed, then write the seed aggregate when at least two completed."""
        cfg.validate()
        if self.workers > 1 and len(cfg.seeds) > 1:
            records = self._run_parallel(cfg)
        else:
            records = [self.run_seed(cfg, seed) for seed in cfg.seeds]
        self.write_aggregate(cfg, records)
        return records

    def _run_parallel(self, cfg: TrainConfig) -> List[RunRecord]:
        config = cfg.to_dict()
        root = str(self.output_manager.base_dir)
        with ProcessPoolExecutor(max_workers=self.workers) as pool:
            futures = [pool.submit(_run_seed_in_worker, config, seed, root, self.command_args) for seed in cfg.seeds]
            return [RunRecord.from_dict(future.result()) for future in futures]

    def write_aggregate(self, cfg: TrainConfig, records: List[RunRecord]) -> Optional[Path]:
        completed = [r for r in records if r.completed]
        if len(completed) < 2:
            self.logger.warning(f"Only {len(completed)} completed seed(s); no aggregate written")
            return None
        metric = completed[0].primary_metric
        aggregate = aggregate_seeds([r.test_score() for r in completed], interval=cfg.interval)
        return self.output_manager.save_aggregate(
            cfg.config_hash(), metric, aggregate,
            {'seeds': [r.seed for r in completed], 'method': cfg.method.value,
             'label_fraction': cfg.label_fraction, 'dataset': cfg.dataset_tag},
        )

    def evaluate_run(self, config_hash: str, seed: int) -> Dict[str, Dict[str, float]]:
        """Recompute test (and val) metrics from a stored run's checkpoints."""
        record = self.output_manager.load_record(config_hash, seed)
        if record is None:
            raise InvalidInputError(f"No run record for {config_hash}/seed_{seed}")
        if not record.completed:
            raise InvalidInputError(f"Run {config_hash}/seed_{seed} was aborted: {record.diagnostic.get('error')}")
        cfg = synced_config(TrainConfig.from_dict(record.config))
        data = self.prepare_data(cfg)
        splits = {name: samples for name, samples in (('test', data.test), ('val', data.val)) if samples}
        method = Method(record.method)

        if method.is_classification:
            classifier, extra = load_classifier(record.artifacts['classifier'])
            num_classes = int(extra['num_classes'])
            return {
                name: evaluate_classifier(classifier, ClassificationData.from_samples(samples, cfg.multilabel),
                                          num_classes, cfg.multilabel, cfg.averaging)
                for name, samples in splits.items()
            }
        model, extra = load_checkpoint(record.artifacts['model'])
        if method == Method.PICIE:
            clusters = ClusterModel(extra['centroids'].numpy())
            reports = {name: self._match_clusters(model, clusters, samples, cfg.picie_k)[0]
                       for name, samples in splits.items()}
            return {name: {'iou': r.foreground_iou, 'miou': r.matched_miou} for name, r in reports.items()}
        return {
            name: evaluate_segmenter(model, SegmentationData.from_samples(samples), model.spec.num_classes)
            for name, samples in splits.items()
        }

    def score_mask_dirs(self, pred_dir: Union[str, Path], gt_dir: Union[str, Path],
                        out: Optional[Union[str, Path]] = None, num_classes: int = 2) -> Dict[str, Any]:
        """Score predicted masks against ground truth paired by file stem; writes a metrics record."""
        preds, gts = mask_files(pred_dir), mask_files(gt_dir)
        if not gts:
            raise InvalidInputError(f"No ground-truth masks in {gt_dir}")
        missing, extra = sorted(set(gts) - set(preds)), sorted(set(preds) - set(gts))
        if missing or extra:
            raise InvalidInputError(
                f"Prediction and ground-truth files do not pair up: missing predictions {missing}, "
                f"predictions without ground truth {extra}",
                {'missing': missing, 'unmatched': extra},
            )
        stems = sorted(gts)
        pred_masks, gt_masks = [], []
        for stem in stems:
            pred, gt = read_mask(preds[stem]), read_mask(gts[stem])
            if pred.shape != gt.shape:
                raise InvalidInputError(f"{stem}: prediction shape {pred.shape} != ground truth shape {gt.shape}")
            pred_masks.append(pred)
            gt_masks.append(gt)

        record = {
            'pred_dir': str(pred_dir),
            'gt_dir': str(gt_dir),
            'num_classes': num_classes,
            'images': stems,
            'metrics': segmentation_scores(pred_masks, gt_masks, num_classes),
        }
        out_path = Path(out) if out is not None else Path(pred_dir) / 'metrics.json'
        atomic_write_json(out_path, record)
        self.logger.info(f"Scored {len(stems)} masks from {pred_dir}; record written to {out_path}")
        return record

    def collect_records(self, config_hash: Optional[str] = None) -> List[RunRecord]:
        return self.output_manager.load_records(config_hash)


def all_completed(records: List[RunRecord]) -> bool:
    return bool(records) and all(record.completed for record in records)


def seed_split(records: List[RunRecord]) -> Tuple[List[int], List[int]]:
    """(completed seeds, aborted seeds)."""
    return ([r.seed for r in records if r.completed], [r.seed for r in records if not r.completed])
