"""Main entry point for s4mi operations."""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..model.config import SyntheticSpec, TrainConfig, load_config
from ..model.enums import PresentationType, WeightOrientation, WeightScheme
from ..networks.checkpoints import load_classifier
from ..presentation.report import render_report
from ..presentation.saliency_images import render_saliency
from ..training.data import stack_images
from .experiment_executor import ExperimentExecutor, all_completed, seed_split, synced_config
from .synthetic import corpus_summary, generate_synthetic, synthetic_samples


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--output-root",
        type=str,
        help="Results root (default: $S4MI_OUTPUT_ROOT or ./build)"
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log at DEBUG level"
    )


def _add_config(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", type=str, help="YAML experiment config")
    parser.add_argument(
        "--allow-any-fraction",
        action="store_true",
        help="Accept label fractions outside the 0/10/50/70/100%% grid"
    )


def parse_args(argv: Optional[List[str]] = None):
    """Parse command line arguments."""
    parser = argparse.ArgumentParser(description="Supervised, semi-, self- and unsupervised medical image experiments")
    commands = parser.add_subparsers(dest="command", required=True)

    synth = commands.add_parser("synth", help="Write the synthetic lesion corpus")
    _add_common(synth)
    synth.add_argument("--out", type=str, required=True, help="Corpus directory")
    synth.add_argument("--config", type=str, help="Take the synthetic spec from this experiment config")
    synth.add_argument("--n-images", type=int, help="Number of images")
    synth.add_argument("--image-size", type=int, help="Square image size in pixels")
    synth.add_argument("--foreground-fraction", type=float, help="Mean lesion area fraction")
    synth.add_argument("--seed", type=int, help="Corpus seed")

    preprocess = commands.add_parser("preprocess", help="Preprocess and split a dataset to .npz files")
    _add_common(preprocess)
    _add_config(preprocess)
    preprocess.add_argument("--out", type=str, required=True, help="Output directory")

    weights = commands.add_parser("weights", help="Print class frequencies and cross-entropy weights")
    _add_common(weights)
    _add_config(weights)
    weights.add_argument("--scheme", choices=[s.value for s in WeightScheme], help="Override weight_scheme")
    weights.add_argument("--orientation", choices=[o.value for o in WeightOrientation],
                         help="Override weight_orientation")

    train = commands.add_parser("train", help="Run every seed of an experiment config")
    _add_common(train)
    _add_config(train)
    train.add_argument("--seeds", type=int, nargs='+', help="Override the config's seeds")
    train.add_argument("--workers", type=int, default=1, help="Seeds run in parallel processes (default: 1)")

    evaluate = commands.add_parser(
        "eval", help="Score a prediction directory against ground truth, or re-evaluate a stored run"
    )
    _add_common(evaluate)
    evaluate.add_argument("--pred-dir", type=str, help="Predicted masks, paired with --gt-dir by file stem")
    evaluate.add_argument("--gt-dir", type=str, help="Ground-truth masks")
    evaluate.add_argument("--out", type=str, help="Metrics record path (default: <pred-dir>/metrics.json)")
    evaluate.add_argument("--num-classes", type=int, default=2, help="Classes in the masks (default: 2)")
    evaluate.add_argument("--config-hash", type=str, help="Run config hash")
    evaluate.add_argument("--seed", type=int, help="Run seed")

    report = commands.add_parser("report", help="Tables and plots over stored runs")
    _add_common(report)
    report.add_argument("--config-hash", type=str, help="Restrict to one config hash")
    report.add_argument(
        "--presentation",
        nargs='+',
        choices=[p.value for p in PresentationType],
        default=[p.value for p in PresentationType],
        help="Report formats (default: all)"
    )
    report.add_argument("--saliency", type=str, metavar="HASH:SEED",
                        help="Render saliency images for a classifier run")
    report.add_argument("--saliency-count", type=int, default=4, help="Test images to render (default: 4)")

    return parser.parse_args(argv)


def _overrides(args) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    if getattr(args, 'allow_any_fraction', False):
        overrides['allow_any_fraction'] = True
    if getattr(args, 'seeds', None):
        overrides['seeds'] = args.seeds
    if getattr(args, 'scheme', None):
        overrides['weight_scheme'] = args.scheme
    if getattr(args, 'orientation', None):
        overrides['weight_orientation'] = args.orientation
    return overrides


def _synthetic_spec(args) -> SyntheticSpec:
    spec = load_config(args.config).synthetic if args.config else SyntheticSpec()
    values = spec.to_dict()
    for key in ('n_images', 'image_size', 'foreground_fraction', 'seed'):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    return SyntheticSpec.from_dict(values)


def _render_saliency(executor: ExperimentExecutor, target: str, count: int, session_dir: Path) -> List[Path]:
    config_hash, seed = target.split(':')
    record = executor.output_manager.load_record(config_hash, int(seed))
    if record is None or 'classifier' not in record.artifacts:
        raise ValueError(f"No classifier checkpoint for run {target}")
    classifier, _ = load_classifier(record.artifacts['classifier'])
    samples = executor.prepare_data(synced_config(TrainConfig.from_dict(record.config))).test[:count]
    return render_saliency(classifier, stack_images(samples), [s.id for s in samples], session_dir / 'saliency')


def run_command(args) -> int:
    """Dispatch one subcommand; returns the process exit code."""
    command_args = {key: value for key, value in vars(args).items()}
    executor = ExperimentExecutor(
        output_root=args.output_root,
        command_args=command_args,
        workers=getattr(args, 'workers', 1),
        verbose=args.verbose,
    )

    if args.command == "synth":
        spec = _synthetic_spec(args)
        out = generate_synthetic(spec, args.out)
        print(json.dumps({'out': str(out), 'spec_hash': spec.spec_hash(), **corpus_summary(synthetic_samples(spec))}))
        return 0

    cfg = load_config(args.config, _overrides(args)) if hasattr(args, 'config') else None

    if args.command == "preprocess":
        print(f"Processed dataset written to: {executor.preprocess_to_disk(cfg, args.out)}")
        return 0

    if args.command == "weights":
        print(json.dumps(executor.weights_report(cfg), indent=2))
        return 0

    if args.command == "train":
        records = executor.run_experiment(cfg)
        completed, aborted = seed_split(records)
        print(f"Config {cfg.config_hash()}: {len(completed)} completed, {len(aborted)} aborted {aborted or ''}".rstrip())
        return 0 if all_completed(records) else 1

    if args.command == "eval":
        if args.pred_dir or args.gt_dir:
            if not (args.pred_dir and args.gt_dir):
                raise ValueError("--pred-dir and --gt-dir go together")
            record = executor.score_mask_dirs(args.pred_dir, args.gt_dir, args.out, args.num_classes)
            print(json.dumps(record['metrics'], indent=2))
            return 0
        if args.config_hash is None or args.seed is None:
            raise ValueError("eval needs --pred-dir and --gt-dir, or --config-hash and --seed")
        print(json.dumps(executor.evaluate_run(args.config_hash, args.seed), indent=2))
        return 0

    if args.command == "report":
        records = executor.collect_records(args.config_hash)
        session_dir = executor.output_manager.create_session_directory('report', command_args)
        kinds = [PresentationType(value) for value in args.presentation]
        rendered = render_report(records, session_dir, kinds, executor.output_manager)
        for text in rendered.values():
            sys.stdout.write(text)
        if args.saliency:
            paths = _render_saliency(executor, args.saliency, args.saliency_count, session_dir)
            print(f"Saliency images saved to: {session_dir / 'saliency'} ({len(paths)} files)")
        return 0

    raise ValueError(f"Unknown command {args.command}")


def main(argv: Optional[List[str]] = None):
    """Main entry point."""
    args = parse_args(argv)

    try:
        code = run_command(args)
    except Exception as e:
        print(f"Error: {e}", file=sys.stderr)
        sys.exit(1)
    if code:
        sys.exit(code)


if __name__ == '__main__':
    main()
