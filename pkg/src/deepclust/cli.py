"""Command-line surface: generate / train / evaluate / export / plot.

Exit codes are a stable contract for scripting: 0 success, 1 usage or
config error, 2 data error (missing or malformed files), 3 runtime failure.
"""

import os

if os.environ.get("DEEPCLUST_THREADS"):
    for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["DEEPCLUST_THREADS"])

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .cluster import kmeans, l2_normalize
from .checkpoint import CheckpointError, load_checkpoint
from .data.augment import AugmentConfig
from .data.generate import (
    PRESETS,
    DatasetConfig,
    class_counts,
    generate_dataset,
    load_dataset,
    save_dataset,
)
from .engine import EngineError, RunConfig, extract_features, run, write_assignments_csv
from .metrics import nmi, parse_metrics_csv, purity
from .nn.optim import SgdConfig
from .plotting import write_metric_charts

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2, 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


CONFIG_SCHEMA = {
    "dataset": {"preset": str, "size": int, "image_size": int, "noise_level": float, "seed": int},
    "augment": {"rotation_degrees": float, "scale_range": list, "aspect_range": list, "output_size": int},
    "network": {"architecture": str},
    "sgd": {"learning_rate": float, "momentum": float, "weight_decay": float},
    "run": {
        "epochs": int,
        "batch_size": int,
        "num_classes_hint": int,
        "oversegmentation_factor": int,
        "k": int,
        "seed": int,
        "checkpoint_every": int,
        "kmeans_max_iters": int,
        "kmeans_restarts": int,
        "write_assignments": bool,
    },
}

DEFAULT_CONFIG = {
    "dataset": {"preset": "balanced3", "size": 0, "image_size": 32, "noise_level": 0.05, "seed": 0},
    "augment": {"rotation_degrees": 15.0, "scale_range": [0.5, 1.0], "aspect_range": [0.75, 4.0 / 3.0], "output_size": 32},
    "network": {"architecture": "mini"},
    "sgd": {"learning_rate": 0.05, "momentum": 0.9, "weight_decay": 1e-5},
    "run": {
        "epochs": 200,
        "batch_size": 256,
        "num_classes_hint": 3,
        "oversegmentation_factor": 8,
        "k": 0,
        "seed": 0,
        "checkpoint_every": 0,
        "kmeans_max_iters": 20,
        "kmeans_restarts": 1,
        "write_assignments": False,
    },
}


def load_config_file(path):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"config file {path} is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise UsageError("config file must be a JSON object of sections")
    for section, values in doc.items():
        if section not in CONFIG_SCHEMA:
            raise UsageError(f"unknown config section '{section}'")
        if not isinstance(values, dict):
            raise UsageError(f"config section '{section}' must be an object")
        for key in values:
            if key not in CONFIG_SCHEMA[section]:
                raise UsageError(f"unknown config key '{section}.{key}'")
    return doc


def merged_config(file_cfg, overrides):
    """Defaults <- config file <- CLI flag overrides (flags win)."""
    cfg = json.loads(json.dumps(DEFAULT_CONFIG))
    for section, values in (file_cfg or {}).items():
        cfg[section].update(values)
    for (section, key), value in overrides.items():
        if value is not None:
            cfg[section][key] = value
    return cfg


def build_configs(cfg):
    aug = AugmentConfig(
        rotation_degrees=cfg["augment"]["rotation_degrees"],
        scale_range=tuple(cfg["augment"]["scale_range"]),
        aspect_range=tuple(cfg["augment"]["aspect_range"]),
        output_size=cfg["augment"]["output_size"],
    )
    r = cfg["run"]
    run_cfg = RunConfig(
        epochs=r["epochs"],
        batch_size=r["batch_size"],
        sgd=SgdConfig(**cfg["sgd"]),
        num_classes_hint=r["num_classes_hint"],
        oversegmentation_factor=r["oversegmentation_factor"],
        k=r["k"],
        seed=r["seed"],
        checkpoint_every=r["checkpoint_every"],
        architecture=cfg["network"]["architecture"],
        kmeans_max_iters=r["kmeans_max_iters"],
        kmeans_restarts=r["kmeans_restarts"],
    )
    return run_cfg, aug


def _say(args, message):
    if not args.quiet:
        print(message)


def _check_out_dir(path, force, sentinel=None):
    out = Path(path)
    if out.exists():
        occupied = any(out.iterdir()) if sentinel is None else (out / sentinel).exists()
        if occupied and not force:
            raise UsageError(f"output path {out} already has contents; pass --force to overwrite")


def _write_effective_config(cfg, out_dir):
    path = Path(out_dir) / "effective_config.json"
    path.write_text(json.dumps(cfg, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def cmd_generate(args):
    _check_out_dir(args.out, args.force)
    seed = 0 if args.seed is None else args.seed
    cfg = DatasetConfig(
        preset=args.preset,
        total=args.size,
        image_size=args.image_size,
        noise_level=args.noise_level,
        seed=seed,
    )
    records = generate_dataset(cfg)
    save_dataset(records, args.out)
    effective = json.loads(json.dumps(DEFAULT_CONFIG["dataset"]))
    effective.update(
        preset=args.preset, size=args.size, image_size=args.image_size,
        noise_level=args.noise_level, seed=seed,
    )
    _write_effective_config({"dataset": effective}, args.out)
    counts = class_counts(cfg)
    _say(args, f"wrote {len(records)} images to {args.out}")
    for cls, count in enumerate(counts):
        _say(args, f"  class {cls}: {count}")
    return EXIT_OK


def cmd_train(args):
    file_cfg = load_config_file(args.config) if args.config else {}
    overrides = {
        ("run", "epochs"): args.epochs,
        ("run", "batch_size"): args.batch_size,
        ("run", "num_classes_hint"): args.classes_hint,
        ("run", "oversegmentation_factor"): args.factor,
        ("run", "k"): args.k,
        ("run", "seed"): args.seed,
        ("run", "checkpoint_every"): args.checkpoint_every,
        ("run", "write_assignments"): True if args.write_assignments else None,
        ("sgd", "learning_rate"): args.learning_rate,
        ("sgd", "momentum"): args.momentum,
        ("sgd", "weight_decay"): args.weight_decay,
        ("network", "architecture"): args.architecture,
    }
    cfg = merged_config(file_cfg, overrides)
    try:
        run_cfg, aug = build_configs(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None

    if not (Path(args.data) / "labels.csv").is_file():
        raise DataError(f"no dataset at {args.data} (missing labels.csv)")
    if args.resume is None:
        _check_out_dir(args.out, args.force, sentinel="metrics.csv")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    _write_effective_config(cfg, args.out)

    state = run(
        run_cfg,
        args.data,
        args.out,
        aug=aug,
        write_assignments=cfg["run"]["write_assignments"],
        resume=args.resume,
        log=None if args.quiet else print,
    )
    last = state.metrics_log[-1] if state.metrics_log else None
    if last is not None and last.purity is not None:
        _say(args, f"done: {state.epoch} epochs, final purity {last.purity:.4f}")
    else:
        _say(args, f"done: {state.epoch} epochs")
    return EXIT_OK


def _cluster_checkpoint(args):
    if not Path(args.checkpoint).is_file():
        raise DataError(f"checkpoint not found: {args.checkpoint}")
    try:
        net, epoch, _, _ = load_checkpoint(args.checkpoint)
    except CheckpointError as exc:
        raise DataError(str(exc)) from None
    records = load_dataset(args.data)
    if net.num_classes > len(records):
        raise DataError(
            f"checkpoint expects k={net.num_classes} clusters but dataset has only {len(records)} images"
        )
    seed = 0 if args.seed is None else args.seed
    aug = AugmentConfig()
    feats = extract_features(net, records, aug, seed, epoch)
    result = kmeans(l2_normalize(feats), net.num_classes, seed=seed)
    return records, result


def cmd_evaluate(args):
    records, result = _cluster_checkpoint(args)
    truth = np.array([r.truth_class for r in records])
    score_nmi = nmi(result.assignments, truth)
    score_purity = purity(result.assignments, truth)
    out = args.out or str(Path(args.checkpoint).parent / "assignments_eval.csv")
    write_assignments_csv(out, records, result.assignments)
    print(f"nmi_labels={score_nmi:.6f}")
    print(f"purity={score_purity:.6f}")
    _say(args, f"assignments written to {out}")
    return EXIT_OK


def cmd_export(args):
    records, result = _cluster_checkpoint(args)
    write_assignments_csv(args.out, records, result.assignments)
    _say(args, f"assignments written to {args.out}")
    return EXIT_OK


def cmd_plot(args):
    if not Path(args.metrics).is_file():
        raise DataError(f"metrics file not found: {args.metrics}")
    try:
        rows = parse_metrics_csv(args.metrics)
    except ValueError as exc:
        raise DataError(f"{args.metrics}: {exc}") from None
    if not rows:
        raise DataError(f"{args.metrics}: no metric rows")
    written = write_metric_charts(rows, args.out)
    for path in written:
        _say(args, f"wrote {path}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master random seed (default 0)")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")

    parser = _Parser(prog="deepclust", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", parents=[common], help="write a synthetic dataset directory")
    p.add_argument("--preset", choices=[x for x in PRESETS if x != "custom"], default="balanced3")
    p.add_argument("--out", required=True)
    p.add_argument("--size", type=int, default=0, help="total image count (0 = preset default)")
    p.add_argument("--image-size", type=int, default=32)
    p.add_argument("--noise-level", type=float, default=0.05)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", parents=[common], help="run the alternating optimization")
    p.add_argument("--data", required=True, help="dataset directory (images/ + labels.csv)")
    p.add_argument("--out", required=True, help="output directory for logs and checkpoints")
    p.add_argument("--config", help="JSON config file; flags override file values")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", "--lr", type=float, dest="learning_rate")
    p.add_argument("--momentum", type=float)
    p.add_argument("--weight-decay", type=float)
    p.add_argument("--classes-hint", type=int)
    p.add_argument("--factor", type=int, help="clusters per estimated class")
    p.add_argument("--k", type=int, help="explicit cluster count (overrides the hint)")
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--architecture", choices=["mini", "vgg16bn"])
    p.add_argument("--write-assignments", action="store_true")
    p.add_argument("--resume", help="checkpoint file to continue from")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="score a checkpoint against a labelled dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="assignments CSV path (default: next to the checkpoint)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("export", parents=[common], help="write cluster assignments for a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="assignments CSV path")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("plot", parents=[common], help="render SVG charts from a metrics CSV")
    p.add_argument("--metrics", required=True)
    p.add_argument("--out", required=True, help="directory for the SVG files")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (EngineError, CheckpointError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
