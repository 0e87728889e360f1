"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training divergence.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .clahe import ClaheParams, clahe, parse_clip, parse_tiles
from .cnn.network import ModelFileError, load_params, save_params, tiny_vgg
from .cnn.train import TrainConfig, TrainingDivergence, evaluate_classifier, train_classifier
from .dataset import (
    IMAGE_SUFFIXES,
    DatasetError,
    SynthParams,
    generate_synthetic_dataset,
    ingest_directory,
    preprocess_batch,
    split_dataset,
    to_arrays,
    write_dataset,
)
from .experiment import ConfigError, load_config, run_experiment, write_loss_trace
from .histogram_eq import compute_histogram
from .metrics import read_report, write_report
from .raster_io import ImageFormatError, read_gray, write_image

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DIVERGED = 0, 1, 2, 3

log = logging.getLogger("histoclahe")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _clahe_args(p: argparse.ArgumentParser, default_tiles: str = "8x8") -> None:
    p.add_argument("--tiles", default=default_tiles, help="tile grid as GXxGY (default %(default)s)")
    p.add_argument("--clip", default="2.0", help="clip factor, or 'none' for plain AHE (default %(default)s)")


def _clahe_params(args) -> ClaheParams:
    try:
        gx, gy = parse_tiles(args.tiles)
        return ClaheParams(gx, gy, parse_clip(args.clip))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _on_off(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def cmd_enhance(args) -> int:
    params = _clahe_params(args)
    src, dst = Path(args.input), Path(args.output)
    if not src.is_dir():
        raise DatasetError(f"input directory {src} does not exist")
    files = sorted(p for p in src.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    if not files:
        raise DatasetError(f"no images found under {src}")
    for path in files:
        rel = path.relative_to(src)
        if rel.suffix.lower() != ".png":
            rel = rel.with_suffix(".pgm")
        raster = read_gray(path)
        dest = dst / rel
        dest.parent.mkdir(parents=True, exist_ok=True)
        write_image(dest, clahe(raster, params, workers=args.workers))
        if args.dump_histograms:
            hdir = Path(args.dump_histograms) / rel.parent
            hdir.mkdir(parents=True, exist_ok=True)
            hist = compute_histogram(raster)
            rows = ["bin,count"] + [f"{v},{c}" for v, c in enumerate(hist)]
            (hdir / f"{rel.stem}.hist.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
        log.info("enhanced %s", rel)
    print(f"enhanced {len(files)} images into {dst}")
    return EXIT_OK


def cmd_synth(args) -> int:
    params = SynthParams(per_class=args.per_class, size=args.size, gap=args.gap, noise=args.noise)
    manifest = generate_synthetic_dataset(params, args.seed)
    write_dataset(manifest, args.out)
    print(f"wrote {len(manifest)} images to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    params = _clahe_params(args) if args.clahe else None
    manifest = split_dataset(ingest_directory(args.data), args.split, args.seed)
    prepared = preprocess_batch(manifest, params)
    x_train, y_train = to_arrays(prepared.subset("train"))
    x_eval, y_eval = to_arrays(prepared.subset("eval"))
    spec = tiny_vgg(seed=args.seed)
    hyper = TrainConfig(lr=args.lr, epochs=args.epochs, batch_size=args.batch_size, seed=args.seed)
    arm = "clahe" if args.clahe else "no_clahe"
    try:
        result = train_classifier(spec, x_train, y_train, hyper)
    except TrainingDivergence as exc:
        raise TrainingDivergence(exc.epoch, exc.loss, arm=arm) from exc
    _, cm = evaluate_classifier(result.network, x_eval, y_eval)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_params(out / "model.bin", result.network)
    write_loss_trace(out / "loss.csv", result.loss_trace)
    lines = ["name,label,split"] + [f"{s.name},{s.label},{s.split}" for s in manifest.samples]
    (out / "split.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    sys.stdout.write(write_report({arm: cm}, out / "metrics.csv").decode())
    return EXIT_OK


def cmd_eval(args) -> int:
    spec = tiny_vgg()
    network = load_params(args.model, spec)
    manifest = ingest_directory(args.data)
    if args.clahe:
        manifest = preprocess_batch(manifest, _clahe_params(args))
    x, y = to_arrays(manifest.samples, spec.input_shape[-1])
    _, cm = evaluate_classifier(network, x, y)
    name = args.name or Path(args.model).stem
    sys.stdout.write(write_report({name: cm}, args.report).decode())
    return EXIT_OK


def cmd_report(args) -> int:
    merged = {}
    for path in args.inputs:
        for name, cm in read_report(path).items():
            if name in merged:
                raise DatasetError(f"row {name!r} appears in more than one input")
            merged[name] = cm
    sys.stdout.write(write_report(merged, args.out).decode())
    return EXIT_OK


def cmd_experiment(args) -> int:
    config = load_config(args.config)
    if args.output_dir:
        config = replace(config, output_dir=Path(args.output_dir))
    result = run_experiment(config)
    sys.stdout.write(result.report.decode())
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="histoclahe", description="CLAHE preprocessing and TinyVGG classification experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("enhance", help="apply CLAHE to every image in a directory")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    _clahe_args(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dump-histograms", metavar="DIR", help="write each input histogram as bin,count CSV")
    p.set_defaults(func=cmd_enhance)

    p = sub.add_parser("synth", help="generate the synthetic two-class dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--per-class", type=int, default=100)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--gap", type=float, default=30.0)
    p.add_argument("--noise", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train TinyVGG on a healthy/ diseased/ directory")
    p.add_argument("--data", required=True)
    p.add_argument("--clahe", type=_on_off, default=False, metavar="on|off")
    _clahe_args(p, default_tiles="2x2")
    p.add_argument("--split", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a saved model on a directory")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--name", help="row name in the report (default: model file stem)")
    p.add_argument("--clahe", type=_on_off, default=False, metavar="on|off")
    _clahe_args(p, default_tiles="2x2")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="merge metrics CSV files")
    p.add_argument("--inputs", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("experiment", help="run the with/without CLAHE comparison")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", help="override output_dir from the config")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"histoclahe: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDivergence as exc:
        print(f"histoclahe: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (DatasetError, ImageFormatError, ModelFileError, ConfigError, OSError) as exc:
        print(f"histoclahe: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
