"""Two-arm experiment: the same TinyVGG trained on raw and on CLAHE-enhanced images."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

from .clahe import ClaheParams, parse_clip, parse_tiles
from .cnn.network import save_params, tiny_vgg
from .cnn.train import TrainConfig, TrainingDivergence, evaluate_classifier, train_classifier
from .dataset import (
    DatasetManifest,
    SynthParams,
    generate_synthetic_dataset,
    ingest_directory,
    preprocess_batch,
    split_dataset,
    to_arrays,
)
from .metrics import ConfusionMatrix, write_report

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "parse_config",
    "load_config",
    "arm_settings",
    "run_experiment",
    "write_loss_trace",
    "settings_digest",
    "ARMS",
]

log = logging.getLogger(__name__)

ARMS = ("no_clahe", "clahe")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines an experiment run.

    ``data_dir`` selects directory ingestion; when it is ``None`` the
    synthetic generator is used with ``synth`` and ``seed``.
    """

    data_dir: Path | None = None
    synth: SynthParams = field(default_factory=SynthParams)
    clahe: ClaheParams = field(default_factory=lambda: ClaheParams(2, 2, 2.0))
    split: float = 0.8
    train: TrainConfig = field(default_factory=TrainConfig)
    input_size: int = 32
    seed: int = 7
    output_dir: Path | None = None

    def __post_init__(self):
        if not 0 < self.split < 1:
            raise ConfigError(f"split ratio must lie in (0, 1), got {self.split}")
        if self.input_size % 4 or self.input_size < 12:
            raise ConfigError("input size must be a multiple of 4 and at least 12")


_KEYS = {
    "seed", "output_dir",
    "dataset.source", "dataset.per_class", "dataset.size", "dataset.gap", "dataset.noise",
    "clahe.tiles", "clahe.clip",
    "train.split", "train.epochs", "train.lr", "train.batch_size", "train.input_size",
}


def parse_config(text: str, base_dir=None) -> ExperimentConfig:
    """Parse the flat ``key = value`` config format (``#`` starts a comment).

    Relative paths are resolved against ``base_dir`` when given.
    """
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value

    def path(value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() or base_dir is None else Path(base_dir) / p

    try:
        seed = int(values.get("seed", 7))
        source = values.get("dataset.source", "synthetic")
        synth = SynthParams(
            per_class=int(values.get("dataset.per_class", 100)),
            size=int(values.get("dataset.size", 64)),
            gap=float(values.get("dataset.gap", 30)),
            noise=float(values.get("dataset.noise", 4)),
        )
        gx, gy = parse_tiles(values.get("clahe.tiles", "2x2"))
        params = ClaheParams(gx, gy, parse_clip(values.get("clahe.clip", "2.0")))
        train = TrainConfig(
            lr=float(values.get("train.lr", 0.05)),
            epochs=int(values.get("train.epochs", 30)),
            batch_size=int(values.get("train.batch_size", 16)),
            seed=seed,
        )
        return ExperimentConfig(
            data_dir=None if source == "synthetic" else path(source),
            synth=synth,
            clahe=params,
            split=float(values.get("train.split", 0.8)),
            train=train,
            input_size=int(values.get("train.input_size", 32)),
            seed=seed,
            output_dir=path(values["output_dir"]) if "output_dir" in values else None,
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(encoding="utf-8"), base_dir=path.parent)


def arm_settings(config: ExperimentConfig, arm: str) -> dict:
    """The complete set of inputs an arm runs with; arms differ only in ``clahe``."""
    if arm not in ARMS:
        raise ValueError(f"unknown arm {arm!r}")
    return {
        "data": str(config.data_dir) if config.data_dir else {"synthetic": vars(config.synth), "seed": config.seed},
        "split": config.split,
        "split_seed": config.seed,
        "network": tiny_vgg(seed=config.seed, input_size=config.input_size).fingerprint().hex(),
        "init_seed": config.seed,
        "train": vars(config.train),
        "input_size": config.input_size,
        "clahe": vars(config.clahe) if arm == "clahe" else None,
    }


def settings_digest(settings: dict) -> str:
    return hashlib.sha256(json.dumps(settings, sort_keys=True, default=str).encode()).hexdigest()


@dataclass
class ExperimentResult:
    rows: dict[str, ConfusionMatrix]
    loss_traces: dict[str, list[float]]
    report: bytes
    eval_size: int
    manifest: DatasetManifest


def write_loss_trace(path, trace) -> None:
    lines = ["epoch,loss"] + [f"{i},{loss:.12g}" for i, loss in enumerate(trace)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _load_manifest(config: ExperimentConfig) -> DatasetManifest:
    if config.data_dir is not None:
        return ingest_directory(config.data_dir)
    return generate_synthetic_dataset(config.synth, config.seed)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Train and evaluate both arms on one shared split and report their metrics."""
    manifest = split_dataset(_load_manifest(config), config.split, config.seed)
    out = Path(config.output_dir) if config.output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        lines = ["name,label,split"] + [f"{s.name},{s.label},{s.split}" for s in manifest.samples]
        (out / "split.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    rows: dict[str, ConfusionMatrix] = {}
    traces: dict[str, list[float]] = {}
    eval_size = len(manifest.subset("eval"))
    for arm in ARMS:
        params = config.clahe if arm == "clahe" else None
        image_dir = out / f"images_{arm}" if out is not None and params is not None else None
        prepared = preprocess_batch(manifest, params, image_dir)
        x_train, y_train = to_arrays(prepared.subset("train"), config.input_size)
        x_eval, y_eval = to_arrays(prepared.subset("eval"), config.input_size)
        spec = tiny_vgg(seed=config.seed, input_size=config.input_size)
        hyper = replace(config.train, seed=config.seed)
        log.info("arm %s: training on %d images", arm, len(y_train))
        try:
            result = train_classifier(spec, x_train, y_train, hyper)
        except TrainingDivergence as exc:
            raise TrainingDivergence(exc.epoch, exc.loss, arm=arm) from exc
        _, cm = evaluate_classifier(result.network, x_eval, y_eval)
        rows[arm] = cm
        traces[arm] = result.loss_trace
        if out is not None:
            write_loss_trace(out / f"loss_{arm}.csv", result.loss_trace)
            save_params(out / f"model_{arm}.bin", result.network)

    report = write_report(rows, out / "metrics.csv" if out is not None else None)
    return ExperimentResult(rows, traces, report, eval_size, manifest)
