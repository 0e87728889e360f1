"""Confusion-matrix tallying, the five binary scores, and CSV/JSON reports."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, Sequence

__all__ = [
    "ConfusionMatrix",
    "MetricsRow",
    "tally_confusion",
    "compute_metrics",
    "format_csv",
    "format_json",
    "write_report",
    "read_report",
    "REPORT_FIELDS",
]

SCORE_FIELDS = ("accuracy", "sensitivity", "specificity", "precision", "f1")
REPORT_FIELDS = ("name", "tp", "tn", "fp", "fn") + SCORE_FIELDS


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    def __post_init__(self):
        for field in ("tp", "tn", "fp", "fn"):
            if getattr(self, field) < 0:
                raise ValueError(f"{field} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


@dataclass(frozen=True)
class MetricsRow:
    accuracy: float
    sensitivity: float
    specificity: float
    precision: float
    f1: float


def tally_confusion(predictions: Sequence, truths: Sequence, positive=1) -> ConfusionMatrix:
    predictions, truths = list(predictions), list(truths)
    if len(predictions) != len(truths):
        raise ValueError(f"length mismatch: {len(predictions)} predictions vs {len(truths)} truths")
    if not predictions:
        raise ValueError("cannot tally an empty label sequence")
    tp = tn = fp = fn = 0
    for p, t in zip(predictions, truths):
        if p == positive:
            if t == positive:
                tp += 1
            else:
                fp += 1
        elif t == positive:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, tn, fp, fn)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def compute_metrics(cm: ConfusionMatrix) -> MetricsRow:
    """Accuracy, sensitivity, specificity, precision and F1.

    Any score with a zero denominator is reported as 0.
    """
    if cm.total < 1:
        raise ValueError("confusion matrix is empty")
    sensitivity = _ratio(cm.tp, cm.tp + cm.fn)
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    f1 = 2 * precision * sensitivity / (precision + sensitivity) if precision + sensitivity else 0.0
    return MetricsRow(
        accuracy=_ratio(cm.tp + cm.tn, cm.total),
        sensitivity=sensitivity,
        specificity=_ratio(cm.tn, cm.tn + cm.fp),
        precision=precision,
        f1=f1,
    )


def _records(rows: Mapping[str, ConfusionMatrix]) -> list[dict]:
    if not rows:
        raise ValueError("report needs at least one row")
    records = []
    for name, cm in rows.items():
        scores = compute_metrics(cm)
        records.append({"name": name, **asdict(cm), **{k: round(v, 6) for k, v in asdict(scores).items()}})
    return records


def format_csv(rows: Mapping[str, ConfusionMatrix]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_FIELDS)
    for rec in _records(rows):
        writer.writerow(
            [rec["name"], rec["tp"], rec["tn"], rec["fp"], rec["fn"]]
            + [f"{rec[k]:.6f}" for k in SCORE_FIELDS]
        )
    return buf.getvalue().encode("utf-8")


def format_json(rows: Mapping[str, ConfusionMatrix]) -> bytes:
    return (json.dumps({"rows": _records(rows)}, indent=2) + "\n").encode("utf-8")


def write_report(rows: Mapping[str, ConfusionMatrix], destination=None) -> bytes:
    """Render the report as CSV and return its bytes.

    When ``destination`` is given, the CSV is written there with a ``.csv``
    suffix and the JSON twin next to it with a ``.json`` suffix.
    """
    data = format_csv(rows)
    if destination is not None:
        dest = Path(destination)
        dest.parent.mkdir(parents=True, exist_ok=True)
        dest.with_suffix(".csv").write_bytes(data)
        dest.with_suffix(".json").write_bytes(format_json(rows))
    return data


def read_report(path) -> dict[str, ConfusionMatrix]:
    """Read the confusion counts back from a CSV report."""
    rows: dict[str, ConfusionMatrix] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(REPORT_FIELDS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing report columns {sorted(missing)}")
        for rec in reader:
            if rec["name"] in rows:
                raise ValueError(f"{path}: duplicate row name {rec['name']!r}")
            rows[rec["name"]] = ConfusionMatrix(*(int(rec[k]) for k in ("tp", "tn", "fp", "fn")))
    return rows
