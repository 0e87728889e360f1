"""Confusion-matrix metrics for two classifier runs.

Run: python3 demos/metrics_demo.py
"""
from histoclahe import ConfusionMatrix, compute_metrics, write_report

rows = {
    "no_clahe": ConfusionMatrix(tp=40, tn=44, fp=4, fn=2),
    "clahe": ConfusionMatrix(tp=90, tn=90, fp=1, fn=2),
}
for name, cm in rows.items():
    m = compute_metrics(cm)
    print(f"{name:9s} acc={m.accuracy:.4f} sens={m.sensitivity:.4f} spec={m.specificity:.4f} "
          f"prec={m.precision:.4f} f1={m.f1:.4f}")

# the report is CSV bytes; pass a path to also write a .json sibling
print(write_report(rows).decode())

# empty denominators collapse to 0 rather than NaN
print(compute_metrics(ConfusionMatrix(0, 5, 0, 0)))
