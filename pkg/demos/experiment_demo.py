"""Two-arm experiment on synthetic data: same network, with and without CLAHE.

Takes about 25 seconds on one core.
Run: python3 demos/experiment_demo.py
"""
from dataclasses import replace
from pathlib import Path

from histoclahe.experiment import load_config, run_experiment

config = load_config(Path(__file__).resolve().parents[1] / "configs" / "benchmark.cfg")
result = run_experiment(replace(config, output_dir=None))
print(result.report.decode())
for arm, trace in result.loss_traces.items():
    print(arm, "loss first/last epoch:", round(trace[0], 4), round(trace[-1], 4))
