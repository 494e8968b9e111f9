"""
The whole pipeline on generated data
====================================

Equivalent to running ``citeassess <stage> --config demos/synth_config.yaml``
for each stage in turn.  Outputs land in ``run/`` at the repository root.
"""
import json
from pathlib import Path

from citeassess.cli import main

config = str(Path(__file__).resolve().parent / "synth_config.yaml")

for stage in ("synth", "ingest", "resolve", "metrics", "sweep", "report"):
    print(f"--- {stage}")
    if main([stage, "--config", config]) != 0:
        raise SystemExit(f"{stage} failed")

out = Path(__file__).resolve().parent.parent / "run" / "out"
summary = json.loads((out / "summary.json").read_text())
print("sections:", summary["sections"])
print("significant:", summary["significant_metrics"])
