"""Compare BI-BBG against the five baselines on the desk scenario.

Writes per-run reports and summary.tsv under results/desk and prints the
percentage reduction of the BI-BBG mean total against each baseline.

    python3 scripts/desk_comparison.py [--seeds 0-19] [--config configs/desk.yaml]
"""
import argparse
import csv
from pathlib import Path

from hydrocharge.cli import main

ap = argparse.ArgumentParser()
ap.add_argument("--seeds", default="0-19")
ap.add_argument("--config", default=str(Path(__file__).resolve().parents[1] / "configs" / "desk.yaml"))
ap.add_argument("--out", default="results/desk")
args = ap.parse_args()

code = main(["run", "--config", args.config, "--seeds", args.seeds, "--out", args.out])
if code == 0:
    with open(Path(args.out) / "summary.tsv") as fh:
        rows = {r["strategy"]: float(r["total"]) for r in csv.DictReader(fh, delimiter="\t")}
    ref = rows.pop("BI-BBG")
    for name, total in rows.items():
        print(f"BI-BBG vs {name}: {100 * (total - ref) / total:+.2f}%")
raise SystemExit(code)
