"""Sensitivity sweeps over pile count, battery capacity, EV speed and penalty.

Each axis writes results/sensitivity/<axis>/sweep_<axis>.tsv.

    python3 scripts/sensitivity.py [--seeds 0-4] [--strategies BI-BBG]
"""
import argparse

from hydrocharge.cli import main

SWEEPS = {
    "piles": "3,4,5,6,7,8",
    "battery": "50,60,75,90,100",
    "speed": "30,45,60,75,90",
    "penalty": "300,3000,30000",
}

ap = argparse.ArgumentParser()
ap.add_argument("--seeds", default="0-4")
ap.add_argument("--strategies", default="BI-BBG")
ap.add_argument("--config")
ap.add_argument("--out", default="results/sensitivity")
args = ap.parse_args()

status = 0
for axis, values in SWEEPS.items():
    argv = ["sweep", "--axis", axis, "--values", values, "--seeds", args.seeds,
            "--strategies", args.strategies, "--out", f"{args.out}/{axis}"]
    if args.config:
        argv += ["--config", args.config]
    status |= main(argv)
raise SystemExit(status)
