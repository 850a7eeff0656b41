"""Iteration traces and step timing of the bi-level solver, then the oracle
checks on small random instances (vertex seeding and random starts).

    python3 scripts/convergence_study.py [--seeds 0-19] [--instances 500]
"""
import argparse

from hydrocharge.cli import main

ap = argparse.ArgumentParser()
ap.add_argument("--seeds", default="0-19")
ap.add_argument("--instances", default="500")
ap.add_argument("--config")
ap.add_argument("--out", default="results/convergence")
args = ap.parse_args()

cfg = ["--config", args.config] if args.config else []
status = main(["convergence", "--seeds", args.seeds, "--out", args.out] + cfg)
for extra, sub in (([], "verify"), (["--random-init"], "verify_random")):
    print(f"# {sub}")
    status |= main(["verify", "--instances", args.instances, "--out", f"{args.out}/{sub}"] + extra)
raise SystemExit(status)
