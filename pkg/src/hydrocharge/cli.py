"""Command line entry point: ``hydrocharge run|sweep|convergence|verify``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, ScenarioConfig, load_config, with_overrides
from .horizon import BIBBG, STRATEGIES, generate_scenario, run_horizon, write_report

AXES = {
    "piles": ("stations", "piles", int),
    "battery": ("fleet", "capacity", float),
    "speed": ("fleet", "speed", float),
    "penalty": ("costs", "penalty", float),
}

SUMMARY_COLUMNS = (
    "charge", "wait", "idle", "depreciation", "penalty", "uncharged", "fcs_maint", "hps_maint",
    "delivery", "total",
)


class UsageError(Exception):
    pass


def parse_seeds(text: str) -> list:
    seeds = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if "-" in part[1:]:
                a, b = part.split("-", 1)
                lo, hi = int(a), int(b)
                if hi < lo:
                    raise ValueError
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
        except ValueError:
            raise UsageError(f"bad seed list {text!r}; use e.g. 0-19 or 1,2,5") from None
    if not seeds:
        raise UsageError("empty seed list")
    return seeds


def parse_strategies(text: str) -> list:
    names = [s.strip() for s in text.split(",") if s.strip()]
    unknown = [s for s in names if s not in STRATEGIES]
    if unknown or not names:
        raise UsageError(
            f"unknown strategy {', '.join(unknown) or '(none)'}; choose from {', '.join(STRATEGIES)}"
        )
    return names


def parse_values(text: str, cast) -> list:
    try:
        values = [cast(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad value list {text!r}") from None
    if not values or any(v <= 0 for v in values):
        raise UsageError("sweep values must be positive")
    return values


def _config(args) -> ScenarioConfig:
    cfg = load_config(args.config)
    if getattr(args, "random_init", False):
        cfg = with_overrides(cfg, solver={"init": "random"})
    return cfg


def summary_table(reports: dict) -> str:
    """Table with one row per strategy: category means over seeds plus the
    standard deviation of the total."""
    header = ["strategy"] + list(SUMMARY_COLUMNS) + ["std", "service_rate", "seeds"]
    lines = ["\t".join(header)]
    for name, runs in reports.items():
        sums = [r.summary() for r in runs]
        row = [name]
        for col in SUMMARY_COLUMNS:
            row.append(f"{np.mean([s[col] for s in sums]):.2f}")
        totals = [s["total"] for s in sums]
        row.append(f"{np.std(totals, ddof=1) if len(totals) > 1 else 0.0:.2f}")
        row.append(f"{np.mean([s['service_rate'] for s in sums]):.4f}")
        row.append(str(len(runs)))
        lines.append("\t".join(row))
    return "\n".join(lines) + "\n"


def _run_grid(cfg, seeds, strategies, out: Path) -> dict:
    reports = {name: [] for name in strategies}
    for seed in seeds:
        sc = generate_scenario(cfg, seed)
        for name in strategies:
            rep = run_horizon(sc, name, seed)
            write_report(rep, out, cfg)
            reports[name].append(rep)
    return reports


def cmd_run(args) -> int:
    cfg = _config(args)
    seeds, strategies = parse_seeds(args.seeds), parse_strategies(args.strategies)
    out = Path(args.out)
    reports = _run_grid(cfg, seeds, strategies, out)
    table = summary_table(reports)
    (out / "summary.tsv").write_text(table)
    print(table, end="")
    return 0


def cmd_sweep(args) -> int:
    if not args.axis:
        raise UsageError("sweep needs --axis")
    section, name, cast = AXES[args.axis]
    if not args.values:
        raise UsageError("sweep needs --values")
    values = parse_values(args.values, cast)
    base = _config(args)
    seeds, strategies = parse_seeds(args.seeds), parse_strategies(args.strategies)
    out = Path(args.out)
    rows = ["\t".join(["value", "strategy"] + list(SUMMARY_COLUMNS) + ["service_rate"])]
    for v in values:
        cfg = with_overrides(base, **{section: {name: v}})
        reports = _run_grid(cfg, seeds, strategies, out / f"{args.axis}={v}")
        for strat, runs in reports.items():
            sums = [r.summary() for r in runs]
            cells = [f"{np.mean([s[c] for s in sums]):.4f}" for c in SUMMARY_COLUMNS]
            rate = f"{np.mean([s['service_rate'] for s in sums]):.4f}"
            rows.append("\t".join([str(v), strat] + cells + [rate]))
    table = "\n".join(rows) + "\n"
    out.mkdir(parents=True, exist_ok=True)
    (out / f"sweep_{args.axis}.tsv").write_text(table)
    print(table, end="")
    return 0


def cmd_convergence(args) -> int:
    from .oracle import check_monotone_trace

    cfg = _config(args)
    seeds = parse_seeds(args.seeds)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace_lines = ["seed\tstep\titeration\tJ_matching\tJ_dispatch"]
    timing_lines = ["seed\tstep\tseconds"]
    iterations, seconds, failures = [], [], 0
    for seed in seeds:
        rep = run_horizon(generate_scenario(cfg, seed), BIBBG, seed)
        for s in rep.steps:
            trace_lines.append(f"{seed}\t{s.t}\t0\t{s.initial_J:.6f}\t{s.initial_J:.6f}")
            for it, j1, j2 in s.trace:
                trace_lines.append(f"{seed}\t{s.t}\t{it}\t{j1:.6f}\t{j2:.6f}")
            seq = [s.initial_J] + [x for _, j1, j2 in s.trace for x in (j1, j2)]
            if not check_monotone_trace(seq):
                failures += 1
            iterations.append(s.iterations)
            seconds.append(s.seconds)
            timing_lines.append(f"{seed}\t{s.t}\t{s.seconds:.6f}")
    (out / "traces.tsv").write_text("\n".join(trace_lines) + "\n")
    (out / "timing.tsv").write_text("\n".join(timing_lines) + "\n")
    stats = (
        f"steps\t{len(iterations)}\nmean_iterations\t{np.mean(iterations):.4f}\n"
        f"max_iterations\t{max(iterations)}\nnonmonotone_traces\t{failures}\n"
    )
    (out / "convergence.tsv").write_text(stats)
    print(stats, end="")
    print(f"mean_step_seconds\t{np.mean(seconds):.4f}\nmax_step_seconds\t{max(seconds):.4f}")
    return 0 if failures == 0 else 1


def cmd_verify(args) -> int:
    from .bilevel import optimize_step
    from .matching import build_graph, graph_to_text
    from .ev_cost import station_prices
    from .oracle import check_monotone_trace, check_cardinality_dominance, enumerate_joint_optimum, random_instance
    from .textio import problem_to_text

    out = Path(args.out)
    failures = {"optimum": 0, "cardinality": 0, "monotone": 0}
    seed = parse_seeds(args.seeds)[0]
    rng = np.random.default_rng(seed)
    init_rng = np.random.default_rng([seed, 1])
    init = "random" if args.random_init else "vertices"
    for n in range(args.instances):
        p = random_instance(rng)
        opt = enumerate_joint_optimum(p)
        sol = optimize_step(p, init=init, rng=init_rng)
        bad = []
        if abs(sol.J - opt.J) > 1e-6:
            failures["optimum"] += 1
            bad.append(f"optimum: solver {sol.J:.9f} vs oracle {opt.J:.9f}")
        if not check_monotone_trace(sol.trace, lower_bound=opt.J):
            failures["monotone"] += 1
            bad.append("monotone")
        v = check_cardinality_dominance(p)
        if not v:
            failures["cardinality"] += 1
            bad.append(f"cardinality: {v.message}")
        if bad:
            out.mkdir(parents=True, exist_ok=True)
            graph = build_graph(p, station_prices(p, opt.H))
            text = "".join(f"# {b}\n" for b in bad) + problem_to_text(p) + graph_to_text(graph)
            (out / f"witness_{n:04d}.txt").write_text(text)
    for k, v in failures.items():
        print(f"{k}\t{'PASS' if v == 0 else 'FAIL'}\t{v}/{args.instances} instances failed")
    return 0 if not any(failures.values()) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hydrocharge", description=__doc__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p, strategies=True):
        p.add_argument("--config", help="scenario YAML; defaults apply when omitted")
        p.add_argument("--seeds", default="0", help="seed list, e.g. 0-19 or 1,4,7")
        if strategies:
            p.add_argument("--strategies", default=",".join(STRATEGIES))
        p.add_argument("--out", default="results")
        p.add_argument("--random-init", action="store_true", help="start the bi-level loop from a random pair")

    common(sub.add_parser("run", help="simulate strategies over seeds"))
    sw = sub.add_parser("sweep", help="re-run the comparison for each value of one parameter")
    common(sw)
    sw.add_argument("--axis", choices=sorted(AXES))
    sw.add_argument("--values", help="comma separated values")
    common(sub.add_parser("convergence", help="iteration traces of the bi-level solver"), strategies=False)
    vf = sub.add_parser("verify", help="oracle checks on random small instances")
    common(vf, strategies=False)
    vf.add_argument("--instances", type=int, default=500)
    return ap


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "convergence": cmd_convergence, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.verb](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"hydrocharge: error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, OSError) as exc:
        print(f"hydrocharge: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
