"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The desk-scale batch (default config, seeds 0-19, every strategy plus the
frozen per-step comparison) runs once per module and feeds criteria 3, 4, 6
and 8. Constraint checks run inside every step of every run.
"""
import time

import numpy as np
import pytest

from hydrocharge.bilevel import optimize_step
from hydrocharge.config import ScenarioConfig, with_overrides
from hydrocharge.ev_cost import check_assignment, check_dispatch
from hydrocharge.horizon import (
    BASELINES,
    BIBBG,
    STRATEGIES,
    frozen_comparison,
    generate_scenario,
    report_json,
    report_tsv,
    run_horizon,
)
from hydrocharge.matching import gamma_bound
from hydrocharge.oracle import (
    check_monotone_trace,
    check_cardinality_dominance,
    enumerate_joint_optimum,
    random_instance,
)
from hydrocharge.renewables import (
    HpsState,
    PvParams,
    WindParams,
    hydrogen_from_available,
    hydrogen_power,
    pv_power,
    wind_power,
)

pytestmark = pytest.mark.slow

DESK_SEEDS = range(20)
SWEEP_SEEDS = range(5)
ORACLE_INSTANCES = 500
TOL = 1e-6


class ComplianceLog:
    """on_step hook: structural and LP-tolerance checks on every step."""

    def __init__(self):
        self.steps = 0

    def __call__(self, eng, world, rec):
        p = world.problem
        served, H = rec.decision
        slot = {rid: (i, kind) for rid, i, kind in served}
        G = tuple(slot.get(ev.rid) for ev in world.events)
        check_assignment(p, G)
        check_dispatch(p, H, tol=1e-9)
        for f in eng.fcs:
            f.check()
        self.steps += 1


@pytest.fixture(scope="module")
def desk():
    cfg = ScenarioConfig()
    log = ComplianceLog()
    reports = {name: [] for name in STRATEGIES}
    frozen = []
    start = time.perf_counter()
    for seed in DESK_SEEDS:
        sc = generate_scenario(cfg, seed)
        comp = frozen_comparison(sc, STRATEGIES, seed, on_step=log, keep_decisions=True)
        frozen.append(comp)
        reports[BIBBG].append(comp.report)
        for name in BASELINES:
            reports[name].append(run_horizon(sc, name, seed, keep_decisions=True, on_step=log))
    return {"reports": reports, "frozen": frozen, "log": log, "seconds": time.perf_counter() - start}


def test_c1_oracle_equivalence(criterion):
    rng = np.random.default_rng(2024)
    worst, misses = 0.0, 0
    start = time.perf_counter()
    for _ in range(ORACLE_INSTANCES):
        p = random_instance(rng)
        gap = abs(optimize_step(p).J - enumerate_joint_optimum(p).J)
        worst = max(worst, gap)
        misses += gap > TOL
    ok = misses == 0
    criterion(
        1, ok,
        f"{misses}/{ORACLE_INSTANCES} instances off the enumerated optimum, max gap {worst:.2e} CNY,"
        f" {time.perf_counter() - start:.0f} s",
    )
    assert ok


@pytest.mark.xfail(
    strict=True,
    reason="at gamma equal to the bound, serving nobody and serving one EV can tie exactly",
)
def test_c2_cardinality_property(criterion):
    rng = np.random.default_rng(7)
    fails, ties, vacuous = 0, 0, 0
    for _ in range(ORACLE_INSTANCES):
        p = random_instance(rng)
        v = check_cardinality_dominance(p)
        vacuous += v.message == "vacuous"
        if not v:
            fails += 1
            # a failure that disappears for any penalty above the bound is a tie at the bound
            ties += bool(check_cardinality_dominance(p, gamma=gamma_bound(p) + 1e-6))
    # undersized penalty: one request, one free pile, serving costs more than the penalty
    control = random_instance(np.random.default_rng(3), max_requests=1, max_fcs=1, max_hps=0)
    while control.n_requests == 0 or not control.reach.any() or not control.stations[0].available:
        control = random_instance(np.random.default_rng(int(rng.integers(1 << 30))), 1, 1, 0)
    broken = not check_cardinality_dominance(control, gamma=0.01 * gamma_bound(control))
    ok = fails == 0 and broken
    criterion(
        2, ok,
        f"strict property at gamma = bound failed on {fails}/{ORACLE_INSTANCES} instances"
        f" ({vacuous} vacuous); {ties}/{fails} of the failures are exact ties that vanish at"
        f" bound + 1e-6; undersized-gamma control {'breaks' if broken else 'does not break'} the property",
    )
    assert ok


def test_c3_monotone_traces_desk(desk, criterion):
    traces, bad = 0, []
    for rep in desk["reports"][BIBBG]:
        for s in rep.steps:
            seq = [s.initial_J] + [x for _, j1, j2 in s.trace for x in (j1, j2)]
            traces += 1
            if not check_monotone_trace(seq, tol=TOL):
                bad.append((rep.seed, s.t))
    ok = not bad and traces == len(DESK_SEEDS) * ScenarioConfig().T
    criterion("3a", ok, f"{traces - len(bad)}/{traces} desk traces nonincreasing within {TOL:g}")
    assert ok, bad[:5]


@pytest.mark.xfail(
    strict=True,
    reason="the plain alternation can stop at a coordinate-wise optimum that depends on the start",
)
def test_c3_random_init_agreement(criterion):
    rng = np.random.default_rng(11)
    instances, runs = 100, 20
    disagree, above_opt = 0, 0
    for n in range(instances):
        p = random_instance(rng)
        opt = enumerate_joint_optimum(p).J
        finals = []
        for r in range(runs):
            sol = optimize_step(p, init="random", rng=np.random.default_rng([n, r]))
            assert check_monotone_trace(sol.trace, lower_bound=opt, tol=TOL)
            finals.append(sol.J)
        disagree += max(finals) - min(finals) > TOL
        above_opt += sum(j > opt + TOL for j in finals)
    ok = disagree == 0
    criterion(
        "3b", ok,
        f"random starts reach different final J on {disagree}/{instances} instances;"
        f" {above_opt}/{instances * runs} runs stop above the enumerated optimum",
    )
    assert ok


def test_c4_dominance(desk, criterion):
    violations = [(comp.report.seed,) + v for comp in desk["frozen"] for v in comp.violations(TOL)]
    steps = sum(comp.J.shape[0] for comp in desk["frozen"])
    means = {name: np.mean([r.totals.total for r in runs]) for name, runs in desk["reports"].items()}
    ref = means[BIBBG]
    strict = all(ref < means[b] for b in BASELINES)
    cuts = ", ".join(f"{b} {100 * (means[b] - ref) / means[b]:.2f}%" for b in BASELINES)
    ok = not violations and strict
    criterion(
        4, ok,
        f"{len(violations)} per-step losses over {steps} frozen steps; mean total {ref:.1f} CNY,"
        f" reduction vs {cuts}",
    )
    assert ok, violations[:5]


def test_c5_physics(criterion):
    w = WindParams()
    pv = PvParams()
    hps = HpsState()
    checks = {
        "wind 12 m/s": wind_power(12.0, w) == pytest.approx(2200.0, abs=1e-9),
        "wind cut-out": all(wind_power(v, w) == 0.0 for v in (22.01, 25.0, 40.0)),
        "pv linear": all(
            pv_power(a + b, pv) == pytest.approx(pv_power(a, pv) + pv_power(b, pv), rel=1e-12)
            for a, b in [(0.0, 100.0), (150.0, 420.0), (333.3, 666.7)]
        ),
        "pv zero": pv_power(0.0, pv) == 0.0,
        "hydrogen zero": hydrogen_power(0.0, 0.0, hps) == 0.0,
    }
    chain = hps.chain
    checks["hydrogen linear"] = all(
        hydrogen_from_available(a + b, chain)
        == pytest.approx(hydrogen_from_available(a, chain) + hydrogen_from_available(b, chain), rel=1e-12)
        for a, b in [(0.0, 250.0), (1200.0, 680.0), (2680.0, 1.5)]
    )
    checks["hydrogen zero"] &= hydrogen_from_available(0.0, chain) == 0.0
    ok = all(checks.values())
    criterion(5, ok, ", ".join(f"{k} {'ok' if v else 'BAD'}" for k, v in checks.items()))
    assert ok


def test_c6_constraint_compliance(desk, criterion):
    expected = len(STRATEGIES) * len(DESK_SEEDS) * ScenarioConfig().T
    ok = desk["log"].steps == expected
    criterion(
        6, ok,
        f"assignment, pile, station and dispatch checks held on {desk['log'].steps}/{expected} steps",
    )
    assert ok


def _sweep(base, section, name, values, metric, seeds=SWEEP_SEEDS):
    out = np.zeros((len(seeds), len(values)))
    for c, v in enumerate(values):
        cfg = with_overrides(base, **{section: {name: v}})
        for r, seed in enumerate(seeds):
            out[r, c] = metric(run_horizon(generate_scenario(cfg, seed), BIBBG, seed))
    return out


def _decisions_match(a, b) -> bool:
    for x, y in zip(a.steps, b.steps):
        if x.decision[0] != y.decision[0] or not np.allclose(x.decision[1], y.decision[1], atol=1e-9):
            return False
        if abs((x.breakdown.total - x.breakdown.penalty) - (y.breakdown.total - y.breakdown.penalty)) > TOL:
            return False
    return len(a.steps) == len(b.steps)


def test_c7_sensitivity(criterion):
    base = ScenarioConfig()
    start = time.perf_counter()
    piles = _sweep(base, "stations", "piles", [3, 4, 5, 6, 7], lambda r: r.service_rate)
    speed = _sweep(base, "fleet", "speed", [30.0, 45.0, 60.0, 75.0, 90.0], lambda r: r.totals.total)
    cap = _sweep(base, "fleet", "capacity", [50.0, 60.0, 75.0, 90.0], lambda r: r.totals.charge)
    trends = {
        "service rate vs piles": bool(np.all(np.diff(piles, axis=1) >= -1e-12)),
        "total vs speed": bool(np.all(np.diff(speed, axis=1) <= 1e-9)),
        "charge vs capacity": bool(np.all(np.diff(cap, axis=1) > 0)),
    }
    # penalty above every per-step bound: same decisions, only the penalty line moves
    same = True
    for seed in (0, 1):
        sc = generate_scenario(base, seed)
        bounds = []
        run_horizon(sc, BIBBG, seed, on_step=lambda e, w, r: bounds.append(gamma_bound(w.problem)))
        top = max(bounds)
        runs = [
            run_horizon(
                generate_scenario(with_overrides(base, costs={"penalty": k * top}), seed), BIBBG, seed,
                keep_decisions=True,
            )
            for k in (1.0, 2.0, 4.0)
        ]
        same &= all(_decisions_match(runs[0], r) for r in runs[1:])
    trends["decisions vs penalty"] = same
    ok = all(trends.values())
    criterion(
        7, ok,
        ", ".join(f"{k} {'ok' if v else 'BAD'}" for k, v in trends.items())
        + f" over seeds {SWEEP_SEEDS.start}-{SWEEP_SEEDS.stop - 1};"
        f" mean service rate by piles {np.round(piles.mean(0), 3).tolist()},"
        f" {time.perf_counter() - start:.0f} s",
    )
    assert ok


def test_c8_performance(desk, criterion):
    steps = [s for rep in desk["reports"][BIBBG] for s in rep.steps]
    worst = max(s.seconds for s in steps)
    mean_it = float(np.mean([s.iterations for s in steps]))
    ok = worst < 1.0 and mean_it < 10
    criterion(
        8, ok,
        f"max step {worst:.3f} s, mean step {np.mean([s.seconds for s in steps]):.4f} s,"
        f" mean iterations {mean_it:.2f} over {len(steps)} steps",
    )
    assert ok


def test_c9_determinism(tmp_path, criterion):
    cfg = ScenarioConfig()
    texts = []
    for _ in range(2):
        reps = [run_horizon(generate_scenario(cfg, 3), name, 3) for name in STRATEGIES]
        texts.append("".join(report_tsv(r) + report_json(r, cfg) for r in reps))
    rand_cfg = with_overrides(cfg, solver={"init": "random"})
    twice = [report_tsv(run_horizon(generate_scenario(rand_cfg, 4), BIBBG, 4)) for _ in range(2)]
    ok = texts[0] == texts[1] and twice[0] == twice[1]
    criterion(9, ok, f"{len(STRATEGIES)} strategy reports and a random-init run reproduced byte for byte")
    assert ok
