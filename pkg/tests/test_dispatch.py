import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog as scipy_linprog

from hydrocharge.dispatch import build_lp, dispatch_satisfies_limits, lp_to_text, optimal_dispatch
from hydrocharge.ev_cost import NOW, CostConstants, HpsSupply, Request, StationSlots, StepProblem, step_objective
from hydrocharge.oracle import enumerate_assignments, random_instance


def one_pair(p_h, tou, n_ev=1, demand=100.0):
    reqs = [Request(j, 0, 0.5, 75.0, 60.0, 0.0, (10.0,), (0.0,)) for j in range(n_ev)]
    return StepProblem(
        reqs, [StationSlots(n_ev, 0, 200.0, demand)], [HpsSupply(p_h)], np.ones((1, n_ev)),
        np.ones((1, 1)), tou, 0.25, CostConstants(),
    )


def test_no_assignment_means_no_dispatch(rng):
    for _ in range(20):
        p = random_instance(rng)
        G = (None,) * p.n_requests
        res = optimal_dispatch(G, p)
        assert np.all(res.H == 0)
        assert res.objective == pytest.approx(step_objective(G, res.H, p).total)


def test_dispatch_when_saving_beats_delivery():
    # saving per kW: E * tou * delta / B = 37.64 * 0.25 / 150 > 0.04
    p = one_pair(400.0, 1.0)
    assert optimal_dispatch(((0, NOW),), p).H[0, 0] == pytest.approx(400.0)
    p = one_pair(1000.0, 1.0)
    assert optimal_dispatch(((0, NOW),), p).H[0, 0] == pytest.approx(600.0)  # full coverage B / delta


def test_no_dispatch_when_delivery_dearer():
    p = one_pair(400.0, 0.3)
    assert optimal_dispatch(((0, NOW),), p).H[0, 0] == 0.0


def test_grid_search_two_by_two():
    reqs = [Request(j, j % 2, 0.2, 75.0, 60.0, 1.0, (5.0, 6.0), (3.0, 4.0)) for j in range(3)]
    p = StepProblem(
        reqs, [StationSlots(2, 0, 20.0, 10.0), StationSlots(2, 0, 30.0, 5.0)],
        [HpsSupply(8.0, delivery=0.04), HpsSupply(6.0, delivery=0.04)], np.ones((2, 3)),
        np.ones((2, 2)), 1.1, 0.25, CostConstants(),
    )
    G = ((0, NOW), (1, NOW), (0, NOW))
    best = np.inf
    for a, b in itertools.product(range(9), repeat=2):
        if a + b > 8:
            continue
        for c, d in itertools.product(range(7), repeat=2):
            if c + d > 6:
                continue
            H = np.array([[a, b], [c, d]], dtype=float)
            best = min(best, step_objective(G, H, p).total)
    res = optimal_dispatch(G, p)
    assert res.objective == pytest.approx(best, abs=1e-9)
    assert step_objective(G, res.H, p).total == pytest.approx(best, abs=1e-9)


@given(st.integers(0, 100_000))
def test_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    p = random_instance(rng)
    G = list(enumerate_assignments(p))[-1]
    lp = build_lp(G, p)
    ref = scipy_linprog(lp.c, A_ub=lp.A_ub, b_ub=lp.b_ub, bounds=[(0, None)] * lp.n_vars, method="highs")
    res = optimal_dispatch(G, p)
    assert res.objective == pytest.approx(ref.fun + lp.constant, abs=1e-7)
    assert dispatch_satisfies_limits(p, res.H)
    # the price-ratio variables are tight at the optimum
    h = res.H.sum(axis=0)
    np.testing.assert_allclose(res.price_ratio, np.maximum(1 - p.delta * h / lp.load, 0), atol=1e-12)


@given(st.integers(0, 100_000), st.floats(1.0, 3.0))
def test_more_supply_never_hurts(seed, factor):
    from dataclasses import replace

    rng = np.random.default_rng(seed)
    p = random_instance(rng)
    G = list(enumerate_assignments(p))[-1]
    richer = replace(p, hps=tuple(replace(h, p_hydrogen=h.p_hydrogen * factor) for h in p.hps))
    assert optimal_dispatch(G, richer).objective <= optimal_dispatch(G, p).objective + 1e-9


def test_scaling_demand_keeps_support():
    p = one_pair(300.0, 1.0, n_ev=2)
    G = ((0, NOW), (0, NOW))
    H1 = optimal_dispatch(G, p).H
    H2 = optimal_dispatch(G[:1] + (None,), p).H  # half the energy, still above the threshold
    assert (H1 > 0).tolist() == (H2 > 0).tolist()


def test_lp_text_dump():
    p = one_pair(400.0, 1.0)
    text = lp_to_text(build_lp(((0, NOW),), p))
    for section in ("Minimize", "Subject To", "Bounds", "End", "price_0", "supply_0", "H_0_0"):
        assert section in text
