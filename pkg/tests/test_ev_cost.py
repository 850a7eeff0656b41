import numpy as np
import pytest
from hypothesis import given, strategies as st

from hydrocharge.ev_cost import (
    NEXT,
    NOW,
    ConstraintViolation,
    CostConstants,
    EvState,
    HpsSupply,
    Request,
    StationSlots,
    StepProblem,
    edge_components,
    ev_assignment_cost,
    potential_demand,
    station_prices,
    step_objective,
)
from hydrocharge.network import RoadNetwork
from hydrocharge.oracle import random_instance

C = CostConstants()


def req(q=0, soc=0.5, cap=75.0, to_fcs=10.0, to_dest=0.0, l0=5.0, speed=60.0):
    return Request(ev_id=0, q=q, soc=soc, capacity=cap, speed=speed, l0=l0, to_fcs=(to_fcs,), to_dest=(to_dest,))


def problem(requests, stations, hps=(), reach=None, supply=None, tou=1.0, gamma=300.0):
    n_s, n = len(stations), len(requests)
    reach = np.ones((n_s, n)) if reach is None else reach
    supply = np.ones((len(hps), n_s)) if supply is None else supply
    return StepProblem(requests, stations, hps, reach, supply, tou, 0.25, C).with_penalty(gamma)


def test_potential_demand_examples():
    assert potential_demand(1.0, 75, 0, 0.014) == 0.0
    assert potential_demand(0.5, 75, 10, 0.014) == pytest.approx(37.64)
    assert potential_demand(0.0, 75, 0, 0.014) == 75.0
    with pytest.raises(ValueError):
        potential_demand(0.5, 75, -1, 0.014)


def test_idle_ev_example():
    e = edge_components(req(), 0, 0.5, C)
    assert e.charge == pytest.approx(18.82)
    assert e.idle == pytest.approx(21 * 37.64 / 40.48)
    assert e.depreciation == pytest.approx(0.375)
    assert e.wait == 0.0
    assert e.assignment_cost == pytest.approx(38.72, abs=0.01)


def test_zero_cost_when_full_and_close():
    assert edge_components(req(soc=1.0, to_fcs=0.0, l0=0.0), 0, 0.5, C).assignment_cost == 0.0


def test_passenger_ev_term_by_term():
    e = edge_components(req(q=1, to_dest=8.0), 0, 0.5, C)
    energy = 0.5 * 75 + 0.014 * 10
    hours = energy / (88 * 0.92)
    assert e.energy == pytest.approx(energy)
    assert e.charge == pytest.approx(energy * 0.5)
    assert e.wait == pytest.approx(17.2 * ((10 + 8) / 60 + hours))
    assert e.idle == 0.0
    assert e.depreciation == pytest.approx(0.025 * (5 + 10 + 8))
    assert e.maint == pytest.approx(0.018 * 88)


def test_next_slot_adds_one_step_of_waiting():
    now = edge_components(req(), 0, 0.5, C, 0.25, NOW)
    nxt = edge_components(req(), 0, 0.5, C, 0.25, NEXT)
    assert nxt.total - now.total == pytest.approx(4.3)
    assert now.total == pytest.approx(now.assignment_cost + 0.018 * 44)


def test_idle_ev_ignores_destination_distance():
    a = edge_components(req(q=0, to_dest=0.0), 0, 0.7, C)
    b = edge_components(Request(0, 0, 0.5, 75.0, 60.0, 5.0, (10.0,), (30.0,)), 0, 0.7, C)
    assert a == b


@given(st.floats(0, 1), st.floats(0, 30), st.floats(0, 30), st.floats(0, 2), st.floats(0, 2), st.integers(0, 1))
def test_cost_monotone_in_distance_and_price(soc, d1, d2, b1, b2, q):
    lo_d, hi_d = sorted((d1, d2))
    lo_b, hi_b = sorted((b1, b2))
    cost = lambda d, b: edge_components(req(q=q, soc=soc, to_fcs=d, to_dest=3.0), 0, b, C).assignment_cost
    assert cost(lo_d, lo_b) <= cost(hi_d, lo_b) + 1e-9
    assert cost(lo_d, lo_b) <= cost(lo_d, hi_b) + 1e-9


def test_ev_assignment_cost_uses_network():
    net = RoadNetwork(nodes=[0, 1, 2], arcs=[(0, 1, 5.0), (1, 2, 10.0)], fcs_nodes=[2])
    ev = EvState(id=1, soc=0.5, q=0, position=1, origin=0, requesting=True)
    assert ev_assignment_cost(ev, 0, [0.5], net, C) == pytest.approx(38.72, abs=0.01)
    with pytest.raises(ConstraintViolation):
        ev_assignment_cost(ev, 0, [0.5], net, C, delta=0.1)
    with pytest.raises(ValueError):
        ev_assignment_cost(EvState(id=2, soc=0.5), 0, [0.5], net, C)


def test_ev_state_invariants():
    with pytest.raises(ValueError):
        EvState(id=0, soc=1.5)
    with pytest.raises(ValueError):
        EvState(id=0, soc=0.5, q=1)


def test_empty_step_is_maintenance_only():
    p = problem([], [StationSlots(2, 0, 200, 100)], hps=[HpsSupply(10.0, 2200.0, 880.0)])
    b = step_objective((), np.zeros((1, 1)), p)
    assert b.total == pytest.approx(0.018 * 3080)
    assert b.total == b.hps_maint


def test_unassigned_request_pays_penalty():
    p = problem([req()], [StationSlots(1, 0, 200, 100)])
    b = step_objective((None,), np.zeros((0, 1)), p)
    assert b.penalty == 300.0 and b.unserved == 1


def test_buckets_partition_total(rng):
    for _ in range(50):
        p = random_instance(rng)
        G = tuple(None for _ in range(p.n_requests))
        b = step_objective(G, np.zeros((p.n_hps, p.n_fcs)), p)
        assert b.hydrogen_part + b.coupled_part + b.assignment_part == pytest.approx(b.total)


def test_step_objective_matches_naive_sum(rng):
    from hydrocharge.oracle import enumerate_assignments

    for _ in range(30):
        p = random_instance(rng)
        H = np.zeros((p.n_hps, p.n_fcs))
        for k in range(p.n_hps):
            targets = np.nonzero(p.supply[k])[0]
            if targets.size:
                H[k, targets] = p.hps[k].p_hydrogen / targets.size
        G = list(enumerate_assignments(p))[-1]
        prices = station_prices(p, H)
        naive = 0.0
        for j, slot in enumerate(G):
            if slot is None:
                naive += p.consts.penalty
                continue
            r = p.requests[j]
            i, kind = slot
            e = potential_demand(r.soc, r.capacity, r.to_fcs[i], C.energy_loss)
            P = 88.0 if r.q else 44.0
            hours = e / (P * C.efficiency)
            naive += e * prices[i]
            naive += r.q * C.wait * ((r.to_fcs[i] + r.to_dest[i]) / r.speed + hours) + (C.wait * 0.25 if kind else 0)
            naive += (1 - r.q) * C.idle * hours
            naive += C.depreciation * (r.l0 + r.to_fcs[i] + r.q * r.to_dest[i])
            naive += C.maintenance * P
        for k, h in enumerate(p.hps):
            naive += h.maint_wind * h.p_wind + h.maint_pv * h.p_pv + h.delivery * H[k].sum()
        assert step_objective(G, H, p).total == pytest.approx(naive, rel=1e-12)


def test_constraint_violations_are_named():
    p = problem([req(), req()], [StationSlots(1, 0, 200, 100)], reach=np.array([[1, 0]]))
    with pytest.raises(ConstraintViolation, match="reachability"):
        step_objective((None, (0, NOW)), np.zeros((0, 1)), p)
    q = problem([req(), req()], [StationSlots(1, 0, 200, 100)])
    with pytest.raises(ConstraintViolation, match="pile-capacity"):
        step_objective(((0, NOW), (0, NOW)), np.zeros((0, 1)), q)
    with pytest.raises(ConstraintViolation, match="single-assignment"):
        step_objective(((0, NOW),), np.zeros((0, 1)), q)
    h = problem([], [StationSlots(1, 0, 200, 100)], hps=[HpsSupply(5.0)], supply=np.array([[0]]))
    with pytest.raises(ConstraintViolation, match="supply-reach"):
        step_objective((), np.array([[1.0]]), h)
    h = problem([], [StationSlots(1, 0, 200, 100)], hps=[HpsSupply(5.0)])
    with pytest.raises(ConstraintViolation, match="supply-limit"):
        step_objective((), np.array([[6.0]]), h)
