import numpy as np
import pytest
from hypothesis import given, strategies as st

from hydrocharge.station import (
    ChargerSpec,
    FcsState,
    Occupant,
    PileCapacityError,
    advance_station,
    charging_power,
    charging_price,
    fcs_maintenance,
    pile_update,
    remaining_time,
    soc_step,
    steps_to_full,
)


def occ(steps, soc=0.5, ev=0):
    return Occupant(ev_id=ev, soc=soc, power=44.0, capacity=75.0, efficiency=0.92, steps_left=steps)


def station(total, free, leaving=0, staying=0):
    occupants = [occ(1, ev=k) for k in range(leaving)] + [occ(4, ev=100 + k) for k in range(staying)]
    return FcsState(total_piles=total, available=free, occupants=occupants)


def test_soc_step_examples():
    assert soc_step(0.5, 44, 0.92, 0.25, 75) == pytest.approx(0.5 + 44 * 0.92 * 0.25 / 75)
    assert soc_step(0.5, 44, 0.92, 0.25, 75) == pytest.approx(0.634933, abs=1e-6)
    assert soc_step(1.0, 88, 0.92, 0.25, 75) == 1.0
    assert soc_step(0.99, 88, 0.92, 0.25, 75) == 1.0
    with pytest.raises(ValueError):
        soc_step(0.5, 44, 0.92, 0.25, 0.0)


def test_remaining_time_examples():
    assert remaining_time(0.5, 75, 44, 0.92) == pytest.approx(37.5 / 40.48)
    assert remaining_time(1.0, 75, 44, 0.92) == 0.0
    assert remaining_time(0.0, 75, 88, 0.92) == pytest.approx(75 / 80.96)
    with pytest.raises(ValueError):
        remaining_time(0.5, 75, 0.0, 0.92)


@given(st.floats(0, 1), st.sampled_from([44.0, 88.0]), st.floats(20, 120))
def test_remaining_time_drops_by_delta_per_step(soc, p, cap):
    delta, eta = 0.25, 0.92
    left = remaining_time(soc, cap, p, eta)
    while left > delta + 1e-12:
        soc = soc_step(soc, p, eta, delta, cap)
        new = remaining_time(soc, cap, p, eta)
        assert new == pytest.approx(left - delta, abs=1e-9)
        left = new
    assert soc_step(soc, p, eta, delta, cap) == pytest.approx(1.0, abs=1e-9)


def test_steps_to_full_rounds_up():
    assert steps_to_full(0.25, 0.25) == 1
    assert steps_to_full(0.26, 0.25) == 2
    assert steps_to_full(0.0, 0.25) == 0


def test_pile_update_examples():
    s = pile_update(station(5, 5), [])
    assert s.available == 5
    s = pile_update(station(7, 5, leaving=2), [occ(3, ev=k) for k in range(3)])
    assert s.available == 4
    s = pile_update(station(1, 0, leaving=1), [occ(3)])
    assert s.available == 0
    assert len(s.occupants) == 1


def test_pile_update_rejects_overflow():
    with pytest.raises(PileCapacityError):
        pile_update(station(3, 1, leaving=1), [occ(2), occ(2), occ(2)])


@given(st.integers(0, 10_000))
def test_pile_count_stays_in_range(seed):
    rng = np.random.default_rng(seed)
    total = int(rng.integers(1, 8))
    fcs = FcsState(total_piles=total, available=total)
    for _ in range(30):
        room = fcs.available + len(fcs.departing)
        k = int(rng.integers(0, room + 1))
        fcs = pile_update(fcs, [occ(int(rng.integers(1, 5)), ev=j) for j in range(k)])
        assert 0 <= fcs.available <= total
        fcs.check()


def test_charging_power():
    assert charging_power(0) == 44.0
    assert charging_power(1) == 88.0
    with pytest.raises(ValueError):
        ChargerSpec(p_slow=88.0, p_fast=44.0)
    with pytest.raises(ValueError):
        charging_power(2)


def test_charging_price_examples():
    assert charging_price(200, 100, 150, 1.0) == pytest.approx(0.5)
    assert charging_price(200, 100, 0, 0.7) == pytest.approx(0.7)
    assert charging_price(200, 100, 400, 0.7) == 0.0
    with pytest.raises(ValueError):
        charging_price(0, 0, 0, 1.0)


@given(st.floats(1, 500), st.floats(0, 500), st.floats(0, 1000), st.floats(0, 1000), st.one_of(st.just(0.0), st.floats(0.01, 2)))
def test_price_properties(base, demand, h1, h2, tou):
    lo, hi = sorted((h1, h2))
    p_lo, p_hi = charging_price(base, demand, lo, tou), charging_price(base, demand, hi, tou)
    assert p_hi <= p_lo + 1e-12
    assert 0.0 <= p_lo <= tou + 1e-12
    if tou > 0:
        assert (p_hi == 0.0) == (hi >= base + demand)


def test_fcs_maintenance():
    assert fcs_maintenance([], 0.018) == 0.0
    assert fcs_maintenance([44, 88], 0.018) == pytest.approx(2.376)
    assert fcs_maintenance([44], 0.0) == 0.0


def test_state_invariants():
    with pytest.raises(PileCapacityError):
        FcsState(total_piles=2, available=3)
    with pytest.raises(PileCapacityError):
        FcsState(total_piles=2, available=2, occupants=[occ(1)])


def test_advance_station_releases_departing_piles():
    fcs = station(3, 1, leaving=1, staying=1)
    res = advance_station(fcs, now=[occ(2, ev=9)], deferred=[occ(2, ev=10)], delta=0.25)
    assert res.state.available == 0
    assert [o.ev_id for o in res.departed] == [0]
    assert res.stored_energy > 0
    with pytest.raises(PileCapacityError):
        advance_station(station(2, 0, leaving=1, staying=1), now=[], deferred=[occ(1), occ(1)], delta=0.25)
