"""HPS energy chain: wind and PV generation, electrolysis, storage and
fuel-cell reconversion, plus the HPS operating cost.

The electrolyzer -> cylinder -> fuel-cell chain is evaluated literally as
moles -> gas volume -> current -> power. Its units do not close (a volume
times the Faraday constant is treated as a current), so the chain reduces to
one linear coefficient from available power to hydrogen power. Pressure is
taken in Pa so that it pairs with the gas constant in J/(mol K).
"""
from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class WindParams:
    n_turbines: int = 1
    capacity: float = 2200.0  # kW
    v_rated: float = 12.0  # m/s
    v_cutin: float = 2.5
    v_cutout: float = 22.0

    def __post_init__(self):
        if not 0 < self.v_cutin < self.v_rated < self.v_cutout:
            raise ValueError("wind speeds must satisfy 0 < cut-in < rated < cut-out")
        if self.capacity <= 0 or self.n_turbines < 0:
            raise ValueError("turbine capacity must be positive")


@dataclass(frozen=True)
class PvParams:
    capacity: float = 1000.0  # kW
    inverter_eff: float = 0.88
    g_rated: float = 800.0  # W

    def __post_init__(self):
        if self.capacity <= 0 or self.g_rated <= 0 or not 0 < self.inverter_eff <= 1:
            raise ValueError("PV parameters must be positive with inverter_eff in (0, 1]")


@dataclass(frozen=True)
class HydrogenChainParams:
    faraday_eff: float = 0.98
    n_electrolyzers: int = 8
    u_electrolyzer: float = 60.0  # V
    faraday: float = 96485.34  # C/mol
    gas_const: float = 8.314  # J/(mol K)
    temperature: float = 300.0  # K
    pressure: float = 15e6  # Pa
    u_fuelcell: float = 400.0  # V
    base_load: float = 400.0  # kW

    def __post_init__(self):
        values = (
            self.faraday_eff, self.n_electrolyzers, self.u_electrolyzer, self.faraday,
            self.gas_const, self.temperature, self.pressure, self.u_fuelcell,
        )
        if min(values) <= 0 or self.base_load < 0:
            raise ValueError("hydrogen chain parameters must be positive")
        if self.faraday_eff > 1:
            raise ValueError("faraday_eff must not exceed 1")

    @property
    def coefficient(self) -> float:
        """Hydrogen power produced per kW of available power."""
        return hydrogen_from_available(1.0, self)


@dataclass(frozen=True)
class HpsState:
    wind: WindParams = field(default_factory=WindParams)
    pv: PvParams = field(default_factory=PvParams)
    chain: HydrogenChainParams = field(default_factory=HydrogenChainParams)
    maint_wind: float = 0.018  # CNY/kW
    maint_pv: float = 0.018
    delivery: float = 0.04


def wind_power(v: float, p: WindParams) -> float:
    """Turbine output in kW; zero below cut-in and above cut-out."""
    if v < 0:
        raise ValueError("wind speed must be non-negative")
    rated = p.n_turbines * p.capacity
    if p.v_rated <= v <= p.v_cutout:
        return rated
    if p.v_cutin <= v <= p.v_rated:
        return rated * (v / p.v_rated) ** 3
    return 0.0


def pv_power(g: float, p: PvParams) -> float:
    if g < 0:
        raise ValueError("radiation must be non-negative")
    return p.capacity * p.inverter_eff * (g / p.g_rated)


def available_power(p_wind: float, p_pv: float, chain: HydrogenChainParams) -> float:
    # base load above generation means no electrolysis, never negative output
    return max(0.0, p_wind + p_pv - chain.base_load)


def hydrogen_from_available(p_avail: float, c: HydrogenChainParams) -> float:
    moles = c.faraday_eff * p_avail * c.n_electrolyzers / (2.0 * c.u_electrolyzer * c.faraday)
    volume = moles * c.gas_const * c.temperature / c.pressure
    current = 2.0 * volume * c.faraday
    return current * c.u_fuelcell


def hydrogen_power(v_wind: float, g_solar: float, hps: HpsState) -> float:
    """Equivalent hydrogen power (kW) an HPS can dispatch this step."""
    p_a = available_power(wind_power(v_wind, hps.wind), pv_power(g_solar, hps.pv), hps.chain)
    return hydrogen_from_available(p_a, hps.chain)


def hps_cost(hps: HpsState, p_wind: float, p_pv: float, dispatched_row) -> float:
    """Maintenance of turbines and PV plus tanker delivery of the dispatched row."""
    total = 0.0
    for h in dispatched_row:
        if h < 0:
            raise ValueError("dispatched hydrogen must be non-negative")
        total += h
    return hps.maint_wind * p_wind + hps.maint_pv * p_pv + hps.delivery * total
