"""Line-oriented text format for step problems.

Used to persist counterexample witnesses next to the matching graph dump.
Floats are written with ``repr`` so a round trip is exact.
"""
from __future__ import annotations

import numpy as np

from .ev_cost import CostConstants, HpsSupply, Request, StationSlots, StepProblem
from .station import ChargerSpec

CONST_FIELDS = ("wait", "idle", "depreciation", "maintenance", "energy_loss", "efficiency", "penalty")


def _nums(xs) -> str:
    return " ".join(repr(float(x)) for x in xs)


def problem_to_text(p: StepProblem) -> str:
    c = p.consts
    lines = [
        "# step problem",
        f"tou {p.tou!r}",
        f"delta {p.delta!r}",
        "consts " + _nums([getattr(c, f) for f in CONST_FIELDS] + [c.charger.p_slow, c.charger.p_fast]),
    ]
    for r in p.requests:
        lines.append(
            f"request {r.ev_id} {r.q} {r.soc!r} {r.capacity!r} {r.speed!r} {r.l0!r}"
            f" | {_nums(r.to_fcs)} | {_nums(r.to_dest)}"
        )
    for s in p.stations:
        lines.append(f"station {s.available} {s.departing} {s.base_load!r} {s.demand!r}")
    for h in p.hps:
        lines.append(
            "hps " + _nums([h.p_hydrogen, h.p_wind, h.p_pv, h.maint_wind, h.maint_pv, h.delivery])
        )
    for row in p.reach:
        lines.append("reach " + " ".join(str(int(x)) for x in row))
    for row in p.supply:
        lines.append("supply " + " ".join(str(int(x)) for x in row))
    return "\n".join(lines) + "\n"


def problem_from_text(text: str) -> StepProblem:
    tou = delta = None
    consts = CostConstants()
    requests, stations, hps, reach, supply = [], [], [], [], []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tag, _, rest = line.partition(" ")
        try:
            if tag == "tou":
                tou = float(rest)
            elif tag == "delta":
                delta = float(rest)
            elif tag == "consts":
                v = [float(x) for x in rest.split()]
                kw = dict(zip(CONST_FIELDS, v[: len(CONST_FIELDS)]))
                consts = CostConstants(**kw, charger=ChargerSpec(v[-2], v[-1]))
            elif tag == "request":
                head, to_fcs, to_dest = rest.split("|")
                ev_id, q, soc, cap, speed, l0 = head.split()
                requests.append(
                    Request(
                        ev_id=int(ev_id), q=int(q), soc=float(soc), capacity=float(cap),
                        speed=float(speed), l0=float(l0),
                        to_fcs=tuple(float(x) for x in to_fcs.split()),
                        to_dest=tuple(float(x) for x in to_dest.split()),
                    )
                )
            elif tag == "station":
                a, d, b, dem = rest.split()
                stations.append(StationSlots(int(a), int(d), float(b), float(dem)))
            elif tag == "hps":
                hps.append(HpsSupply(*(float(x) for x in rest.split())))
            elif tag == "reach":
                reach.append([int(x) for x in rest.split()])
            elif tag == "supply":
                supply.append([int(x) for x in rest.split()])
            else:
                raise ValueError(f"unknown record {tag!r}")
        except (TypeError, ValueError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from exc
    if tou is None or delta is None:
        raise ValueError("missing tou or delta record")
    n_s, n, n_h = len(stations), len(requests), len(hps)
    return StepProblem(
        requests=requests, stations=stations, hps=hps,
        reach=np.array(reach, dtype=np.int8).reshape(n_s, n),
        supply=np.array(supply, dtype=np.int8).reshape(n_h, n_s),
        tou=tou, delta=delta, consts=consts,
    )
