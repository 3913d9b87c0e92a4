"""Fleet coordination of the P2G plants.

Two rule-based decisions are taken each timestep:

* electrolyzer setpoints — each plant follows its own feeder's RES
  surplus (plants on other feeders cannot help), capped by nominal
  power and by what its hydrogen buffer can still absorb;
* methanation dispatch — a shared SNG mass budget from the gas network
  is allocated across the units.  Already-running units are served
  first (their unavoidable ramp-down production is reserved off the
  top), remaining budget fills running units in order of stored
  hydrogen, and standby units may start only when every running unit
  is already at its maximum feasible load.  Ties break toward the
  fuller buffer, then the lower plant index.

Dispatch keeps each buffer above its minimum pressure by construction:
a load L is granted only if the buffer holds the step's draw plus the
stopping reserve L²/(2·ramp_down), the hydrogen consumed while ramping
to zero in the worst case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from p2gsim.plant import MethMode, P2GPlant


@dataclass(frozen=True)
class PlantDispatchRecord:
    """Per-plant diagnostics of one dispatch decision."""

    name: str
    mode: MethMode
    stored_h2_kg: float
    buffer_pressure_bar: float
    min_feasible_kg_per_h: float
    max_feasible_kg_per_h: float
    target_kg_per_h: float
    curtailed_by_budget: bool
    started: bool


@dataclass(frozen=True)
class CoordinatorDirective:
    electrolyzer_setpoint_kw: list[float]
    methanation_target_kg_per_h: list[float]
    budget_kg: float
    budget_used_kg: float
    reserved_kg: float
    buffer_capped: list[bool]
    plants_curtailed: list[str]
    records: list[PlantDispatchRecord] = field(repr=False)


def electrolyzer_setpoints(
    plants: list[P2GPlant], surplus_kw: list[float], dt_h: float
) -> tuple[list[float], list[bool]]:
    """Per-plant electrolyzer setpoint from its own feeder's surplus.

    No surplus keeps the plant at standby.  Otherwise the setpoint
    tracks the surplus up to nominal power and up to the power whose
    hydrogen output the buffer can absorb this step (counting the
    methanation unit's current draw); with a full buffer this reduces
    to the pass-through rate.  The second return flags plants whose
    setpoint was reduced by that buffer ceiling.
    """
    if len(plants) != len(surplus_kw):
        raise ValueError("one surplus value per plant required")
    setpoints = []
    capped = []
    for plant, surplus in zip(plants, surplus_kw):
        el = plant.config.electrolyzer
        if surplus <= 0.0:
            setpoints.append(el.standby_power_kw)
            capped.append(False)
            continue
        headroom_kg = plant.config.buffer.mass_at(plant.config.buffer.p_max_bar) - plant.stored_h2_kg
        absorbable_rate = max(0.0, headroom_kg) / dt_h + plant.meth_state.load_kg_per_h
        cap_kw = el.standby_power_kw + absorbable_rate * el.specific_consumption_kwh_per_kg
        uncapped = min(el.standby_power_kw + surplus, el.nominal_power_kw)
        setpoint = min(uncapped, cap_kw)
        if setpoint - el.standby_power_kw < el.min_load_fraction * el.nominal_power_kw:
            setpoint = el.standby_power_kw
        setpoints.append(max(setpoint, el.standby_power_kw))
        capped.append(cap_kw < uncapped - 1e-9)
    return setpoints, capped


def _max_draw_load(plant: P2GPlant, dt_h: float) -> float:
    """Largest sustained load the buffer can serve this step and still stop safely."""
    r_down = plant.config.methanation.ramp_down_kg_per_h_per_h
    avail = plant.available_h2_kg
    # solve L*dt + L^2/(2 r) = avail for L >= 0
    return r_down * (-dt_h + math.sqrt(dt_h * dt_h + 2.0 * avail / r_down))


def methanation_dispatch(
    plants: list[P2GPlant], sng_budget_kg: float, dt_h: float
) -> tuple[list[float], list[PlantDispatchRecord], float, float]:
    """Allocate the SNG budget; returns targets, records, used and reserved mass.

    Returns per-plant H2 feed targets (kg/h).  Units in reactor
    balancing keep a positive target (the phase cannot be aborted) but
    produce nothing yet; their budget draw is zero this step.
    """
    if sng_budget_kg < 0:
        raise ValueError(f"negative SNG budget {sng_budget_kg}")
    n = len(plants)
    targets = [0.0] * n
    min_load = [0.0] * n
    max_load = [0.0] * n
    started = [False] * n
    running = []
    standby_ready = []
    for i, plant in enumerate(plants):
        meth = plant.config.methanation
        mode = plant.meth_state.mode
        if mode == MethMode.UP_AND_RUNNING:
            load = plant.meth_state.load_kg_per_h
            min_load[i] = max(0.0, load - meth.ramp_down_kg_per_h_per_h * dt_h)
            hi = min(
                meth.nominal_h2_intake_kg_per_h,
                load + meth.ramp_up_kg_per_h_per_h * dt_h,
                _max_draw_load(plant, dt_h),
            )
            max_load[i] = max(hi, min_load[i])
            running.append(i)
        elif mode == MethMode.REACTOR_BALANCING:
            targets[i] = meth.nominal_h2_intake_kg_per_h  # committed, zero production
        elif plant.buffer_pressure_bar >= plant.config.buffer.meth_trigger_bar:
            standby_ready.append(i)

    def by_priority(indices):
        return sorted(indices, key=lambda i: (-plants[i].stored_h2_kg, i))

    def sng_of(i, load):
        return plants[i].config.methanation.ch4_yield_kg_per_kg * load * dt_h

    reserved = sum(sng_of(i, min_load[i]) for i in running)
    disc = max(0.0, sng_budget_kg - reserved)
    curtailed = [False] * n

    for i in by_priority(running):
        yield_per_load = plants[i].config.methanation.ch4_yield_kg_per_kg * dt_h
        room = max_load[i] - min_load[i]
        extra = max(0.0, min(room, disc / yield_per_load))
        targets[i] = min_load[i] + extra
        disc -= extra * yield_per_load
        if extra < room - 1e-12:
            curtailed[i] = True

    all_running_maxed = all(not curtailed[i] for i in running)
    for i in by_priority(standby_ready):
        meth = plants[i].config.methanation
        # first-step production once the unit reaches up-and-running
        lookahead = meth.ch4_yield_kg_per_kg * (meth.ramp_up_kg_per_h_per_h * dt_h) * dt_h
        if all_running_maxed and disc > lookahead:
            targets[i] = meth.nominal_h2_intake_kg_per_h
            started[i] = True
            disc -= lookahead
        else:
            curtailed[i] = True

    used = sum(sng_of(i, targets[i]) for i in running)
    records = [
        PlantDispatchRecord(
            name=plants[i].config.name,
            mode=plants[i].meth_state.mode,
            stored_h2_kg=plants[i].stored_h2_kg,
            buffer_pressure_bar=plants[i].buffer_pressure_bar,
            min_feasible_kg_per_h=min_load[i],
            max_feasible_kg_per_h=max_load[i],
            target_kg_per_h=targets[i],
            curtailed_by_budget=curtailed[i],
            started=started[i],
        )
        for i in range(n)
    ]
    return targets, records, used, reserved


def coordinate(
    plants: list[P2GPlant],
    surplus_kw: list[float],
    sng_budget_kg: float,
    dt_h: float,
) -> CoordinatorDirective:
    """One full coordination decision: setpoints plus methanation dispatch."""
    setpoints, buffer_capped = electrolyzer_setpoints(plants, surplus_kw, dt_h)
    targets, records, used, reserved = methanation_dispatch(plants, sng_budget_kg, dt_h)
    return CoordinatorDirective(
        electrolyzer_setpoint_kw=setpoints,
        methanation_target_kg_per_h=targets,
        budget_kg=sng_budget_kg,
        budget_used_kg=used,
        reserved_kg=reserved,
        buffer_capped=buffer_capped,
        plants_curtailed=[r.name for r in records if r.curtailed_by_budget],
        records=records,
    )
