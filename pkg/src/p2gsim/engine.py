"""Co-simulation engine: the per-timestep coupling loop and aggregation.

Each 15-minute step runs a fixed causal sequence:

1. tentative power flow with all plants at standby, giving each
   feeder's RES surplus and the reverse power flow that would occur
   without P2G response;
2. electrolyzer setpoints from the per-feeder surplus;
3. SNG injection budget from the gas network's current linepack state;
4. methanation dispatch against that budget;
5. plant steps (electrolyzer → hydrogen buffer → methanation);
6. gas-network step with the plants' SNG injections and the demand
   withdrawals;
7. final power flow with the dispatched plant loads, giving the
   reported transformer imports and reverse flows;
8. record.

The gas budget therefore reacts to the previous step's pressures (no
within-step fixed point), which reproduces the one-step delay between
linepack saturation and methanation curtailment.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from p2gsim import gas as gaslib
from p2gsim.coordinator import coordinate
from p2gsim.economics import AnnualAccounts
from p2gsim.electric import PowerFlowError, bfs_power_flow, transformer_balance
from p2gsim.gas import (
    GasIntegrationError,
    GasNetwork,
    GasSolveError,
    GasState,
    steady_state_solve,
)
from p2gsim.plant import ControlError, P2GPlant
from p2gsim.scenario import Scenario, scenario_fingerprint
from p2gsim.timegrid import season_mask


class SimulationError(RuntimeError):
    """A module failure during the time loop, annotated with the timestep."""


@dataclass
class SimulationResult:
    """Per-timestep record arrays plus run metadata.

    ``electric`` arrays have shape (steps, transformers), ``plant``
    arrays (steps, plants), ``gas`` arrays (steps,).  Node-wise gas
    pressure envelopes are tracked as running min/max over the run.
    """

    scenario_name: str
    seed: int
    config_hash: str
    step_count: int
    dt_h: float
    transformer_ids: list[str]
    plant_names: list[str]
    gas_node_ids: list[str]
    electric: dict = field(repr=False)
    plant: dict = field(repr=False)
    gas: dict = field(repr=False)
    node_p_min_bar: np.ndarray = field(repr=False)
    node_p_max_bar: np.ndarray = field(repr=False)
    stored_mass_start_kg: float = 0.0
    stored_mass_end_kg: float = 0.0
    final_gas_pressure_bar: np.ndarray = field(default=None, repr=False)


_ELECTRIC_KEYS = (
    "el_demand_kw",
    "res_kw",
    "surplus_kw",
    "import_kw",
    "rpf_kw",
    "standby_rpf_kw",
    "absorbed_kw",
)
_PLANT_FLOAT_KEYS = (
    "setpoint_requested_kw",
    "setpoint_effective_kw",
    "electricity_kwh",
    "surplus_electricity_kwh",
    "deficit_electricity_kwh",
    "h2_produced_kg",
    "h2_to_methanation_kg",
    "stored_h2_kg",
    "buffer_pressure_bar",
    "meth_load_kg_per_h",
    "meth_target_kg_per_h",
    "sng_kg",
    "sng_kwh",
    "co2_t",
    "o2_t",
    "heat_kwh",
)
_GAS_KEYS = (
    "p_min_bar",
    "p_mean_bar",
    "p_max_bar",
    "citygate_kg_per_s",
    "budget_kg",
    "sng_injected_kg",
    "withdrawal_kg_per_s",
    "stored_mass_kg",
)


def _stamp(grid, t: int) -> str:
    minute = grid.minute_of_day(t)
    return f"day {grid.day_index(t)}, {minute // 60:02d}:{minute % 60:02d}"


def run(scenario: Scenario) -> SimulationResult:
    """Simulate the full horizon; deterministic for a given scenario."""
    grid = scenario.time_grid
    en = scenario.electrical_network
    gn = scenario.gas_network
    dt_h = grid.dt_hours
    dt_s = grid.dt_seconds
    steps = grid.step_count

    load = scenario.electric_load_kw()
    res = scenario.res_generation_kw()
    withdrawal = scenario.gas_withdrawal_kg_per_s()

    plants = [P2GPlant(cfg) for cfg in scenario.plants]
    plant_bus = [en.bus_index[cfg.en_bus] for cfg in scenario.plants]
    plant_gn = [gn.node_index[cfg.gn_node] for cfg in scenario.plants]
    plant_feeder = [int(en.feeder_of[b]) for b in plant_bus]
    feeder_share = [plant_feeder.count(f) for f in plant_feeder]
    n_tr = len(en.transformers)
    n_pl = len(plants)
    n_gn = len(gn.nodes)

    electric = {k: np.zeros((steps, n_tr)) for k in _ELECTRIC_KEYS}
    plant = {k: np.zeros((steps, n_pl)) for k in _PLANT_FLOAT_KEYS}
    plant["meth_mode"] = np.zeros((steps, n_pl), dtype=np.int8)
    plant["capped_by_buffer"] = np.zeros((steps, n_pl), dtype=bool)
    plant["curtailed_by_budget"] = np.zeros((steps, n_pl), dtype=bool)
    plant["started"] = np.zeros((steps, n_pl), dtype=bool)
    gas = {k: np.zeros(steps) for k in _GAS_KEYS}
    gas["substeps"] = np.zeros(steps, dtype=np.int64)

    gas_state = GasState.uniform(gn)
    node_p_min = gas_state.pressure_bar.copy()
    node_p_max = gas_state.pressure_bar.copy()
    stored_start = gaslib.stored_mass(gn, gas_state.pressure_bar)

    standby_draw = np.zeros(len(en.buses))
    for i, p in enumerate(plants):
        standby_draw[plant_bus[i]] += p.config.electrolyzer.standby_power_kw
    feeder_members = [en.feeder_of == f for f in range(n_tr)]

    for t in range(steps):
        try:
            base_inj = res[t] - load[t]

            # 1: what the feeders look like with the plants quiet
            tentative = bfs_power_flow(en, base_inj - standby_draw)
            tentative_bal = transformer_balance(en, tentative, load[t], res[t])
            feeder_surplus = [b.surplus_kw for b in tentative_bal]

            # 2-4: coordination against the pre-step gas state
            budget = gaslib.max_sng_injectable(gn, gas_state, withdrawal[t], dt_s)
            plant_surplus = [
                feeder_surplus[plant_feeder[i]] / feeder_share[i] for i in range(n_pl)
            ]
            directive = coordinate(plants, plant_surplus, budget, dt_h)

            # 5: plant states advance
            plant_draw = np.zeros(len(en.buses))
            gas_inject = np.zeros(n_gn)
            for i, p in enumerate(plants):
                result = p.step(
                    directive.electrolyzer_setpoint_kw[i],
                    directive.methanation_target_kg_per_h[i],
                    dt_h,
                    surplus_kw=plant_surplus[i],
                )
                plant_draw[plant_bus[i]] += result.effective_setpoint_kw
                gas_inject[plant_gn[i]] += result.sng_kg / dt_s
                rec = directive.records[i]
                plant["setpoint_requested_kw"][t, i] = result.requested_setpoint_kw
                plant["setpoint_effective_kw"][t, i] = result.effective_setpoint_kw
                plant["electricity_kwh"][t, i] = result.electricity_kwh
                plant["surplus_electricity_kwh"][t, i] = result.surplus_electricity_kwh
                plant["deficit_electricity_kwh"][t, i] = result.deficit_electricity_kwh
                plant["h2_produced_kg"][t, i] = result.h2_produced_kg
                plant["h2_to_methanation_kg"][t, i] = result.h2_to_methanation_kg
                plant["stored_h2_kg"][t, i] = p.stored_h2_kg
                plant["buffer_pressure_bar"][t, i] = result.buffer_pressure_bar
                plant["meth_load_kg_per_h"][t, i] = result.meth_load_kg_per_h
                plant["meth_target_kg_per_h"][t, i] = rec.target_kg_per_h
                plant["sng_kg"][t, i] = result.sng_kg
                plant["sng_kwh"][t, i] = result.sng_kwh
                plant["co2_t"][t, i] = result.co2_consumed_t
                plant["o2_t"][t, i] = result.o2_produced_t
                plant["heat_kwh"][t, i] = result.heat_kwh
                plant["meth_mode"][t, i] = int(result.meth_mode)
                plant["capped_by_buffer"][t, i] = (
                    result.capped_by_buffer or directive.buffer_capped[i]
                )
                plant["curtailed_by_budget"][t, i] = rec.curtailed_by_budget
                plant["started"][t, i] = rec.started

            # 6: gas network advances under injections + withdrawals
            gas_state = gaslib.step(gn, gas_state, gas_inject, withdrawal[t], dt_s)
            np.minimum(node_p_min, gas_state.pressure_bar, out=node_p_min)
            np.maximum(node_p_max, gas_state.pressure_bar, out=node_p_max)

            # 7: the grid as actually operated
            final = bfs_power_flow(en, base_inj - plant_draw)
            balance = transformer_balance(en, final, load[t], res[t])

            # 8: record
            for j, bal in enumerate(balance):
                electric["el_demand_kw"][t, j] = load[t][feeder_members[j]].sum()
                electric["res_kw"][t, j] = res[t][feeder_members[j]].sum()
                electric["surplus_kw"][t, j] = bal.surplus_kw
                electric["import_kw"][t, j] = bal.import_kw
                electric["rpf_kw"][t, j] = bal.rpf_kw
                electric["standby_rpf_kw"][t, j] = tentative_bal[j].rpf_kw
                electric["absorbed_kw"][t, j] = bal.surplus_kw - bal.rpf_kw
            gas["p_min_bar"][t] = gas_state.pressure_bar.min()
            gas["p_mean_bar"][t] = gaslib.mean_pressure(gn, gas_state.pressure_bar)
            gas["p_max_bar"][t] = gas_state.pressure_bar.max()
            gas["citygate_kg_per_s"][t] = gas_state.citygate_flow_kg_per_s
            gas["budget_kg"][t] = budget
            gas["sng_injected_kg"][t] = gas_inject.sum() * dt_s
            gas["withdrawal_kg_per_s"][t] = withdrawal[t].sum()
            gas["stored_mass_kg"][t] = gaslib.stored_mass(gn, gas_state.pressure_bar)
            gas["substeps"][t] = gas_state.substeps
        except (PowerFlowError, GasIntegrationError, GasSolveError, ControlError, ValueError) as exc:
            raise SimulationError(f"step {t} ({_stamp(grid, t)}): {exc}") from exc

    return SimulationResult(
        scenario_name=scenario.name,
        seed=scenario.seed,
        config_hash=scenario_fingerprint(scenario),
        step_count=steps,
        dt_h=dt_h,
        transformer_ids=[tr.id for tr in en.transformers],
        plant_names=[p.name for p in scenario.plants],
        gas_node_ids=list(gn.nodes),
        electric=electric,
        plant=plant,
        gas=gas,
        node_p_min_bar=node_p_min,
        node_p_max_bar=node_p_max,
        stored_mass_start_kg=stored_start,
        stored_mass_end_kg=float(gas["stored_mass_kg"][-1]) if steps else stored_start,
        final_gas_pressure_bar=gas_state.pressure_bar.copy(),
    )


# --------------------------------------------------------------------------
# seasonal aggregation


def _season_masks(scenario: Scenario) -> dict:
    heating = season_mask(scenario.time_grid, scenario.calendar)
    return {
        "heating": heating,
        "non_heating": ~heating,
        "whole_year": np.ones_like(heating),
    }


def aggregate(result: SimulationResult, scenario: Scenario) -> dict:
    """Seasonal tables: per-transformer, gas network and per-plant totals.

    Returns long-format DataFrames keyed ``electric``, ``gas``,
    ``plants``.  Energies in MWh, masses in t; ``Tot`` rows sum the
    individual transformers/plants.
    """
    masks = _season_masks(scenario)
    dt_h = result.dt_h
    lhv = scenario.ng_lhv_kwh_per_kg
    el, ga, pl = result.electric, result.gas, result.plant

    electric_rows = []
    for season, mask in masks.items():
        per_tr = {
            key: el[key][mask].sum(axis=0) * dt_h / 1000.0
            for key in ("el_demand_kw", "res_kw", "surplus_kw", "absorbed_kw", "rpf_kw")
        }
        for j, tr_id in enumerate(result.transformer_ids + ["Tot"]):
            pick = (lambda v: v[j]) if j < len(result.transformer_ids) else np.sum
            electric_rows.append(
                {
                    "season": season,
                    "transformer": tr_id,
                    "el_demand_mwh": pick(per_tr["el_demand_kw"]),
                    "res_mwh": pick(per_tr["res_kw"]),
                    "surplus_mwh": pick(per_tr["surplus_kw"]),
                    "absorbed_surplus_mwh": pick(per_tr["absorbed_kw"]),
                    "rpf_mwh": pick(per_tr["rpf_kw"]),
                }
            )

    gas_rows = []
    dt_s = dt_h * 3600.0
    for season, mask in masks.items():
        demand_kg = float(ga["withdrawal_kg_per_s"][mask].sum() * dt_s)
        import_kg = float(ga["citygate_kg_per_s"][mask].sum() * dt_s)
        sng_kg = float(ga["sng_injected_kg"][mask].sum())
        sng_mwh = float(result.plant["sng_kwh"][mask].sum() / 1000.0) if result.plant_names else 0.0
        demand_mwh = demand_kg * lhv / 1000.0
        gas_rows.append(
            {
                "season": season,
                "ng_demand_mwh": demand_mwh,
                "ng_imported_mwh": import_kg * lhv / 1000.0,
                "sng_mwh": sng_mwh,
                "ng_imported_share": (import_kg / demand_kg) if demand_kg else 0.0,
                "sng_share": (sng_mwh / demand_mwh) if demand_mwh else 0.0,
                "ng_demand_t": demand_kg / 1000.0,
                "ng_imported_t": import_kg / 1000.0,
                "sng_t": sng_kg / 1000.0,
                "linepack_delta_t": (import_kg + sng_kg - demand_kg) / 1000.0,
            }
        )

    plant_rows = []
    quantities = {
        "el_cons_mwh": ("electricity_kwh", 1e-3),
        "surplus_el_mwh": ("surplus_electricity_kwh", 1e-3),
        "deficit_el_mwh": ("deficit_electricity_kwh", 1e-3),
        "h2_t": ("h2_produced_kg", 1e-3),
        "sng_mwh": ("sng_kwh", 1e-3),
        "sng_t": ("sng_kg", 1e-3),
        "co2_t": ("co2_t", 1.0),
        "o2_t": ("o2_t", 1.0),
        "heat_mwh": ("heat_kwh", 1e-3),
    }
    for season, mask in masks.items():
        per_plant = {
            out: pl[key][mask].sum(axis=0) * scale for out, (key, scale) in quantities.items()
        }
        for i, name in enumerate(result.plant_names + ["Tot"]):
            pick = (lambda v: v[i]) if i < len(result.plant_names) else np.sum
            row = {"season": season, "plant": name}
            row.update({out: float(pick(v)) for out, v in per_plant.items()})
            plant_rows.append(row)

    return {
        "electric": pd.DataFrame(electric_rows),
        "gas": pd.DataFrame(gas_rows),
        "plants": pd.DataFrame(plant_rows),
    }


def annual_accounts(result: SimulationResult) -> dict:
    """Whole-year per-plant accounts in the economics module's units."""
    pl = result.plant
    accounts = {}
    for i, name in enumerate(result.plant_names):
        accounts[name] = AnnualAccounts(
            surplus_energy_mwh=float(pl["surplus_electricity_kwh"][:, i].sum()) / 1000.0,
            deficit_energy_mwh=float(pl["deficit_electricity_kwh"][:, i].sum()) / 1000.0,
            sng_mwh=float(pl["sng_kwh"][:, i].sum()) / 1000.0,
            co2_t=float(pl["co2_t"][:, i].sum()),
            o2_t=float(pl["o2_t"][:, i].sum()),
            heat_mwh=float(pl["heat_kwh"][:, i].sum()) / 1000.0,
        )
    return accounts


# --------------------------------------------------------------------------
# gas-model validation harness


@dataclass(frozen=True)
class GasValidationResult:
    max_rel_error: float
    worst_node: str
    transient_pressure_bar: np.ndarray = field(repr=False)
    steady_pressure_bar: np.ndarray = field(repr=False)
    hours_simulated: float = 0.0


def validate_gas_model(
    network: GasNetwork,
    withdrawal_kg_per_s,
    injection_kg_per_s=None,
    max_hours: float = 96.0,
    settle_tol_bar: float = 1e-4,
) -> GasValidationResult:
    """March the transient model to stationarity and compare with the
    Newton steady-state solution under the same constant boundary
    conditions.  Returns the node-wise worst relative pressure error.
    """
    withdrawal = np.asarray(withdrawal_kg_per_s, dtype=float)
    injection = (
        np.zeros_like(withdrawal)
        if injection_kg_per_s is None
        else np.asarray(injection_kg_per_s, dtype=float)
    )
    steady = steady_state_solve(network, withdrawal, injection)

    state = GasState.uniform(network)
    chunk_s = 3600.0
    hours = 0.0
    while hours < max_hours:
        previous = state.pressure_bar
        state = gaslib.step(network, state, injection, withdrawal, chunk_s)
        hours += chunk_s / 3600.0
        if np.abs(state.pressure_bar - previous).max() < settle_tol_bar:
            break

    rel = np.abs(state.pressure_bar - steady) / steady
    worst = int(np.argmax(rel))
    return GasValidationResult(
        max_rel_error=float(rel[worst]),
        worst_node=network.nodes[worst],
        transient_pressure_bar=state.pressure_bar.copy(),
        steady_pressure_bar=steady,
        hours_simulated=hours,
    )
