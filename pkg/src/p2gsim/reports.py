"""Report emission: plot-ready CSVs and a deterministic run manifest.

Everything written here is a pure function of the simulation result
and scenario — no timestamps, hostnames or other environment leakage —
so two runs with the same config and seed produce byte-identical
files.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np
import pandas as pd

from p2gsim.economics import CostScenario, sensitivity_sweep
from p2gsim.engine import SimulationResult, aggregate, annual_accounts
from p2gsim.plant import MethMode
from p2gsim.scenario import Scenario

SURPLUS_PRICE_GRID_EUR_PER_MWH = (0.0, 5.0, 15.0, 30.0)


def _write_frame(frame: pd.DataFrame, path: Path):
    frame.to_csv(path, index=False, lineterminator="\n")


def _timeseries_electric(result: SimulationResult) -> pd.DataFrame:
    data = {"step": np.arange(result.step_count)}
    for key, values in result.electric.items():
        for j, tr in enumerate(result.transformer_ids):
            data[f"{tr}_{key}"] = values[:, j]
    return pd.DataFrame(data)


def _timeseries_plants(result: SimulationResult) -> pd.DataFrame:
    data = {"step": np.arange(result.step_count)}
    for key, values in result.plant.items():
        for i, name in enumerate(result.plant_names):
            column = values[:, i]
            data[f"{name}_{key}"] = column.astype(int) if column.dtype == bool else column
    return pd.DataFrame(data)


def _timeseries_gas(result: SimulationResult) -> pd.DataFrame:
    data = {"step": np.arange(result.step_count)}
    data.update({key: values for key, values in result.gas.items()})
    return pd.DataFrame(data)


def _dispatch_log(result: SimulationResult) -> pd.DataFrame:
    """One row per noteworthy plant event: starts, curtailments, buffer
    caps and methanation mode changes."""
    rows = []
    pl = result.plant
    for i, name in enumerate(result.plant_names):
        modes = pl["meth_mode"][:, i]
        previous = modes[0]
        for t in range(result.step_count):
            events = []
            if t > 0 and modes[t] != previous:
                events.append(f"mode_{MethMode(int(previous)).name}_to_{MethMode(int(modes[t])).name}")
            previous = modes[t]
            if pl["started"][t, i]:
                events.append("start_committed")
            if pl["curtailed_by_budget"][t, i]:
                events.append("budget_curtailment")
            if pl["capped_by_buffer"][t, i]:
                events.append("buffer_full_cap")
            for event in events:
                rows.append(
                    {
                        "step": t,
                        "plant": name,
                        "event": event,
                        "meth_mode": int(modes[t]),
                        "meth_target_kg_per_h": pl["meth_target_kg_per_h"][t, i],
                        "meth_load_kg_per_h": pl["meth_load_kg_per_h"][t, i],
                        "buffer_pressure_bar": pl["buffer_pressure_bar"][t, i],
                        "setpoint_effective_kw": pl["setpoint_effective_kw"][t, i],
                    }
                )
    frame = pd.DataFrame(
        rows,
        columns=[
            "step",
            "plant",
            "event",
            "meth_mode",
            "meth_target_kg_per_h",
            "meth_load_kg_per_h",
            "buffer_pressure_bar",
            "setpoint_effective_kw",
        ],
    )
    return frame.sort_values(["step", "plant", "event"], kind="stable").reset_index(drop=True)


def _duration_curves(result: SimulationResult) -> pd.DataFrame:
    """Each column independently sorted non-increasing (load-duration style)."""
    series = {
        "total_el_demand_kw": result.electric["el_demand_kw"].sum(axis=1),
        "total_res_kw": result.electric["res_kw"].sum(axis=1),
        "total_gas_demand_kg_per_s": result.gas["withdrawal_kg_per_s"],
    }
    for j, tr in enumerate(result.transformer_ids):
        series[f"{tr}_surplus_kw"] = result.electric["surplus_kw"][:, j]
        series[f"{tr}_rpf_kw"] = result.electric["rpf_kw"][:, j]
    for i, name in enumerate(result.plant_names):
        series[f"{name}_electricity_kw"] = result.plant["electricity_kwh"][:, i] / result.dt_h
    data = {"rank": np.arange(result.step_count)}
    data.update({k: np.sort(v)[::-1] for k, v in series.items()})
    return pd.DataFrame(data)


def _lc_grid(result: SimulationResult, scenario: Scenario) -> pd.DataFrame:
    accounts = annual_accounts(result)
    sizing = {p.name: p.sizing() for p in scenario.plants}
    return sensitivity_sweep(
        accounts,
        sizing,
        [CostScenario.scenario_2030(), CostScenario.scenario_2050()],
        SURPLUS_PRICE_GRID_EUR_PER_MWH,
    )


def _accounts_frame(result: SimulationResult) -> pd.DataFrame:
    rows = []
    for name, acc in annual_accounts(result).items():
        row = {"plant": name}
        row.update(
            {
                "surplus_energy_mwh": acc.surplus_energy_mwh,
                "deficit_energy_mwh": acc.deficit_energy_mwh,
                "sng_mwh": acc.sng_mwh,
                "co2_t": acc.co2_t,
                "o2_t": acc.o2_t,
                "heat_mwh": acc.heat_mwh,
            }
        )
        rows.append(row)
    return pd.DataFrame(
        rows,
        columns=[
            "plant",
            "surplus_energy_mwh",
            "deficit_energy_mwh",
            "sng_mwh",
            "co2_t",
            "o2_t",
            "heat_mwh",
        ],
    )


def emit_reports(result: SimulationResult, scenario: Scenario, out_dir) -> dict:
    """Write all report files into ``out_dir``; returns {filename: path}.

    A ``run_manifest.json`` records the scenario name, seed, config
    hash and the SHA-256 of every emitted file.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seasonal = aggregate(result, scenario)

    frames = {
        "timeseries_electric.csv": _timeseries_electric(result),
        "timeseries_plants.csv": _timeseries_plants(result),
        "timeseries_gas.csv": _timeseries_gas(result),
        "seasonal_electric.csv": seasonal["electric"],
        "seasonal_gas.csv": seasonal["gas"],
        "seasonal_plants.csv": seasonal["plants"],
        "dispatch_log.csv": _dispatch_log(result),
        "duration_curves.csv": _duration_curves(result),
        "annual_accounts.csv": _accounts_frame(result),
        "gas_node_envelope.csv": pd.DataFrame(
            {
                "node": result.gas_node_ids,
                "p_min_bar": result.node_p_min_bar,
                "p_max_bar": result.node_p_max_bar,
            }
        ),
        "gas_state_final.csv": pd.DataFrame(
            {
                "node": result.gas_node_ids,
                "pressure_bar_abs": result.final_gas_pressure_bar,
            }
        ),
    }
    if scenario.plants:
        frames["lc_sng_grid.csv"] = _lc_grid(result, scenario)

    paths = {}
    checksums = {}
    for name, frame in sorted(frames.items()):
        path = out / name
        _write_frame(frame, path)
        paths[name] = path
        checksums[name] = hashlib.sha256(path.read_bytes()).hexdigest()

    manifest = {
        "scenario": result.scenario_name,
        "seed": result.seed,
        "config_hash": result.config_hash,
        "step_count": result.step_count,
        "files": checksums,
    }
    manifest_path = out / "run_manifest.json"
    with open(manifest_path, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    paths["run_manifest.json"] = manifest_path
    return paths
