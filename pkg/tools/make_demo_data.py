"""Regenerate the bundled demo datasets under ``src/p2gsim/data``.

Produces:

* ``en_topology_43.csv``    -- 43-bus, three-feeder 20 kV network
* ``gn_topology_45.csv``    -- 45-node medium-pressure gas network
* ``gn_topology_78.csv``    -- larger gas network used for model validation
* ``plants.json``           -- three identical 1.2 MW power-to-gas plants
* ``plants_episode.json``   -- same plants with preset buffer pressures
* ``cost_2030.json`` / ``cost_2050.json``
* ``scenario_demo.json``    -- full-year scenario with synthesized profiles
* ``scenario_episode.json`` + three one-day profile CSVs exercising the
  dispatch logic end to end (overnight methanation ramp-in on buffered
  hydrogen, midday linepack saturation with priority shedding, buffer-full
  electrolyzer caps, evening demand surge reopening the injection budget)

The gas geometry is deliberately on the soft side (long village laterals,
tapered main): the adaptive sub-stepping of the transient model hovers
near its per-sub-step pressure cap when pipes idle, and stiffer networks
would spend most of the simulation there.  The checks at the end fail the
generation if the geometry drifts out of the regime where a full-year run
stays fast, or if the episode no longer produces its dispatch story.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "p2gsim" / "data"

R_PU_PER_KM = 0.010   # 0.40 ohm/km on the 20 kV / 10 MVA base
X_PU_PER_KM = 0.0075

# branch lengths cycle through a fixed pattern instead of being random so
# that regeneration is trivially reproducible
_EN_LENGTHS_KM = (0.9, 0.7, 1.1, 0.8, 0.6, 1.0, 0.75, 0.85)
_GN_LATERAL_LENGTHS_M = (3000.0, 2800.0, 3200.0, 2900.0, 3100.0)


def _en_branches() -> list[tuple[str, str]]:
    feeder1 = [(1, 2), (2, 3), (3, 4), (4, 5), (3, 6), (4, 7), (5, 8)]
    feeder2 = [(9, 10), (10, 11), (11, 12), (12, 13), (13, 14),
               (10, 15), (11, 16), (12, 17), (13, 18), (14, 19),
               (16, 20), (17, 21), (18, 22), (19, 23)]
    feeder3 = [(24, 25), (25, 26), (26, 27), (27, 28), (28, 29), (29, 30),
               (25, 31), (26, 32), (27, 33), (28, 34), (29, 35), (30, 36),
               (31, 37), (32, 38), (33, 39), (34, 40), (35, 41), (36, 42), (37, 43)]
    return [(str(a), str(b)) for a, b in feeder1 + feeder2 + feeder3]


def write_en_topology(path: Path):
    rows = ["from,to,R_pu,X_pu,length_km"]
    for i, (a, b) in enumerate(_en_branches()):
        km = _EN_LENGTHS_KM[i % len(_EN_LENGTHS_KM)]
        rows.append(f"{a},{b},{R_PU_PER_KM * km:.6f},{X_PU_PER_KM * km:.6f},{km}")
    path.write_text("\n".join(rows) + "\n")


# trunk tapering: (diameter_mm, length_m) from the citygate outward
_GN45_TRUNK = [(200.0, 4000.0)] * 3 + [(160.0, 4000.0)] * 3 + [(110.0, 4000.0)] * 2
_GN45_LEAVES_PER_HUB = (4, 4, 5, 5, 5, 5, 4, 4)   # hubs are trunk nodes 2..9


def _gn45_pipes() -> list[tuple[str, str, float, float]]:
    pipes = []
    for k, (dia, length) in enumerate(_GN45_TRUNK):
        pipes.append((str(k + 1), str(k + 2), length, dia))
    leaf = len(_GN45_TRUNK) + 2
    for hub_pos, count in enumerate(_GN45_LEAVES_PER_HUB):
        hub = str(hub_pos + 2)
        for j in range(count):
            length = _GN_LATERAL_LENGTHS_M[(leaf + j) % len(_GN_LATERAL_LENGTHS_M)]
            dia = 75.0 if j == 0 and hub_pos < 2 else 63.0
            pipes.append((hub, str(leaf), length, dia))
            leaf += 1
    return pipes


_GN78_TRUNK = (
    [(250.0, 4000.0)] * 3 + [(200.0, 4000.0)] * 3 + [(160.0, 4000.0)] * 3
    + [(110.0, 4000.0)] * 3
)
_GN78_SUBMAIN = [(160.0, 3500.0)] * 2 + [(110.0, 3500.0)] * 2  # tees off trunk node 4


def _gn78_pipes() -> list[tuple[str, str, float, float]]:
    pipes = []
    for k, (dia, length) in enumerate(_GN78_TRUNK):
        pipes.append((str(k + 1), str(k + 2), length, dia))
    sub_start = len(_GN78_TRUNK) + 2   # first submain node id
    prev = "4"
    for k, (dia, length) in enumerate(_GN78_SUBMAIN):
        node = str(sub_start + k)
        pipes.append((prev, node, length, dia))
        prev = node
    hubs = [str(i) for i in range(2, len(_GN78_TRUNK) + 2)]          # 2..13
    hubs += [str(sub_start + k) for k in range(len(_GN78_SUBMAIN))]  # 14..17
    leaves_per_hub = [4] * 12 + [3, 3, 3, 4]
    leaf = sub_start + len(_GN78_SUBMAIN)
    for hub, count in zip(hubs, leaves_per_hub):
        for j in range(count):
            length = _GN_LATERAL_LENGTHS_M[(leaf + j) % len(_GN_LATERAL_LENGTHS_M)]
            pipes.append((hub, str(leaf), length, 63.0))
            leaf += 1
    return pipes


def write_gn_topology(path: Path, pipes: list[tuple[str, str, float, float]]):
    rows = ["from,to,length_m,diameter_mm"]
    for a, b, length, dia in pipes:
        rows.append(f"{a},{b},{length:g},{dia:g}")
    path.write_text("\n".join(rows) + "\n")


_PLANT_SITES = [
    ("P2G-1", "7", "4"),    # feeder 1 spur bus, gas trunk hub
    ("P2G-2", "11", "30"),  # feeder 2 trunk bus, mid-network village
    ("P2G-3", "30", "45"),  # feeder 3 end bus, remote village at the gas tail
]


def _plant_entry(name: str, en_bus: str, gn_node: str, p0_bar: float | None) -> dict:
    return {
        "name": name,
        "en_bus": en_bus,
        "gn_node": gn_node,
        "electrolyzer": {
            "nominal_power_kw": 1200.0,
            "standby_power_kw": 20.0,
            "min_load_fraction": 0.0,
            "specific_consumption_kwh_per_kg": 59.0,
            "o2_yield_kg_per_kg": 8.0,
            "heat_yield_kwh_per_kg": 3.5,
        },
        "buffer": {
            "volume_m3": 80.0,
            "temperature_k": 293.0,
            "p_max_bar": 30.0,
            "p_min_bar": 1.0,
            "meth_trigger_bar": 15.0,
        },
        "methanation": {
            "nominal_h2_intake_kg_per_h": 20.0,
            "ramp_up_kg_per_h_per_h": 3.8,
            "ramp_down_kg_per_h_per_h": 46.0,
            "co2_ratio_kg_per_kg": 5.5,
            "ch4_yield_kg_per_kg": 2.0,
            "sng_lhv_kwh_per_kg": 13.9,
            "heat_yield_kwh_per_kg": 4.7,
            "balancing_duration_steps": 2,
        },
        "initial_buffer_pressure_bar": p0_bar,
    }


def write_plants(path: Path, initial_pressures: list[float | None]):
    entries = [
        _plant_entry(name, en, gn, p0)
        for (name, en, gn), p0 in zip(_PLANT_SITES, initial_pressures)
    ]
    path.write_text(json.dumps(entries, indent=2) + "\n")


_GAS_LEAVES = [str(i) for i in range(10, 46)]
_GAS_DEMAND_NODES = [n for n in _GAS_LEAVES if n not in ("30", "45")]

_SCENARIO_COMMON = {
    "ng_lhv_kwh_per_kg": 13.1,
    "heating_intervals": [[[1, 1], [4, 15]], [[10, 15], [12, 31]]],
    "electrical_network": {
        "topology_csv": "en_topology_43.csv",
        "base_mva": 10.0,
        "base_kv": 20.0,
        "transformers": [
            {"id": "TR1", "root_bus": "1"},
            {"id": "TR2", "root_bus": "9"},
            {"id": "TR3", "root_bus": "24"},
        ],
    },
    "gas_network": {
        "topology_csv": "gn_topology_45.csv",
        "citygate_node": "1",
        "citygate_pressure_barg": 4.0,
        "p_min_barg": 1.5,
        "p_max_barg": 5.0,
    },
    "cost_scenario_json": "cost_2030.json",
}


def write_scenario_demo(path: Path):
    cfg = {
        "name": "municipal-demo",
        "seed": 0,
        **_SCENARIO_COMMON,
        "time_grid": {
            "step_minutes": 15,
            "step_count": 35040,
            "start_month": 1,
            "start_day": 1,
            "start_year": 2030,
        },
        "plants_json": "plants.json",
        "profile_synthesis": {
            # feeder RES/demand ratios spread the three plants over high,
            # middling and low utilization; totals stay at 14.3 MW PV, 4.4 MW WT
            "electric_demand_mw": {"TR1": 2.6, "TR2": 6.4, "TR3": 3.3},
            "pv_mw": {"TR1": 3.9, "TR2": 4.5, "TR3": 5.9},
            "wt_mw": {"TR1": 0.8, "TR2": 1.2, "TR3": 2.4},
            "load_buses": {
                "TR1": ["2", "3", "4", "5"],
                "TR2": ["10", "12", "13", "14", "16", "17", "18", "20", "21", "22"],
                "TR3": ["25", "26", "27", "28", "29", "31", "32", "33", "34",
                        "35", "37", "38", "39", "40"],
            },
            "res_buses": {
                "TR1": ["6", "8"],
                "TR2": ["15", "19", "23"],
                "TR3": ["36", "41", "42", "43"],
            },
            # low enough that summer-day SNG injection can outrun the summer
            # gas demand and the linepack budget binds now and then; winter
            # demand still dominates the seasonal picture at ~10x
            "gas_withdrawal_nodes": _GAS_DEMAND_NODES,
            "peak_gas_demand_mw": 5.0,
        },
    }
    path.write_text(json.dumps(cfg, indent=2) + "\n")


# ---------------------------------------------------------------------------
# one-day dispatch episode
# ---------------------------------------------------------------------------

EPISODE_STEPS = 96
_EP_RES_BUSES = {"6": 4000.0, "15": 4500.0, "41": 5500.0}   # bell amplitude, kW
_EP_LOAD_BUSES = {"4": 200.0, "13": 200.0, "28": 200.0}
_EP_GAS_NODES = ("13", "22", "27", "39")
# total network withdrawal by phase of day, kg/s
_EP_GAS_NIGHT = 0.010    # industrial night draw, delays linepack saturation
_EP_GAS_DAY = 0.002      # daytime minimum
_EP_GAS_SURGE = 0.040    # evening surge reopening the injection budget
_EP_SURGE_START_H = 17.5
# P2G-3 starts with the fullest buffer and the largest RES park behind it,
# so it stays the highest-pressure plant when the budget binds midday
_EP_INITIAL_BUFFER_BAR = [27.0, 25.0, 28.0]


def _episode_hours() -> np.ndarray:
    return np.arange(EPISODE_STEPS) * 0.25


def episode_profiles() -> tuple[dict, dict, dict]:
    hours = _episode_hours()
    bell = np.sin(np.pi * (hours - 6.0) / 13.0)
    bell = np.where((hours >= 6.0) & (hours <= 19.0), np.maximum(bell, 0.0), 0.0)
    res = {bus: amp * bell for bus, amp in _EP_RES_BUSES.items()}
    load = {bus: np.full(EPISODE_STEPS, kw) for bus, kw in _EP_LOAD_BUSES.items()}
    total = np.where(
        hours < 6.0, _EP_GAS_NIGHT, np.where(hours < _EP_SURGE_START_H, _EP_GAS_DAY, _EP_GAS_SURGE)
    )
    gas = {node: total / len(_EP_GAS_NODES) for node in _EP_GAS_NODES}
    return load, res, gas


def _write_profile_csv(path: Path, series: dict):
    cols = list(series)
    lines = [",".join(cols)]
    for t in range(EPISODE_STEPS):
        lines.append(",".join(repr(float(series[c][t])) for c in cols))
    path.write_text("\n".join(lines) + "\n")


def write_scenario_episode(path: Path):
    cfg = {
        "name": "injection-episode",
        "seed": 0,
        **_SCENARIO_COMMON,
        "time_grid": {
            "step_minutes": 15,
            "step_count": EPISODE_STEPS,
            "start_month": 7,
            "start_day": 15,
            "start_year": 2030,
        },
        "plants_json": "plants_episode.json",
        "profiles": {
            "electric_load_csv": "episode_electric_load.csv",
            "res_generation_csv": "episode_res_generation.csv",
            "gas_withdrawal_csv": "episode_gas_withdrawal.csv",
        },
    }
    path.write_text(json.dumps(cfg, indent=2) + "\n")


# ---------------------------------------------------------------------------
# generation checks
# ---------------------------------------------------------------------------

def _check_gas_geometry(scenario):
    """Stiffness, envelope and volume gates on the demo gas network."""
    from p2gsim.gas import GasState, steady_state_solve, step

    gn = scenario.gas_network
    vol = gn.total_volume_m3
    assert 950.0 <= vol <= 1150.0, f"network volume drifted: {vol:.0f} m3"

    # per-node stiffness proxy: sum of incident flow coefficients over volume.
    # Larger values mean the idle-network hover of the adaptive integrator
    # runs at smaller sub-steps (empirically ~5e4 sub-steps/day per unit).
    worst = 0.0
    for i in range(len(gn.nodes)):
        csum = sum(
            c for c, a, b in zip(gn._flow_coef, gn._i_from64, gn._i_to64) if i in (a, b)
        )
        if gn.volumes_m3[i] > 0:
            worst = max(worst, csum / gn.volumes_m3[i])
    assert worst <= 0.0095, f"gas geometry too stiff: max C/V {worst:.4f}"

    # winter-peak feasibility with a generous margin above the band floor
    wit = scenario.gas_withdrawal_kg_per_s()
    peak = wit.sum(axis=1).argmax()
    p = steady_state_solve(gn, wit[peak])
    margin = p.min() - gn.p_min_bar
    assert margin >= 0.8, f"winter-peak pressure margin too small: {margin:.2f} bar"

    # idle-regime sub-step budget (drives the full-year runtime)
    state = GasState.uniform(gn)
    idle = wit[wit.sum(axis=1).argmin()]
    for _ in range(12):
        state = step(gn, state, np.zeros(len(gn.nodes)), idle, 900.0)
    assert state.substeps <= 450, f"idle hover too expensive: {state.substeps} sub-steps"


def _check_validation_network():
    from p2gsim.gas import GasNetwork, Pipe, steady_state_solve

    pipes = [Pipe(a, b, length, dia) for a, b, length, dia in _gn78_pipes()]
    nodes: dict[str, None] = {"1": None}
    for a, b, *_ in _gn78_pipes():
        nodes.setdefault(a)
        nodes.setdefault(b)
    gn = GasNetwork(nodes=list(nodes), pipes=pipes, citygate="1")
    assert len(gn.nodes) == 78, len(gn.nodes)

    leaves = [n for n in gn.nodes if sum(1 for p in pipes if n in (p.from_node, p.to_node)) == 1]
    wit = np.zeros(len(gn.nodes))
    for leaf in leaves:
        wit[gn.node_index[leaf]] = 0.8 / len(leaves)
    p = steady_state_solve(gn, wit)
    margin = p.min() - gn.p_min_bar
    assert margin >= 0.5, f"78-node network infeasible at 0.8 kg/s: margin {margin:.2f} bar"


def _check_electrical(scenario):
    from p2gsim.electric import bfs_power_flow

    load = scenario.electric_load_kw()
    res = scenario.res_generation_kw()
    for label, t in (("peak-load", int(load.sum(axis=1).argmax())),
                     ("peak-res", int((res - load).sum(axis=1).argmax()))):
        sol = bfs_power_flow(scenario.electrical_network, res[t] - load[t])
        vmin, vmax = np.abs(sol.v_pu).min(), np.abs(sol.v_pu).max()
        assert 0.94 <= vmin and vmax <= 1.06, f"{label}: voltage out of band [{vmin:.3f}, {vmax:.3f}]"


def _check_episode(scenario):
    """The one-day episode must reproduce its full dispatch story."""
    from p2gsim.engine import run
    from p2gsim.plant import MethMode

    result = run(scenario)
    modes = result.plant["meth_mode"]
    started = result.plant["started"]
    curtailed = result.plant["curtailed_by_budget"]
    capped = result.plant["capped_by_buffer"]
    stored = result.plant["stored_h2_kg"]
    setpoint = result.plant["setpoint_effective_kw"]
    hours = _episode_hours()
    names = result.plant_names
    running = modes == MethMode.UP_AND_RUNNING.value

    # all buffers open above the trigger: every methanation starts at midnight
    # and runs through the night on buffered hydrogen
    assert started[0].all(), "not all plants started at midnight"
    assert (modes[0] == MethMode.REACTOR_BALANCING.value).all()
    assert running[4:24].all(), "a plant dropped out overnight"

    # linepack saturation mid-morning: injection exceeds what the network
    # can absorb and the budget starts binding
    sat = np.where(curtailed.any(axis=1))[0]
    assert sat.size, "budget never bound"
    t_sat = int(sat[0])
    assert 8.0 <= hours[t_sat] <= 15.0, f"saturation at {hours[t_sat]:.2f} h"

    # after the hard landing (ramp-down inertia overshoots the linepack cap,
    # the fleet collapses, restarts on the withdrawal trickle and re-binds)
    # the dispatch settles into one surviving plant: the fullest buffer keeps
    # a trickle matched to the withdrawal relief while the others are shed
    t_surge = int(_EP_SURGE_START_H * 4)
    trough = slice(56, t_surge)          # 14:00 .. surge
    per_step = running[trough].sum(axis=1)
    assert (per_step == 1).all(), f"expected one surviving plant, got {per_step}"
    survivor = int(np.where(running[trough.start])[0][0])
    assert names[survivor] == "P2G-3", f"survivor drifted to {names[survivor]}"
    assert curtailed[trough, survivor].any(), "survivor never ran budget-limited"

    # the ordered shed: at the last fleet contraction before the stable
    # trough, the plant kept running is the one with the most stored H2
    contractions = [
        t for t in range(t_sat, trough.start)
        if running[t].sum() >= 2 and running[t + 1].sum() == 1
    ]
    assert contractions, "no ordered shed before the stable trough"
    t_shed = contractions[-1]
    kept = int(np.where(running[t_shed + 1])[0][0])
    assert kept == int(stored[t_shed].argmax()), "survivor is not the fullest buffer"
    assert kept == survivor

    # decoupling: methanation curtailment does not slow the electrolyzers --
    # the shed plants keep absorbing at full power until their buffers cap
    shed = [i for i in range(len(names)) if i != survivor]
    for i in shed:
        t_cap = np.where(capped[:, i])[0]
        assert t_cap.size, f"{names[i]} never hit its buffer ceiling"
        t_cap = int(t_cap[0])
        assert 13.0 <= hours[t_cap] <= 17.5, f"{names[i]} capped at {hours[t_cap]:.2f} h"
        window = slice(t_sat, t_cap)
        assert (setpoint[window, i] > 1000.0).all(), (
            f"{names[i]} electrolyzer throttled before the buffer filled"
        )
        assert setpoint[t_cap, i] < setpoint[t_cap - 1, i], (
            f"{names[i]} cap did not reduce the electrolyzer setpoint"
        )

    # the evening gas surge reopens the budget: shed plants restart
    assert started[t_surge : t_surge + 10][:, shed].any(axis=0).all(), (
        "shed plants did not restart after the evening surge"
    )
    assert running[-8:].sum(axis=1).max() == 3, "fleet did not recover by late evening"

    print("episode milestones:")
    print(f"  saturation step {t_sat} ({hours[t_sat]:.2f} h), survivor {names[survivor]}")
    for label, arr in (("started", started), ("curtailed", curtailed), ("capped", capped)):
        steps = np.where(arr.any(axis=1))[0]
        shown = ", ".join(str(s) for s in steps[:10])
        print(f"  {label}: steps [{shown}{', ...' if steps.size > 10 else ''}]")
    return result


def main():
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    write_en_topology(DATA_DIR / "en_topology_43.csv")
    write_gn_topology(DATA_DIR / "gn_topology_45.csv", _gn45_pipes())
    write_gn_topology(DATA_DIR / "gn_topology_78.csv", _gn78_pipes())
    write_plants(DATA_DIR / "plants.json", [None, None, None])
    write_plants(DATA_DIR / "plants_episode.json", list(_EP_INITIAL_BUFFER_BAR))
    (DATA_DIR / "cost_2030.json").write_text(json.dumps({"base_year": 2030}, indent=2) + "\n")
    (DATA_DIR / "cost_2050.json").write_text(json.dumps({"base_year": 2050}, indent=2) + "\n")
    write_scenario_demo(DATA_DIR / "scenario_demo.json")

    load, res, gas = episode_profiles()
    _write_profile_csv(DATA_DIR / "episode_electric_load.csv", load)
    _write_profile_csv(DATA_DIR / "episode_res_generation.csv", res)
    _write_profile_csv(DATA_DIR / "episode_gas_withdrawal.csv", gas)
    write_scenario_episode(DATA_DIR / "scenario_episode.json")

    from p2gsim.scenario import load_scenario

    demo = load_scenario(DATA_DIR / "scenario_demo.json")
    episode = load_scenario(DATA_DIR / "scenario_episode.json")
    _check_gas_geometry(demo)
    _check_validation_network()
    _check_electrical(demo)
    _check_episode(episode)
    print(f"wrote {len(list(DATA_DIR.iterdir()))} files to {DATA_DIR}")


if __name__ == "__main__":
    main()
