"""Scenario ingestion: root JSON config, CSV topologies and profiles.

A scenario bundles everything one simulation needs: time grid, season
calendar, both networks, plant configurations, cost assumptions and the
per-node profiles.  ``load_scenario`` reads a root JSON document whose
relative paths point at the topology/profile CSVs; ``save_scenario``
writes the same layout back out, and a loaded scenario round-trips to
an identical in-memory value.

File formats
------------
* electric topology CSV: header ``from,to,R_pu,X_pu,length_km``
* gas topology CSV: header ``from,to,length_m,diameter_mm``
* profile CSV (one per role): header row of node ids, one column per
  node, one row per timestep
* plants: JSON array of plant objects
* cost scenario: JSON object, either full fields or ``{"base_year":
  2030/2050, ...overrides}``

All numeric config keys carry their unit as a suffix
(``citygate_pressure_barg``, ``peak_gas_demand_mw``, ...).
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import pandas as pd

from p2gsim.economics import CostScenario
from p2gsim.electric import Branch, ElectricalNetwork, Transformer
from p2gsim.gas import GasNetwork, GasProperties, Pipe
from p2gsim.plant import (
    ElectrolyzerConfig,
    H2BufferConfig,
    MethanationConfig,
    P2GPlantConfig,
)
from p2gsim.profiles import (
    Profile,
    ProfileRole,
    SynthesisTargets,
    synthesize_demo_profiles,
)
from p2gsim.timegrid import SeasonCalendar, TimeGrid


class ScenarioError(ValueError):
    """Raised for malformed or inconsistent scenario inputs (with file context)."""


_ROLE_ORDER = {
    ProfileRole.ELECTRIC_LOAD_KW: 0,
    ProfileRole.RES_GENERATION_KW: 1,
    ProfileRole.GAS_WITHDRAWAL_KG_PER_S: 2,
}

_EN_HEADER = ["from", "to", "R_pu", "X_pu", "length_km"]
_GN_HEADER = ["from", "to", "length_m", "diameter_mm"]


@dataclass(frozen=True)
class Scenario:
    """Fully validated simulation input set.

    Profiles are stored in canonical order (role, then network node
    order) so that equal scenarios compare equal regardless of the
    order they were assembled in.
    """

    name: str
    time_grid: TimeGrid
    calendar: SeasonCalendar
    electrical_network: ElectricalNetwork
    gas_network: GasNetwork
    plants: tuple[P2GPlantConfig, ...]
    cost_scenario: CostScenario
    profiles: tuple[Profile, ...]
    seed: int = 0
    ng_lhv_kwh_per_kg: float = 13.1

    def __post_init__(self):
        if self.ng_lhv_kwh_per_kg <= 0:
            raise ScenarioError(f"NG LHV must be positive: {self.ng_lhv_kwh_per_kg}")
        object.__setattr__(self, "plants", tuple(self.plants))

        names = [p.name for p in self.plants]
        if len(set(names)) != len(names):
            raise ScenarioError(f"duplicate plant names: {sorted(names)}")
        for plant in self.plants:
            if plant.en_bus not in self.electrical_network.bus_index:
                raise ScenarioError(
                    f"plant {plant.name!r} references unknown electric bus {plant.en_bus!r}"
                )
            if plant.gn_node not in self.gas_network.node_index:
                raise ScenarioError(
                    f"plant {plant.name!r} references unknown gas node {plant.gn_node!r}"
                )

        ordered = sorted(tuple(self.profiles), key=self._profile_rank)
        object.__setattr__(self, "profiles", tuple(ordered))
        seen = set()
        for prof in self.profiles:
            if prof.role == ProfileRole.GAS_WITHDRAWAL_KG_PER_S:
                index, where = self.gas_network.node_index, "gas network"
            else:
                index, where = self.electrical_network.bus_index, "electric network"
            if prof.node_id not in index:
                raise ScenarioError(
                    f"{prof.role.value} profile references unknown {where} node {prof.node_id!r}"
                )
            if len(prof.samples) != self.time_grid.step_count:
                raise ScenarioError(
                    f"{prof.role.value} profile at node {prof.node_id!r} has "
                    f"{len(prof.samples)} samples, expected {self.time_grid.step_count}"
                )
            key = (prof.role, prof.node_id)
            if key in seen:
                raise ScenarioError(
                    f"duplicate {prof.role.value} profile for node {prof.node_id!r}"
                )
            seen.add(key)

    def _profile_rank(self, prof: Profile) -> tuple:
        if prof.role == ProfileRole.GAS_WITHDRAWAL_KG_PER_S:
            index = self.gas_network.node_index
        else:
            index = self.electrical_network.bus_index
        # unknown nodes sort last; they are rejected right after ordering
        node_pos = index.get(prof.node_id, len(index))
        return (_ROLE_ORDER[prof.role], node_pos, prof.node_id)

    def _dense(self, role: ProfileRole, index: dict, width: int) -> np.ndarray:
        out = np.zeros((self.time_grid.step_count, width))
        for prof in self.profiles:
            if prof.role == role:
                out[:, index[prof.node_id]] += prof.samples
        return out

    def electric_load_kw(self) -> np.ndarray:
        """Load matrix (step_count, n_buses) aligned with network bus order."""
        net = self.electrical_network
        return self._dense(ProfileRole.ELECTRIC_LOAD_KW, net.bus_index, len(net.buses))

    def res_generation_kw(self) -> np.ndarray:
        net = self.electrical_network
        return self._dense(ProfileRole.RES_GENERATION_KW, net.bus_index, len(net.buses))

    def gas_withdrawal_kg_per_s(self) -> np.ndarray:
        net = self.gas_network
        return self._dense(ProfileRole.GAS_WITHDRAWAL_KG_PER_S, net.node_index, len(net.nodes))


# --------------------------------------------------------------------------
# loading


def _read_json(path: Path) -> dict:
    if not path.exists():
        raise ScenarioError(f"{path}: file not found")
    try:
        with open(path) as handle:
            return json.load(handle)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None


def _from_mapping(cls, mapping, context: str):
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{context}: expected an object, got {type(mapping).__name__}")
    allowed = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ScenarioError(f"{context}: unknown keys {unknown}")
    try:
        return cls(**mapping)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{context}: {exc}") from None


def _check_keys(mapping: dict, allowed: Iterable[str], required: Iterable[str], context: str):
    allowed = set(allowed)
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ScenarioError(f"{context}: unknown keys {unknown}")
    missing = sorted(set(required) - set(mapping))
    if missing:
        raise ScenarioError(f"{context}: missing keys {missing}")


def _read_csv_rows(path: Path, header: list[str]) -> list[tuple[int, list[str]]]:
    """Rows of a topology CSV as (line number, cells), header validated."""
    if not path.exists():
        raise ScenarioError(f"{path}: file not found")
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=1) if row]
    if not rows or rows[0][1] != header:
        found = rows[0][1] if rows else []
        raise ScenarioError(
            f"{path}:1: expected header {','.join(header)!r}, found {','.join(found)!r}"
        )
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise ScenarioError(
                f"{path}:{lineno}: expected {len(header)} columns, found {len(row)}"
            )
    return rows[1:]


def _parse_float(cell: str, path: Path, lineno: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ScenarioError(f"{path}:{lineno}: malformed {column} value {cell!r}") from None


def _load_electrical_network(cfg: dict, base: Path, context: str) -> ElectricalNetwork:
    _check_keys(
        cfg,
        ["topology_csv", "base_mva", "base_kv", "transformers"],
        ["topology_csv", "transformers"],
        context,
    )
    transformers = [
        _from_mapping(Transformer, t, f"{context}.transformers[{i}]")
        for i, t in enumerate(cfg["transformers"])
    ]
    path = base / cfg["topology_csv"]
    branches = []
    buses: dict[str, None] = {t.root_bus: None for t in transformers}
    for lineno, row in _read_csv_rows(path, _EN_HEADER):
        r_pu = _parse_float(row[2], path, lineno, "R_pu")
        x_pu = _parse_float(row[3], path, lineno, "X_pu")
        length = _parse_float(row[4], path, lineno, "length_km")
        try:
            branches.append(Branch(row[0], row[1], r_pu, x_pu, length))
        except ValueError as exc:
            raise ScenarioError(f"{path}:{lineno}: {exc}") from None
        buses.setdefault(row[0])
        buses.setdefault(row[1])
    try:
        return ElectricalNetwork(
            buses=list(buses),
            branches=branches,
            transformers=transformers,
            base_mva=cfg.get("base_mva", 10.0),
            base_kv=cfg.get("base_kv", 20.0),
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _load_gas_network(cfg: dict, base: Path, context: str) -> GasNetwork:
    _check_keys(
        cfg,
        [
            "topology_csv",
            "citygate_node",
            "citygate_pressure_barg",
            "p_min_barg",
            "p_max_barg",
            "properties",
        ],
        ["topology_csv", "citygate_node"],
        context,
    )
    properties = _from_mapping(
        GasProperties, cfg.get("properties", {}), f"{context}.properties"
    )
    path = base / cfg["topology_csv"]
    pipes = []
    nodes: dict[str, None] = {cfg["citygate_node"]: None}
    for lineno, row in _read_csv_rows(path, _GN_HEADER):
        length = _parse_float(row[2], path, lineno, "length_m")
        diameter = _parse_float(row[3], path, lineno, "diameter_mm")
        try:
            pipes.append(Pipe(row[0], row[1], length, diameter))
        except ValueError as exc:
            raise ScenarioError(f"{path}:{lineno}: {exc}") from None
        nodes.setdefault(row[0])
        nodes.setdefault(row[1])
    try:
        return GasNetwork(
            nodes=list(nodes),
            pipes=pipes,
            citygate=cfg["citygate_node"],
            properties=properties,
            citygate_pressure_barg=cfg.get("citygate_pressure_barg", 4.0),
            p_min_barg=cfg.get("p_min_barg", 1.5),
            p_max_barg=cfg.get("p_max_barg", 5.0),
        )
    except ValueError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def _load_plants(path: Path) -> list[P2GPlantConfig]:
    entries = _read_json(path)
    if not isinstance(entries, list):
        raise ScenarioError(f"{path}: expected a JSON array of plants")
    plants = []
    for i, entry in enumerate(entries):
        context = f"{path}: plant[{i}]"
        if not isinstance(entry, dict):
            raise ScenarioError(f"{context}: expected an object")
        _check_keys(
            entry,
            [
                "name",
                "en_bus",
                "gn_node",
                "electrolyzer",
                "buffer",
                "methanation",
                "initial_buffer_pressure_bar",
            ],
            ["name", "en_bus", "gn_node"],
            context,
        )
        plants.append(
            P2GPlantConfig(
                name=entry["name"],
                en_bus=entry["en_bus"],
                gn_node=entry["gn_node"],
                electrolyzer=_from_mapping(
                    ElectrolyzerConfig, entry.get("electrolyzer", {}), f"{context}.electrolyzer"
                ),
                buffer=_from_mapping(
                    H2BufferConfig, entry.get("buffer", {}), f"{context}.buffer"
                ),
                methanation=_from_mapping(
                    MethanationConfig, entry.get("methanation", {}), f"{context}.methanation"
                ),
                initial_buffer_pressure_bar=entry.get("initial_buffer_pressure_bar"),
            )
        )
    return plants


def _load_cost_scenario(path: Path) -> CostScenario:
    cfg = _read_json(path)
    if not isinstance(cfg, dict):
        raise ScenarioError(f"{path}: expected a JSON object")
    if "base_year" in cfg:
        overrides = {k: v for k, v in cfg.items() if k != "base_year"}
        builders = {2030: CostScenario.scenario_2030, 2050: CostScenario.scenario_2050}
        builder = builders.get(cfg["base_year"])
        if builder is None:
            raise ScenarioError(
                f"{path}: base_year must be one of {sorted(builders)}, got {cfg['base_year']!r}"
            )
        try:
            return builder(**overrides)
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}: {exc}") from None
    return _from_mapping(CostScenario, cfg, str(path))


def _read_profile_csv(path: Path, role: ProfileRole) -> list[Profile]:
    if not path.exists():
        raise ScenarioError(f"{path}: file not found")
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except pd.errors.ParserError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    if frame.columns.size == 0:
        raise ScenarioError(f"{path}:1: missing header row of node ids")
    try:
        values = frame.to_numpy().astype(float)
    except ValueError:
        for row_pos, row in enumerate(frame.itertuples(index=False), start=2):
            for col, cell in zip(frame.columns, row):
                try:
                    float(cell)
                except ValueError:
                    raise ScenarioError(
                        f"{path}:{row_pos}: malformed value {cell!r} in column {col!r}"
                    ) from None
        raise
    if not np.isfinite(values).all():
        row_pos, col_pos = np.argwhere(~np.isfinite(values))[0]
        raise ScenarioError(
            f"{path}:{row_pos + 2}: non-finite value in column {frame.columns[col_pos]!r}"
        )
    if (values < 0.0).any():
        row_pos, col_pos = np.argwhere(values < 0.0)[0]
        raise ScenarioError(
            f"{path}:{row_pos + 2}: negative value in column {frame.columns[col_pos]!r}"
        )
    return [Profile(role, str(col), values[:, j]) for j, col in enumerate(frame.columns)]


def _load_synthesis_targets(cfg: dict, grid, calendar, seed, ng_lhv, context) -> list[Profile]:
    _check_keys(
        cfg,
        [
            "electric_demand_mw",
            "pv_mw",
            "wt_mw",
            "load_buses",
            "res_buses",
            "gas_withdrawal_nodes",
            "peak_gas_demand_mw",
        ],
        ["electric_demand_mw", "pv_mw", "wt_mw", "load_buses", "res_buses"],
        context,
    )
    try:
        targets = SynthesisTargets(
            electric_demand_mw=cfg["electric_demand_mw"],
            pv_mw=cfg["pv_mw"],
            wt_mw=cfg["wt_mw"],
            load_buses=cfg["load_buses"],
            res_buses=cfg["res_buses"],
            gas_withdrawal_nodes=cfg.get("gas_withdrawal_nodes", []),
            peak_gas_demand_mw=cfg.get("peak_gas_demand_mw", 0.0),
            ng_lhv_kwh_per_kg=ng_lhv,
        )
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{context}: {exc}") from None
    return synthesize_demo_profiles(grid, calendar, targets, seed=seed)


_ROOT_KEYS = [
    "name",
    "seed",
    "ng_lhv_kwh_per_kg",
    "time_grid",
    "heating_intervals",
    "electrical_network",
    "gas_network",
    "plants_json",
    "cost_scenario_json",
    "profiles",
    "profile_synthesis",
]


def load_scenario(root_config_path, seed_override: int | None = None) -> Scenario:
    """Read, resolve and validate a scenario from its root JSON config.

    ``seed_override`` replaces the config's seed (and drives profile
    synthesis) when given.
    """
    path = Path(root_config_path)
    cfg = _read_json(path)
    if not isinstance(cfg, dict):
        raise ScenarioError(f"{path}: expected a JSON object at the top level")
    _check_keys(cfg, _ROOT_KEYS, ["electrical_network", "gas_network"], str(path))
    if "profiles" in cfg and "profile_synthesis" in cfg:
        raise ScenarioError(f"{path}: give either 'profiles' or 'profile_synthesis', not both")
    base = path.parent

    grid = _from_mapping(TimeGrid, cfg.get("time_grid", {}), f"{path}: time_grid")
    intervals = cfg.get("heating_intervals")
    if intervals is None:
        calendar = SeasonCalendar()
    else:
        try:
            calendar = SeasonCalendar(
                tuple((tuple(a), tuple(b)) for a, b in intervals)
            )
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{path}: heating_intervals: {exc}") from None

    en = _load_electrical_network(cfg["electrical_network"], base, f"{path}: electrical_network")
    gn = _load_gas_network(cfg["gas_network"], base, f"{path}: gas_network")

    plants = _load_plants(base / cfg["plants_json"]) if "plants_json" in cfg else []
    if "cost_scenario_json" in cfg:
        cost = _load_cost_scenario(base / cfg["cost_scenario_json"])
    else:
        cost = CostScenario.scenario_2030()

    seed = cfg.get("seed", 0) if seed_override is None else int(seed_override)
    if not isinstance(seed, int):
        raise ScenarioError(f"{path}: seed must be an integer, got {seed!r}")
    ng_lhv = cfg.get("ng_lhv_kwh_per_kg", 13.1)

    profiles: list[Profile] = []
    if "profiles" in cfg:
        pcfg = cfg["profiles"]
        _check_keys(
            pcfg,
            ["electric_load_csv", "res_generation_csv", "gas_withdrawal_csv"],
            [],
            f"{path}: profiles",
        )
        for key, role in (
            ("electric_load_csv", ProfileRole.ELECTRIC_LOAD_KW),
            ("res_generation_csv", ProfileRole.RES_GENERATION_KW),
            ("gas_withdrawal_csv", ProfileRole.GAS_WITHDRAWAL_KG_PER_S),
        ):
            if key in pcfg:
                profiles.extend(_read_profile_csv(base / pcfg[key], role))
    elif "profile_synthesis" in cfg:
        profiles = _load_synthesis_targets(
            cfg["profile_synthesis"], grid, calendar, seed, ng_lhv, f"{path}: profile_synthesis"
        )

    try:
        return Scenario(
            name=cfg.get("name", path.stem),
            time_grid=grid,
            calendar=calendar,
            electrical_network=en,
            gas_network=gn,
            plants=tuple(plants),
            cost_scenario=cost,
            profiles=tuple(profiles),
            seed=seed,
            ng_lhv_kwh_per_kg=ng_lhv,
        )
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


# --------------------------------------------------------------------------
# saving


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]):
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload):
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def save_scenario(scenario: Scenario, out_dir, stem: str = "scenario") -> Path:
    """Write the scenario as root config + CSVs; returns the config path.

    ``load_scenario`` on the returned path reconstructs an equal
    Scenario (floats are written in shortest round-trip form).
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    en, gn = scenario.electrical_network, scenario.gas_network

    _write_csv(
        out / f"{stem}_en_topology.csv",
        _EN_HEADER,
        (
            [b.from_bus, b.to_bus, _fmt(b.r_pu), _fmt(b.x_pu), _fmt(b.length_km)]
            for b in en.branches
        ),
    )
    _write_csv(
        out / f"{stem}_gn_topology.csv",
        _GN_HEADER,
        (
            [p.from_node, p.to_node, _fmt(p.length_m), _fmt(p.diameter_mm)]
            for p in gn.pipes
        ),
    )
    _write_json(
        out / f"{stem}_plants.json",
        [
            {
                "name": p.name,
                "en_bus": p.en_bus,
                "gn_node": p.gn_node,
                "electrolyzer": dataclasses.asdict(p.electrolyzer),
                "buffer": dataclasses.asdict(p.buffer),
                "methanation": dataclasses.asdict(p.methanation),
                "initial_buffer_pressure_bar": p.initial_buffer_pressure_bar,
            }
            for p in scenario.plants
        ],
    )
    _write_json(out / f"{stem}_cost.json", dataclasses.asdict(scenario.cost_scenario))

    profile_cfg = {}
    for key, role in (
        ("electric_load_csv", ProfileRole.ELECTRIC_LOAD_KW),
        ("res_generation_csv", ProfileRole.RES_GENERATION_KW),
        ("gas_withdrawal_csv", ProfileRole.GAS_WITHDRAWAL_KG_PER_S),
    ):
        group = [p for p in scenario.profiles if p.role == role]
        if not group:
            continue
        name = f"{stem}_profiles_{role.name.lower()}.csv"
        columns = np.column_stack([p.samples for p in group])
        _write_csv(
            out / name,
            [p.node_id for p in group],
            ([_fmt(v) for v in row] for row in columns),
        )
        profile_cfg[key] = name

    root = {
        "name": scenario.name,
        "seed": scenario.seed,
        "ng_lhv_kwh_per_kg": scenario.ng_lhv_kwh_per_kg,
        "time_grid": dataclasses.asdict(scenario.time_grid),
        "heating_intervals": [
            [list(a), list(b)] for a, b in scenario.calendar.heating_intervals
        ],
        "electrical_network": {
            "topology_csv": f"{stem}_en_topology.csv",
            "base_mva": en.base_mva,
            "base_kv": en.base_kv,
            "transformers": [dataclasses.asdict(t) for t in en.transformers],
        },
        "gas_network": {
            "topology_csv": f"{stem}_gn_topology.csv",
            "citygate_node": gn.citygate,
            "citygate_pressure_barg": gn.citygate_pressure_barg,
            "p_min_barg": gn.p_min_barg,
            "p_max_barg": gn.p_max_barg,
            "properties": dataclasses.asdict(gn.properties),
        },
        "plants_json": f"{stem}_plants.json",
        "cost_scenario_json": f"{stem}_cost.json",
    }
    if profile_cfg:
        root["profiles"] = profile_cfg
    config_path = out / f"{stem}.json"
    _write_json(config_path, root)
    return config_path


def scenario_fingerprint(scenario: Scenario) -> str:
    """SHA-256 over the scenario's full content (config and profile data)."""
    digest = hashlib.sha256()
    en, gn = scenario.electrical_network, scenario.gas_network
    header = {
        "name": scenario.name,
        "seed": scenario.seed,
        "ng_lhv_kwh_per_kg": scenario.ng_lhv_kwh_per_kg,
        "time_grid": dataclasses.asdict(scenario.time_grid),
        "heating_intervals": [
            [list(a), list(b)] for a, b in scenario.calendar.heating_intervals
        ],
        "buses": en.buses,
        "branches": [dataclasses.asdict(b) for b in en.branches],
        "transformers": [dataclasses.asdict(t) for t in en.transformers],
        "base_mva": en.base_mva,
        "base_kv": en.base_kv,
        "gas_nodes": gn.nodes,
        "pipes": [dataclasses.asdict(p) for p in gn.pipes],
        "citygate": gn.citygate,
        "citygate_pressure_barg": gn.citygate_pressure_barg,
        "p_min_barg": gn.p_min_barg,
        "p_max_barg": gn.p_max_barg,
        "gas_properties": dataclasses.asdict(gn.properties),
        "plants": [dataclasses.asdict(p) for p in scenario.plants],
        "cost_scenario": dataclasses.asdict(scenario.cost_scenario),
    }
    digest.update(json.dumps(header, sort_keys=True).encode())
    for prof in scenario.profiles:
        digest.update(prof.role.value.encode())
        digest.update(prof.node_id.encode())
        digest.update(np.ascontiguousarray(prof.samples).tobytes())
    return digest.hexdigest()
