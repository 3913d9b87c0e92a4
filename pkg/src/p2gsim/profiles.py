"""Time-series profiles and the deterministic demo-profile generator.

Profiles carry one sample per timestep for a single network node, in
fixed role units: electric load and renewable generation in kW, gas
withdrawal in kg/s.  The generator synthesizes a full scenario's worth
of profiles from aggregate targets (installed capacities, peak gas
demand) with a seeded RNG, so the same targets and seed always produce
bit-identical series.

Shape conventions baked into the generator:

* gas demand on heating-season days is 10x the non-heating level
  (residential heating dominated network);
* renewable output over the non-heating season is about twice the
  heating-season output (solar-dominated mix);
* electric demand runs about 10% higher in summer (cooling load).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from p2gsim.timegrid import DAYS_PER_YEAR, SeasonCalendar, TimeGrid, season_mask


class ProfileRole(str, Enum):
    ELECTRIC_LOAD_KW = "electric_load_kW"
    RES_GENERATION_KW = "res_generation_kW"
    GAS_WITHDRAWAL_KG_PER_S = "gas_withdrawal_kg_per_s"


@dataclass(frozen=True)
class Profile:
    """One node's time series in the units fixed by its role."""

    role: ProfileRole
    node_id: str
    samples: np.ndarray

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        if samples.ndim != 1:
            raise ValueError(f"profile for node {self.node_id!r}: samples must be 1-D")
        if not np.all(np.isfinite(samples)):
            raise ValueError(f"profile for node {self.node_id!r}: non-finite samples")
        if np.any(samples < 0.0):
            raise ValueError(f"profile for node {self.node_id!r}: negative samples")
        samples = samples.copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __eq__(self, other):
        if not isinstance(other, Profile):
            return NotImplemented
        return (
            self.role == other.role
            and self.node_id == other.node_id
            and np.array_equal(self.samples, other.samples)
        )

    def __hash__(self):
        return hash((self.role, self.node_id, self.samples.shape))


@dataclass(frozen=True)
class SynthesisTargets:
    """Aggregate targets driving the demo-profile generator.

    Capacities are per transformer (MW); node lists say where each
    transformer's load/RES is placed (spread uniformly).  Gas demand is
    characterized by its yearly peak in MW of NG at LHV, allocated over
    the withdrawal nodes with randomized but seed-stable weights.
    """

    electric_demand_mw: Mapping[str, float]
    pv_mw: Mapping[str, float]
    wt_mw: Mapping[str, float]
    load_buses: Mapping[str, Sequence[str]]
    res_buses: Mapping[str, Sequence[str]]
    gas_withdrawal_nodes: Sequence[str]
    peak_gas_demand_mw: float
    ng_lhv_kwh_per_kg: float = 13.1

    def __post_init__(self):
        for name, table in (
            ("electric_demand_mw", self.electric_demand_mw),
            ("pv_mw", self.pv_mw),
            ("wt_mw", self.wt_mw),
        ):
            for tr, mw in table.items():
                if mw < 0:
                    raise ValueError(f"{name}[{tr!r}] is negative: {mw}")
        if self.peak_gas_demand_mw < 0:
            raise ValueError(f"peak gas demand is negative: {self.peak_gas_demand_mw}")
        if self.ng_lhv_kwh_per_kg <= 0:
            raise ValueError(f"NG LHV must be positive: {self.ng_lhv_kwh_per_kg}")
        if self.peak_gas_demand_mw > 0 and not self.gas_withdrawal_nodes:
            raise ValueError("gas demand targeted but no withdrawal nodes given")
        for tr in self.electric_demand_mw:
            if self.electric_demand_mw[tr] > 0 and not self.load_buses.get(tr):
                raise ValueError(f"load targeted on {tr!r} but no load buses listed")
        for tr in set(self.pv_mw) | set(self.wt_mw):
            res = self.pv_mw.get(tr, 0.0) + self.wt_mw.get(tr, 0.0)
            if res > 0 and not self.res_buses.get(tr):
                raise ValueError(f"RES targeted on {tr!r} but no RES buses listed")


def _gaussian_bump(hours: np.ndarray, center: float, width: float) -> np.ndarray:
    return np.exp(-(((hours - center) / width) ** 2))


def _ar1_noise(rng: np.random.Generator, n: int, corr_steps: float, scale: float) -> np.ndarray:
    """Smooth zero-mean noise with ~unit stationary variance times scale."""
    a = np.exp(-1.0 / corr_steps)
    innov = rng.standard_normal(n) * np.sqrt(1.0 - a * a)
    x = np.empty(n)
    acc = rng.standard_normal()
    for i in range(n):
        acc = a * acc + innov[i]
        x[i] = acc
    return scale * x


def _seasonal_wave(day: np.ndarray, peak_day: float, mean: float, swing: float) -> np.ndarray:
    return mean + swing * np.cos(2.0 * np.pi * (day - peak_day) / DAYS_PER_YEAR)


def synthesize_demo_profiles(
    grid: TimeGrid,
    calendar: SeasonCalendar,
    targets: SynthesisTargets,
    seed: int = 0,
) -> list[Profile]:
    """Generate the full profile set for a demo scenario.

    Returns electric-load and RES profiles per bus and gas-withdrawal
    profiles per node.  Deterministic: the RNG draw order is fixed by
    the iteration order of the target tables.
    """
    rng = np.random.default_rng(seed)
    day = grid.day_indices().astype(float)
    hod = grid.hours_of_day()
    heating = season_mask(grid, calendar)
    profiles: list[Profile] = []

    # --- electric load, per transformer, spread uniformly over its buses
    daily = 0.42 + 0.30 * _gaussian_bump(hod, 9.0, 2.8) + 0.38 * _gaussian_bump(hod, 19.5, 2.2)
    weekend = np.where((grid.day_indices() % 7) >= 5, 0.92, 1.0)
    seasonal = _seasonal_wave(day, 196.0, 1.0, 0.048)  # summer-peaking, ~+10% vs winter
    for tr, cap_mw in targets.electric_demand_mw.items():
        buses = list(targets.load_buses.get(tr, ()))
        shape = daily * weekend * seasonal * (1.0 + _ar1_noise(rng, grid.step_count, 16.0, 0.04))
        shape = np.maximum(shape, 0.0)
        if not buses:
            continue
        total_kw = shape * (cap_mw * 1000.0 / shape.max()) if cap_mw > 0 else np.zeros_like(shape)
        for bus in buses:
            profiles.append(Profile(ProfileRole.ELECTRIC_LOAD_KW, bus, total_kw / len(buses)))

    # --- renewable generation: PV bell + wind AR(1), per transformer
    daylength = _seasonal_wave(day, 171.0, 12.0, 4.2)
    x = (hod - (12.0 - daylength / 2.0)) / daylength
    bell = np.where((x > 0.0) & (x < 1.0), np.sin(np.pi * np.clip(x, 0.0, 1.0)) ** 1.3, 0.0)
    pv_amp = _seasonal_wave(day, 171.0, 0.60, 0.33)
    wind_tilt = _seasonal_wave(day, 171.0, 1.0, 0.10)  # mild summer tilt
    for tr in sorted(set(targets.pv_mw) | set(targets.wt_mw)):
        pv_mw = targets.pv_mw.get(tr, 0.0)
        wt_mw = targets.wt_mw.get(tr, 0.0)
        cloud_of_day = 0.32 + 0.68 * rng.uniform(0.0, 1.0, DAYS_PER_YEAR) ** 0.6
        pv_cf = pv_amp * bell * cloud_of_day[grid.day_indices()]
        gust = _ar1_noise(rng, grid.step_count, 24.0, 1.0)
        wt_cf = np.clip(0.36 + 0.30 * gust, 0.0, 0.94) * wind_tilt
        res_kw = 1000.0 * (pv_mw * pv_cf + wt_mw * wt_cf)
        buses = list(targets.res_buses.get(tr, ()))
        if not buses:
            continue
        for bus in buses:
            profiles.append(Profile(ProfileRole.RES_GENERATION_KW, bus, res_kw / len(buses)))

    # --- gas withdrawals: heating-day level is 10x the off-season level
    if targets.peak_gas_demand_mw > 0:
        nodes = list(targets.gas_withdrawal_nodes)
        weights = rng.uniform(0.5, 1.5, len(nodes))
        weights /= weights.sum()
        shape = 0.55 + 0.30 * _gaussian_bump(hod, 7.5, 2.2) + 0.25 * _gaussian_bump(hod, 19.0, 2.5)
        shape = shape * (1.0 + _ar1_noise(rng, grid.step_count, 12.0, 0.05))
        shape = np.maximum(shape, 0.05)
        if heating.any() and (~heating).any():
            off_level = shape[heating].sum() / (10.0 * shape[~heating].sum())
            total = np.where(heating, shape, off_level * shape)
        else:
            total = shape
        peak_kg_per_s = targets.peak_gas_demand_mw * 1000.0 / targets.ng_lhv_kwh_per_kg / 3600.0
        total = total * (peak_kg_per_s / total.max())
        for node, w in zip(nodes, weights):
            profiles.append(Profile(ProfileRole.GAS_WITHDRAWAL_KG_PER_S, node, total * w))

    return profiles
