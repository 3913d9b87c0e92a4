"""Cash-flow assembly and levelized cost of SNG.

The levelized cost is the breakeven SNG selling price over the plant
lifetime: discounted net costs (CAPEX, fixed OPEX, electricity, CO2,
stack replacements, minus O2 and heat revenues) divided by discounted
SNG energy.  Year 0 carries the capital expenditure only; operating
years 1..n repeat the simulated annual accounts; the electrolyzer
stack is replaced at a fixed fraction of its CAPEX every few years
within the lifetime.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from p2gsim.plant import PlantSizing


@dataclass(frozen=True)
class CostScenario:
    year_label: int
    electrolyzer_capex_eur_per_kwe: float
    h2_buffer_capex_eur_per_m3: float
    methanation_capex_eur_per_kw_sng: float
    electrolyzer_opex_fraction: float
    h2_buffer_opex_fraction: float
    methanation_opex_fraction: float
    plant_lifetime_y: int = 20
    wacc: float = 0.08
    deficit_price_eur_per_mwh: float = 60.0
    surplus_price_eur_per_mwh: float = 0.0
    stack_replacement_fraction: float = 0.35
    replacement_period_y: int = 5
    co2_cost_eur_per_t: float = 50.0
    o2_revenue_eur_per_t: float = 70.0
    heat_revenue_eur_per_mwh: float = 30.0

    def __post_init__(self):
        prices = (
            self.electrolyzer_capex_eur_per_kwe,
            self.h2_buffer_capex_eur_per_m3,
            self.methanation_capex_eur_per_kw_sng,
            self.deficit_price_eur_per_mwh,
            self.surplus_price_eur_per_mwh,
            self.co2_cost_eur_per_t,
            self.o2_revenue_eur_per_t,
            self.heat_revenue_eur_per_mwh,
        )
        if any(p < 0 for p in prices):
            raise ValueError("prices must be non-negative")
        if self.plant_lifetime_y < 1:
            raise ValueError("lifetime must be at least one year")
        if self.wacc < 0:
            raise ValueError("wacc must be non-negative")

    @classmethod
    def scenario_2030(cls, **overrides) -> "CostScenario":
        base = cls(
            year_label=2030,
            electrolyzer_capex_eur_per_kwe=650.0,
            h2_buffer_capex_eur_per_m3=75.0,
            methanation_capex_eur_per_kw_sng=500.0,
            electrolyzer_opex_fraction=0.03,
            h2_buffer_opex_fraction=0.015,
            methanation_opex_fraction=0.05,
        )
        return replace(base, **overrides) if overrides else base

    @classmethod
    def scenario_2050(cls, **overrides) -> "CostScenario":
        base = cls(
            year_label=2050,
            electrolyzer_capex_eur_per_kwe=400.0,
            h2_buffer_capex_eur_per_m3=50.0,
            methanation_capex_eur_per_kw_sng=300.0,
            electrolyzer_opex_fraction=0.02,
            h2_buffer_opex_fraction=0.015,
            methanation_opex_fraction=0.03,
        )
        return replace(base, **overrides) if overrides else base


@dataclass(frozen=True)
class AnnualAccounts:
    """One plant's simulated yearly energy and mass totals."""

    surplus_energy_mwh: float
    deficit_energy_mwh: float
    sng_mwh: float
    co2_t: float
    o2_t: float
    heat_mwh: float

    def __post_init__(self):
        for name in ("surplus_energy_mwh", "deficit_energy_mwh", "sng_mwh", "co2_t", "o2_t", "heat_mwh"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class CashFlow:
    """Net cost components of one year (EUR; revenues positive in their fields)."""

    capex: float
    opex: float
    electricity: float
    co2: float
    replacement: float
    o2_revenue: float
    heat_revenue: float

    @property
    def net_cost(self) -> float:
        return (
            self.capex
            + self.opex
            + self.electricity
            + self.co2
            + self.replacement
            - self.o2_revenue
            - self.heat_revenue
        )


def component_capex(scenario: CostScenario, sizing: PlantSizing) -> float:
    return (
        scenario.electrolyzer_capex_eur_per_kwe * sizing.electrolyzer_kwe
        + scenario.h2_buffer_capex_eur_per_m3 * sizing.h2_buffer_m3
        + scenario.methanation_capex_eur_per_kw_sng * sizing.methanation_kw_sng
    )


def annual_cashflow(
    accounts: AnnualAccounts, scenario: CostScenario, sizing: PlantSizing, year_index: int
) -> CashFlow:
    """Cash flow of year ``year_index`` (0 = investment year, no production)."""
    if not 0 <= year_index <= scenario.plant_lifetime_y:
        raise ValueError(f"year index {year_index} outside 0..{scenario.plant_lifetime_y}")
    if year_index == 0:
        return CashFlow(component_capex(scenario, sizing), 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    opex = (
        scenario.electrolyzer_opex_fraction
        * scenario.electrolyzer_capex_eur_per_kwe
        * sizing.electrolyzer_kwe
        + scenario.h2_buffer_opex_fraction * scenario.h2_buffer_capex_eur_per_m3 * sizing.h2_buffer_m3
        + scenario.methanation_opex_fraction
        * scenario.methanation_capex_eur_per_kw_sng
        * sizing.methanation_kw_sng
    )
    electricity = (
        accounts.surplus_energy_mwh * scenario.surplus_price_eur_per_mwh
        + accounts.deficit_energy_mwh * scenario.deficit_price_eur_per_mwh
    )
    replacement = 0.0
    if (
        year_index % scenario.replacement_period_y == 0
        and 0 < year_index < scenario.plant_lifetime_y
    ):
        replacement = (
            scenario.stack_replacement_fraction
            * scenario.electrolyzer_capex_eur_per_kwe
            * sizing.electrolyzer_kwe
        )
    return CashFlow(
        capex=0.0,
        opex=opex,
        electricity=electricity,
        co2=accounts.co2_t * scenario.co2_cost_eur_per_t,
        replacement=replacement,
        o2_revenue=accounts.o2_t * scenario.o2_revenue_eur_per_t,
        heat_revenue=accounts.heat_mwh * scenario.heat_revenue_eur_per_mwh,
    )


def lc_sng(net_costs_eur: Sequence[float], sng_mwh: Sequence[float], wacc: float) -> float:
    """Discounted net cost per discounted MWh of SNG over years 0..n."""
    costs = np.asarray(net_costs_eur, dtype=float)
    energy = np.asarray(sng_mwh, dtype=float)
    if costs.shape != energy.shape:
        raise ValueError("cost and energy series must align year by year")
    disc = (1.0 + wacc) ** -np.arange(len(costs))
    denominator = float(energy @ disc)
    if denominator <= 0.0:
        raise ValueError("no discounted SNG production over the lifetime")
    return float(costs @ disc) / denominator


def levelized_cost(
    accounts: AnnualAccounts, scenario: CostScenario, sizing: PlantSizing
) -> float:
    """Assemble the lifetime series (constant operating years) and evaluate it."""
    years = range(scenario.plant_lifetime_y + 1)
    flows = [annual_cashflow(accounts, scenario, sizing, i) for i in years]
    energy = [0.0] + [accounts.sng_mwh] * scenario.plant_lifetime_y
    return lc_sng([f.net_cost for f in flows], energy, scenario.wacc)


def sensitivity_sweep(
    accounts_by_plant: Mapping[str, AnnualAccounts],
    sizing_by_plant: Mapping[str, PlantSizing],
    scenarios: Sequence[CostScenario],
    surplus_prices_eur_per_mwh: Sequence[float] = (0.0, 5.0, 15.0, 30.0),
) -> pd.DataFrame:
    """LC_SNG grid over cost scenario x surplus price x plant (long format)."""
    rows = []
    for scenario in scenarios:
        for price in surplus_prices_eur_per_mwh:
            priced = replace(scenario, surplus_price_eur_per_mwh=float(price))
            for name, accounts in accounts_by_plant.items():
                rows.append(
                    {
                        "cost_year": scenario.year_label,
                        "surplus_price_eur_per_mwh": float(price),
                        "plant": name,
                        "lc_sng_eur_per_mwh": levelized_cost(accounts, priced, sizing_by_plant[name]),
                    }
                )
    return pd.DataFrame(rows)
