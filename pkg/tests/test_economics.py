"""Tests for the cash-flow assembly and levelized cost of SNG.

The levelized-cost implementation folds the constant operating year
into vectorized discounting; ``lc_oracle`` in oracles.py re-derives the
same quantity with a literal year-by-year loop, so agreement between
the two pins the whole cash-flow wiring.
"""

import numpy as np
import pytest
from oracles import lc_oracle

from p2gsim.economics import (
    AnnualAccounts,
    CostScenario,
    annual_cashflow,
    component_capex,
    lc_sng,
    levelized_cost,
    sensitivity_sweep,
)
from p2gsim.plant import PlantSizing

# default plant sizing: 1200 kWe, 80 m3 * 30 bar / 1.01325 standard m3, 556 kW SNG
SIZING = PlantSizing(
    electrolyzer_kwe=1200.0,
    h2_buffer_m3=2368.6158401184307,
    methanation_kw_sng=556.0,
)
# 650*1200 + 75*2368.6158... + 500*556
CAPEX_2030_GOLDEN = 1235646.1880088823
# 0.03*650*1200 + 0.015*75*2368.6158... + 0.05*500*556
OPEX_2030_GOLDEN = 39964.692820133234
# 0.35 * 650 * 1200
REPLACEMENT_2030_GOLDEN = 272999.99999999994
# lc_sng([1000, 100 x5], [0, 20 x5], wacc=0.05)
LC_GOLDEN = 16.54873990641341

ACCOUNTS = AnnualAccounts(
    surplus_energy_mwh=1860.0,
    deficit_energy_mwh=170.0,
    sng_mwh=870.0,
    co2_t=179.2,
    o2_t=267.9,
    heat_mwh=260.0,
)


class TestCostScenario:
    def test_preset_values(self):
        c30 = CostScenario.scenario_2030()
        assert c30.year_label == 2030
        assert c30.electrolyzer_capex_eur_per_kwe == 650.0
        assert c30.h2_buffer_capex_eur_per_m3 == 75.0
        assert c30.methanation_capex_eur_per_kw_sng == 500.0
        assert c30.wacc == 0.08 and c30.plant_lifetime_y == 20
        assert c30.deficit_price_eur_per_mwh == 60.0
        c50 = CostScenario.scenario_2050()
        assert c50.year_label == 2050
        assert c50.electrolyzer_capex_eur_per_kwe == 400.0
        assert c50.methanation_capex_eur_per_kw_sng == 300.0

    def test_preset_overrides(self):
        c = CostScenario.scenario_2030(surplus_price_eur_per_mwh=15.0, wacc=0.0)
        assert c.surplus_price_eur_per_mwh == 15.0
        assert c.wacc == 0.0
        assert c.electrolyzer_capex_eur_per_kwe == 650.0

    def test_validation(self):
        with pytest.raises(ValueError, match="non-negative"):
            CostScenario.scenario_2030(co2_cost_eur_per_t=-1.0)
        with pytest.raises(ValueError, match="lifetime"):
            CostScenario.scenario_2030(plant_lifetime_y=0)
        with pytest.raises(ValueError, match="wacc"):
            CostScenario.scenario_2030(wacc=-0.01)

    def test_accounts_reject_negative_totals(self):
        with pytest.raises(ValueError, match="sng_mwh"):
            AnnualAccounts(0.0, 0.0, -1.0, 0.0, 0.0, 0.0)


class TestCashFlows:
    def test_component_capex_golden(self):
        capex = component_capex(CostScenario.scenario_2030(), SIZING)
        assert capex == pytest.approx(CAPEX_2030_GOLDEN, rel=1e-12)

    def test_year_zero_is_capex_only(self):
        flow = annual_cashflow(ACCOUNTS, CostScenario.scenario_2030(), SIZING, 0)
        assert flow.capex == pytest.approx(CAPEX_2030_GOLDEN, rel=1e-12)
        assert flow.opex == flow.electricity == flow.replacement == 0.0
        assert flow.net_cost == flow.capex

    def test_operating_year_components(self):
        scenario = CostScenario.scenario_2030(surplus_price_eur_per_mwh=5.0)
        flow = annual_cashflow(ACCOUNTS, scenario, SIZING, 1)
        assert flow.capex == 0.0
        assert flow.opex == pytest.approx(OPEX_2030_GOLDEN, rel=1e-12)
        assert flow.electricity == pytest.approx(1860.0 * 5.0 + 170.0 * 60.0, rel=1e-12)
        assert flow.co2 == pytest.approx(179.2 * 50.0, rel=1e-12)
        assert flow.o2_revenue == pytest.approx(267.9 * 70.0, rel=1e-12)
        assert flow.heat_revenue == pytest.approx(260.0 * 30.0, rel=1e-12)
        assert flow.replacement == 0.0
        assert flow.net_cost == pytest.approx(
            flow.opex + flow.electricity + flow.co2 - flow.o2_revenue - flow.heat_revenue
        )

    def test_stack_replacement_years(self):
        scenario = CostScenario.scenario_2030()
        for year in range(1, 21):
            flow = annual_cashflow(ACCOUNTS, scenario, SIZING, year)
            if year in (5, 10, 15):
                assert flow.replacement == pytest.approx(REPLACEMENT_2030_GOLDEN, rel=1e-12)
            else:
                assert flow.replacement == 0.0

    def test_year_bounds(self):
        scenario = CostScenario.scenario_2030()
        with pytest.raises(ValueError, match="year index"):
            annual_cashflow(ACCOUNTS, scenario, SIZING, -1)
        with pytest.raises(ValueError, match="year index"):
            annual_cashflow(ACCOUNTS, scenario, SIZING, 21)


class TestLcSng:
    def test_golden_value(self):
        value = lc_sng([1000.0] + [100.0] * 5, [0.0] + [20.0] * 5, 0.05)
        assert value == pytest.approx(LC_GOLDEN, rel=1e-12)

    def test_zero_wacc_is_a_plain_ratio(self):
        assert lc_sng([100.0, 50.0, 50.0], [0.0, 10.0, 10.0], 0.0) == pytest.approx(10.0)

    def test_input_validation(self):
        with pytest.raises(ValueError, match="align"):
            lc_sng([1.0, 2.0], [1.0], 0.05)
        with pytest.raises(ValueError, match="no discounted SNG"):
            lc_sng([1.0, 2.0], [0.0, 0.0], 0.05)


class TestLevelizedCost:
    def test_matches_year_by_year_oracle(self):
        for scenario in (
            CostScenario.scenario_2030(),
            CostScenario.scenario_2050(surplus_price_eur_per_mwh=30.0),
            CostScenario.scenario_2030(wacc=0.0, plant_lifetime_y=7),
            CostScenario.scenario_2050(replacement_period_y=6, wacc=0.12),
        ):
            lc = levelized_cost(ACCOUNTS, scenario, SIZING)
            assert lc == pytest.approx(lc_oracle(ACCOUNTS, scenario, SIZING), rel=1e-12)

    def test_zero_wacc_closed_form(self):
        scenario = CostScenario.scenario_2030(wacc=0.0)
        opex_year = (
            OPEX_2030_GOLDEN
            + 170.0 * 60.0
            + 179.2 * 50.0
            - 267.9 * 70.0
            - 260.0 * 30.0
        )
        expected = (CAPEX_2030_GOLDEN + 20 * opex_year + 3 * REPLACEMENT_2030_GOLDEN) / (
            20 * 870.0
        )
        assert levelized_cost(ACCOUNTS, scenario, SIZING) == pytest.approx(expected, rel=1e-12)

    def test_surplus_price_slope_is_energy_ratio(self):
        # every operating year carries the same surplus cost, so the
        # discount factors cancel: dLC/dprice = surplus_mwh / sng_mwh
        lo = levelized_cost(
            ACCOUNTS, CostScenario.scenario_2030(surplus_price_eur_per_mwh=5.0), SIZING
        )
        hi = levelized_cost(
            ACCOUNTS, CostScenario.scenario_2030(surplus_price_eur_per_mwh=25.0), SIZING
        )
        assert (hi - lo) / 20.0 == pytest.approx(1860.0 / 870.0, rel=1e-9)


class TestSensitivitySweep:
    def test_grid_layout_and_values(self):
        accounts = {"P2G-1": ACCOUNTS, "P2G-2": ACCOUNTS}
        sizing = {"P2G-1": SIZING, "P2G-2": SIZING}
        scenarios = [CostScenario.scenario_2030(), CostScenario.scenario_2050()]
        grid = sensitivity_sweep(accounts, sizing, scenarios)
        assert len(grid) == 2 * 4 * 2
        assert list(grid.columns) == [
            "cost_year",
            "surplus_price_eur_per_mwh",
            "plant",
            "lc_sng_eur_per_mwh",
        ]
        row = grid[
            (grid.cost_year == 2050)
            & (grid.surplus_price_eur_per_mwh == 15.0)
            & (grid.plant == "P2G-1")
        ]
        expected = levelized_cost(
            ACCOUNTS, CostScenario.scenario_2050(surplus_price_eur_per_mwh=15.0), SIZING
        )
        assert row.lc_sng_eur_per_mwh.iloc[0] == pytest.approx(expected, rel=1e-12)

    def test_orderings(self):
        grid = sensitivity_sweep(
            {"P": ACCOUNTS},
            {"P": SIZING},
            [CostScenario.scenario_2030(), CostScenario.scenario_2050()],
        )
        for year in (2030, 2050):
            by_price = grid[grid.cost_year == year].sort_values("surplus_price_eur_per_mwh")
            assert by_price.lc_sng_eur_per_mwh.is_monotonic_increasing
        for price in (0.0, 5.0, 15.0, 30.0):
            sub = grid[grid.surplus_price_eur_per_mwh == price]
            lc_2030 = sub[sub.cost_year == 2030].lc_sng_eur_per_mwh.iloc[0]
            lc_2050 = sub[sub.cost_year == 2050].lc_sng_eur_per_mwh.iloc[0]
            assert lc_2050 < lc_2030
