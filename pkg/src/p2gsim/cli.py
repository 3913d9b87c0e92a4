"""Command-line entry points.

Subcommands:

* ``run``           full-horizon co-simulation + reports
* ``validate-gas``  transient-vs-steady gas model comparison
* ``lcoe``          levelized-cost sweep from an emitted accounts file
* ``synth``         materialize synthetic profiles into a scenario bundle

Exit codes: 0 success, 1 invariant violation or solver failure,
2 bad inputs/usage.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np
import pandas as pd

from p2gsim.economics import AnnualAccounts, CostScenario, sensitivity_sweep
from p2gsim.engine import SimulationError, run, validate_gas_model
from p2gsim.gas import GasIntegrationError, GasSolveError
from p2gsim.reports import SURPLUS_PRICE_GRID_EUR_PER_MWH, emit_reports
from p2gsim.scenario import Scenario, ScenarioError, load_scenario, save_scenario

# The injection budget caps the volume-weighted mean pressure; with the
# citygate pinned a bar below the cap, far-field nodes ride slightly above
# the mean when the linepack saturates (~6% citygate volume share on the
# demo network -> <0.1 bar), plus the integrator's per-sub-step hover.
_ENVELOPE_TOL_BAR = 0.15


def _apply_cost_flags(scenario: Scenario, args) -> Scenario:
    cost = scenario.cost_scenario
    if args.cost_year is not None:
        builders = {2030: CostScenario.scenario_2030, 2050: CostScenario.scenario_2050}
        cost = builders[args.cost_year]()
    if args.surplus_price is not None:
        cost = dataclasses.replace(cost, surplus_price_eur_per_mwh=args.surplus_price)
    if cost is scenario.cost_scenario:
        return scenario
    return dataclasses.replace(scenario, cost_scenario=cost)


def _check_run_invariants(result, scenario) -> list[str]:
    """Post-run ledger and envelope checks; returns violation messages."""
    violations = []
    el = result.electric
    gap = np.abs(el["surplus_kw"] - el["absorbed_kw"] - el["rpf_kw"]).max() if result.step_count else 0.0
    if gap > 1e-6:
        violations.append(f"feeder ledger surplus != absorbed + RPF (max gap {gap:.3e} kW)")

    dt_s = result.dt_h * 3600.0
    ga = result.gas
    net_in = float(
        ga["citygate_kg_per_s"].sum() * dt_s
        + ga["sng_injected_kg"].sum()
        - ga["withdrawal_kg_per_s"].sum() * dt_s
    )
    delta = result.stored_mass_end_kg - result.stored_mass_start_kg
    throughput = float(ga["withdrawal_kg_per_s"].sum() * dt_s + ga["sng_injected_kg"].sum())
    if abs(delta - net_in) > max(1e-6, 1e-3 * max(throughput, 1.0)):
        violations.append(
            f"gas mass ledger open: stored delta {delta:.6f} kg vs net inflow {net_in:.6f} kg"
        )

    p_cap = scenario.gas_network.p_max_bar + _ENVELOPE_TOL_BAR
    worst = float(result.node_p_max_bar.max()) if len(result.gas_node_ids) else 0.0
    if worst > p_cap:
        violations.append(f"gas node pressure {worst:.4f} bar exceeds cap {p_cap:.4f} bar")

    for i, name in enumerate(result.plant_names):
        cfg = scenario.plants[i].buffer
        p = result.plant["buffer_pressure_bar"][:, i]
        if p.size and (p.min() < cfg.p_min_bar - 1e-6 or p.max() > cfg.p_max_bar + 1e-6):
            violations.append(
                f"plant {name} buffer outside [{cfg.p_min_bar}, {cfg.p_max_bar}] bar: "
                f"[{p.min():.4f}, {p.max():.4f}]"
            )
        produced = float(result.plant["h2_produced_kg"][:, i].sum())
        consumed = float(result.plant["h2_to_methanation_kg"][:, i].sum())
        start = scenario.plants[i].initial_buffer_state().mass_kg
        end = float(result.plant["stored_h2_kg"][-1, i]) if result.step_count else start
        if abs(produced - consumed - (end - start)) > 1e-6 * max(1.0, produced):
            violations.append(f"plant {name} hydrogen ledger does not close")
    return violations


def _cmd_run(args) -> int:
    scenario = _apply_cost_flags(load_scenario(args.config, args.seed), args)
    result = run(scenario)
    paths = emit_reports(result, scenario, args.out)
    print(f"simulated {result.step_count} steps of scenario {result.scenario_name!r}")
    print(f"config hash {result.config_hash[:16]}..., seed {result.seed}")
    print(f"wrote {len(paths)} report files to {Path(args.out).resolve()}")
    violations = _check_run_invariants(result, scenario)
    for message in violations:
        print(f"INVARIANT VIOLATION: {message}", file=sys.stderr)
    if not violations:
        print("all run invariants hold")
    return 1 if violations else 0


def _cmd_validate_gas(args) -> int:
    scenario = load_scenario(args.config, args.seed)
    gn = scenario.gas_network
    if args.demand_kg_per_s is not None:
        withdrawal = np.zeros(len(gn.nodes))
        free = [i for i, node in enumerate(gn.nodes) if node != gn.citygate]
        withdrawal[free] = args.demand_kg_per_s / len(free)
    else:
        profile = scenario.gas_withdrawal_kg_per_s()
        if profile.size == 0 or profile.sum() == 0.0:
            print("no gas demand: pass --demand-kg-per-s", file=sys.stderr)
            return 2
        withdrawal = profile.mean(axis=0)
    report = validate_gas_model(gn, withdrawal, max_hours=args.max_hours)
    print(
        f"transient vs steady after {report.hours_simulated:.1f} h: "
        f"max relative error {report.max_rel_error:.4%} at node {report.worst_node}"
    )
    limit = args.limit_percent / 100.0
    if report.max_rel_error >= limit:
        print(f"FAIL: error exceeds {args.limit_percent}%", file=sys.stderr)
        return 1
    print(f"OK: below {args.limit_percent}%")
    return 0


def _cmd_lcoe(args) -> int:
    scenario = load_scenario(args.config)
    frame = pd.read_csv(args.accounts)
    required = {
        "plant",
        "surplus_energy_mwh",
        "deficit_energy_mwh",
        "sng_mwh",
        "co2_t",
        "o2_t",
        "heat_mwh",
    }
    missing = required - set(frame.columns)
    if missing:
        print(f"accounts file missing columns: {sorted(missing)}", file=sys.stderr)
        return 2
    sizing = {p.name: p.sizing() for p in scenario.plants}
    accounts = {}
    for row in frame.itertuples(index=False):
        if row.plant not in sizing:
            print(f"accounts reference unknown plant {row.plant!r}", file=sys.stderr)
            return 2
        accounts[row.plant] = AnnualAccounts(
            surplus_energy_mwh=row.surplus_energy_mwh,
            deficit_energy_mwh=row.deficit_energy_mwh,
            sng_mwh=row.sng_mwh,
            co2_t=row.co2_t,
            o2_t=row.o2_t,
            heat_mwh=row.heat_mwh,
        )
    prices = args.surplus_price if args.surplus_price else SURPLUS_PRICE_GRID_EUR_PER_MWH
    grid = sensitivity_sweep(
        accounts,
        sizing,
        [CostScenario.scenario_2030(), CostScenario.scenario_2050()],
        prices,
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        grid.to_csv(out / "lc_sng_grid.csv", index=False, lineterminator="\n")
        print(f"wrote {out / 'lc_sng_grid.csv'}")
    print(grid.to_string(index=False))
    return 0


def _cmd_synth(args) -> int:
    scenario = load_scenario(args.config, args.seed)
    config_path = save_scenario(scenario, args.out, stem=args.stem)
    kinds = {}
    for prof in scenario.profiles:
        kinds[prof.role.value] = kinds.get(prof.role.value, 0) + 1
    summary = ", ".join(f"{n}x {k}" for k, n in sorted(kinds.items())) or "no profiles"
    print(f"materialized scenario bundle at {config_path} ({summary})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="p2gsim",
        description="Coupled electricity/gas distribution co-simulation with power-to-gas plants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate the full horizon and emit reports")
    p_run.add_argument("--config", required=True, help="root scenario JSON")
    p_run.add_argument("--out", default="out", help="report output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p_run.add_argument(
        "--cost-year", type=int, choices=(2030, 2050), default=None, help="cost scenario year"
    )
    p_run.add_argument(
        "--surplus-price", type=float, default=None, help="surplus electricity price in EUR/MWh"
    )
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate-gas", help="compare transient gas model with steady state")
    p_val.add_argument("--config", required=True, help="root scenario JSON")
    p_val.add_argument("--seed", type=int, default=None)
    p_val.add_argument(
        "--demand-kg-per-s",
        type=float,
        default=None,
        help="constant total demand spread uniformly over non-citygate nodes "
        "(default: per-node mean of the scenario's withdrawal profiles)",
    )
    p_val.add_argument("--max-hours", type=float, default=96.0)
    p_val.add_argument("--limit-percent", type=float, default=2.0)
    p_val.set_defaults(func=_cmd_validate_gas)

    p_lc = sub.add_parser("lcoe", help="levelized-cost sweep from an annual accounts CSV")
    p_lc.add_argument("--config", required=True, help="root scenario JSON (for plant sizing)")
    p_lc.add_argument("--accounts", required=True, help="annual_accounts.csv from a run")
    p_lc.add_argument("--out", default=None, help="directory for lc_sng_grid.csv")
    p_lc.add_argument(
        "--surplus-price",
        type=float,
        action="append",
        default=None,
        help="surplus price point in EUR/MWh (repeatable)",
    )
    p_lc.set_defaults(func=_cmd_lcoe)

    p_syn = sub.add_parser("synth", help="write a scenario bundle with materialized profiles")
    p_syn.add_argument("--config", required=True, help="root scenario JSON")
    p_syn.add_argument("--out", default="synth_out", help="bundle output directory")
    p_syn.add_argument("--seed", type=int, default=None, help="override the synthesis seed")
    p_syn.add_argument("--stem", default="scenario", help="file-name stem for the bundle")
    p_syn.set_defaults(func=_cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ScenarioError as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, GasIntegrationError, GasSolveError) as exc:
        print(f"simulation failed: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"missing file: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
