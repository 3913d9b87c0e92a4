"""End-to-end tests of the command-line entry points (in-process)."""

import json

import pandas as pd
import pytest

from p2gsim.cli import main
from p2gsim.economics import AnnualAccounts, CostScenario, levelized_cost
from p2gsim.scenario import load_scenario

MINIMAL_NO_GAS_DEMAND = {
    "root.json": {
        "name": "nogas",
        "time_grid": {"step_count": 4},
        "electrical_network": {
            "topology_csv": "en.csv",
            "transformers": [{"id": "TR", "root_bus": "r"}],
        },
        "gas_network": {"topology_csv": "gn.csv", "citygate_node": "g0"},
        "profiles": {"electric_load_csv": "load.csv"},
    },
    "en.csv": "from,to,R_pu,X_pu,length_km\nr,b1,0.01,0.0075,1.0\n",
    "gn.csv": "from,to,length_m,diameter_mm\ng0,g1,1000.0,200.0\n",
    "load.csv": "b1\n100.0\n100.0\n100.0\n100.0\n",
}


def episode_config(data_dir) -> str:
    return str(data_dir / "scenario_episode.json")


class TestRunCommand:
    def test_episode_run_passes_invariants(self, data_dir, tmp_path, capsys):
        code = main(["run", "--config", episode_config(data_dir), "--out", str(tmp_path)])
        out = capsys.readouterr().out
        assert code == 0
        assert "simulated 96 steps" in out
        assert "all run invariants hold" in out
        assert (tmp_path / "run_manifest.json").exists()
        assert (tmp_path / "annual_accounts.csv").exists()

    def test_missing_config_exits_2(self, tmp_path, capsys):
        code = main(["run", "--config", str(tmp_path / "nope.json"), "--out", str(tmp_path)])
        assert code == 2
        assert "scenario error" in capsys.readouterr().err


class TestValidateGasCommand:
    def test_uniform_demand_flag(self, data_dir, capsys):
        code = main(
            [
                "validate-gas",
                "--config",
                episode_config(data_dir),
                "--demand-kg-per-s",
                "0.2",
                "--max-hours",
                "24",
            ]
        )
        out = capsys.readouterr().out
        assert code == 0
        assert "max relative error" in out
        assert "OK: below 2.0%" in out

    def test_defaults_to_profile_mean(self, data_dir, capsys):
        code = main(["validate-gas", "--config", episode_config(data_dir)])
        assert code == 0
        assert "OK" in capsys.readouterr().out

    def test_no_demand_available_exits_2(self, tmp_path, capsys):
        for name, content in MINIMAL_NO_GAS_DEMAND.items():
            text = json.dumps(content) if name.endswith(".json") else content
            (tmp_path / name).write_text(text)
        code = main(["validate-gas", "--config", str(tmp_path / "root.json")])
        assert code == 2
        assert "pass --demand-kg-per-s" in capsys.readouterr().err


class TestLcoeCommand:
    @pytest.fixture()
    def accounts_csv(self, data_dir, tmp_path):
        run_out = tmp_path / "run"
        assert main(["run", "--config", episode_config(data_dir), "--out", str(run_out)]) == 0
        return run_out / "annual_accounts.csv"

    def test_sweep_from_emitted_accounts(self, data_dir, tmp_path, accounts_csv, capsys):
        out = tmp_path / "lc"
        code = main(
            [
                "lcoe",
                "--config",
                episode_config(data_dir),
                "--accounts",
                str(accounts_csv),
                "--out",
                str(out),
            ]
        )
        assert code == 0
        assert "lc_sng_grid.csv" in capsys.readouterr().out
        grid = pd.read_csv(out / "lc_sng_grid.csv")
        assert len(grid) == 2 * 4 * 3

        # one cell cross-checked against a direct evaluation
        scenario = load_scenario(episode_config(data_dir))
        sizing = {p.name: p.sizing() for p in scenario.plants}
        row = pd.read_csv(accounts_csv).set_index("plant").loc["P2G-1"]
        accounts = AnnualAccounts(
            surplus_energy_mwh=row.surplus_energy_mwh,
            deficit_energy_mwh=row.deficit_energy_mwh,
            sng_mwh=row.sng_mwh,
            co2_t=row.co2_t,
            o2_t=row.o2_t,
            heat_mwh=row.heat_mwh,
        )
        expected = levelized_cost(
            accounts, CostScenario.scenario_2030(surplus_price_eur_per_mwh=5.0), sizing["P2G-1"]
        )
        cell = grid[
            (grid.cost_year == 2030)
            & (grid.surplus_price_eur_per_mwh == 5.0)
            & (grid.plant == "P2G-1")
        ].lc_sng_eur_per_mwh.iloc[0]
        assert cell == pytest.approx(expected, rel=1e-9)

    def test_custom_price_points(self, data_dir, accounts_csv, capsys):
        code = main(
            [
                "lcoe",
                "--config",
                episode_config(data_dir),
                "--accounts",
                str(accounts_csv),
                "--surplus-price",
                "7.5",
            ]
        )
        assert code == 0
        assert "7.5" in capsys.readouterr().out

    def test_missing_columns_exit_2(self, data_dir, tmp_path, capsys):
        bad = tmp_path / "accounts.csv"
        bad.write_text("plant,sng_mwh\nP2G-1,100.0\n")
        code = main(
            ["lcoe", "--config", episode_config(data_dir), "--accounts", str(bad)]
        )
        assert code == 2
        assert "missing columns" in capsys.readouterr().err

    def test_unknown_plant_exit_2(self, data_dir, tmp_path, accounts_csv, capsys):
        frame = pd.read_csv(accounts_csv)
        frame.loc[0, "plant"] = "NOPE"
        bad = tmp_path / "renamed.csv"
        frame.to_csv(bad, index=False)
        code = main(
            ["lcoe", "--config", episode_config(data_dir), "--accounts", str(bad)]
        )
        assert code == 2
        assert "unknown plant 'NOPE'" in capsys.readouterr().err


class TestSynthCommand:
    def test_bundle_reloads_to_equal_scenario(self, data_dir, tmp_path, capsys):
        demo = str(data_dir / "scenario_demo.json")
        code = main(
            ["synth", "--config", demo, "--out", str(tmp_path), "--seed", "4", "--stem", "demo"]
        )
        assert code == 0
        assert "materialized scenario bundle" in capsys.readouterr().out
        materialized = load_scenario(tmp_path / "demo.json")
        direct = load_scenario(demo, seed_override=4)
        assert materialized == direct
