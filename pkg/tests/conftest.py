"""Shared fixtures: bundled scenarios and (expensive) simulation runs."""

from __future__ import annotations

import dataclasses
import time
from pathlib import Path
from types import SimpleNamespace

import pytest

from p2gsim.profiles import Profile
from p2gsim.scenario import Scenario, load_scenario

DATA_DIR = Path(__file__).resolve().parents[1] / "src" / "p2gsim" / "data"


def truncate_scenario(scenario: Scenario, steps: int) -> Scenario:
    """Same scenario cut to the first ``steps`` timesteps."""
    grid = dataclasses.replace(scenario.time_grid, step_count=steps)
    profiles = tuple(
        Profile(p.role, p.node_id, p.samples[:steps]) for p in scenario.profiles
    )
    return dataclasses.replace(scenario, time_grid=grid, profiles=profiles)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def demo_scenario() -> Scenario:
    return load_scenario(DATA_DIR / "scenario_demo.json")


@pytest.fixture(scope="session")
def episode_scenario() -> Scenario:
    return load_scenario(DATA_DIR / "scenario_episode.json")


@pytest.fixture(scope="session")
def episode_result(episode_scenario):
    from p2gsim.engine import run

    return run(episode_scenario)


@pytest.fixture(scope="session")
def week_result(demo_scenario):
    """Seven winter days of the demo scenario."""
    from p2gsim.engine import run

    scenario = truncate_scenario(demo_scenario, 7 * 96)
    return SimpleNamespace(scenario=scenario, result=run(scenario))


@pytest.fixture(scope="session")
def full_year(demo_scenario):
    """The full-year demo run plus its wall-clock time.

    Shared across the acceptance criteria that need a year of output;
    the compiled gas kernel is warmed up beforehand so the recorded
    duration reflects steady-state stepping, not JIT compilation.
    """
    import numpy as np

    from p2gsim.engine import run
    from p2gsim.gas import GasState, step

    gn = demo_scenario.gas_network
    step(gn, GasState.uniform(gn), np.zeros(len(gn.nodes)), np.zeros(len(gn.nodes)), 1.0)

    start = time.perf_counter()
    result = run(demo_scenario)
    wall_s = time.perf_counter() - start
    return SimpleNamespace(scenario=demo_scenario, result=result, wall_s=wall_s)
