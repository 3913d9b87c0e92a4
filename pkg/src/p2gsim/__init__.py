"""Co-simulation of coupled electricity and gas distribution networks.

The package models a medium-voltage radial electricity grid and a
medium-pressure gas grid coupled through power-to-gas plants: surplus
renewable generation is converted to hydrogen, buffered, methanated to
synthetic natural gas and injected into the gas network subject to its
linepack limits.  A rule-based coordinator dispatches the plants each
quarter-hour; yearly runs feed an energy-balance and levelized-cost
report chain.
"""

from p2gsim.timegrid import Season, SeasonCalendar, TimeGrid, season_of
from p2gsim.profiles import Profile, ProfileRole, SynthesisTargets, synthesize_demo_profiles
from p2gsim.electric import (
    Branch,
    ElectricalNetwork,
    ElectricalState,
    FeederBalance,
    NetworkTopologyError,
    PowerFlowError,
    Transformer,
    bfs_power_flow,
    transformer_balance,
)
from p2gsim.gas import (
    GasIntegrationError,
    GasNetwork,
    GasProperties,
    GasSolveError,
    GasState,
    Pipe,
    max_sng_injectable,
    mean_pressure,
    node_volume,
    pressure_rate_bar_per_s,
    pressure_rhs,
    renouard_flow,
    steady_state_solve,
    stored_mass,
)
from p2gsim.plant import (
    ControlError,
    ElectrolyzerConfig,
    H2BufferConfig,
    H2BufferState,
    MethanationConfig,
    MethanationState,
    MethMode,
    P2GPlant,
    P2GPlantConfig,
    PlantStepResult,
    buffer_apply,
    buffer_pressure,
    electrolyzer_step,
    methanation_step,
)
from p2gsim.coordinator import (
    CoordinatorDirective,
    PlantDispatchRecord,
    coordinate,
    electrolyzer_setpoints,
    methanation_dispatch,
)
from p2gsim.economics import (
    AnnualAccounts,
    CashFlow,
    CostScenario,
    PlantSizing,
    annual_cashflow,
    component_capex,
    lc_sng,
    levelized_cost,
    sensitivity_sweep,
)
from p2gsim.scenario import (
    Scenario,
    ScenarioError,
    load_scenario,
    save_scenario,
    scenario_fingerprint,
)
from p2gsim.engine import (
    GasValidationResult,
    SimulationError,
    SimulationResult,
    aggregate,
    annual_accounts,
    run,
    validate_gas_model,
)
from p2gsim.reports import emit_reports

__version__ = "0.1.0"
