"""Power-to-gas plant model: electrolyzer, hydrogen buffer, methanation.

A plant converts an electric setpoint into hydrogen at a fixed specific
consumption, parks the hydrogen in an ideal-gas buffer tank, and feeds
a methanation unit that turns it into synthetic natural gas under ramp
limits and a three-state operating machine (hot standby / reactor
balancing / up and running).  The plant itself is a passive executor:
setpoints and methanation targets come from the coordinator, and the
plant enforces only its own physical envelopes (buffer pressure bounds,
ramps, nominal ratings).

Mass conventions: hydrogen flows in kg, methanation loads in kg of H2
intake per hour.  The methanation H2 drawn during a step is the
end-of-step load times the step length.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

from p2gsim.gas import ATM_BAR

R_H2_J_PER_KGK = 4124.0
H2_LHV_KWH_PER_KG = 33.33


class ControlError(RuntimeError):
    """A directive violated a plant envelope the controller must guarantee."""


@dataclass(frozen=True)
class ElectrolyzerConfig:
    nominal_power_kw: float = 1200.0
    standby_power_kw: float = 20.0
    min_load_fraction: float = 0.0
    specific_consumption_kwh_per_kg: float = 59.0
    o2_yield_kg_per_kg: float = 8.0   # stoichiometric, per kg H2
    heat_yield_kwh_per_kg: float = 3.5

    def __post_init__(self):
        if not 0.0 <= self.min_load_fraction < 1.0:
            raise ValueError(f"min_load_fraction out of [0, 1): {self.min_load_fraction}")
        if self.specific_consumption_kwh_per_kg <= H2_LHV_KWH_PER_KG:
            raise ValueError(
                "specific consumption must exceed the H2 LHV "
                f"({H2_LHV_KWH_PER_KG} kWh/kg): {self.specific_consumption_kwh_per_kg}"
            )
        if not 0.0 <= self.standby_power_kw <= self.nominal_power_kw:
            raise ValueError("standby power outside [0, nominal]")


@dataclass(frozen=True)
class ElectrolyzerOutput:
    h2_kg: float
    o2_kg: float
    heat_kwh: float
    energy_kwh: float


def electrolyzer_step(
    config: ElectrolyzerConfig, power_setpoint_kw: float, dt_h: float
) -> ElectrolyzerOutput:
    """Hydrogen production over one step at a constant power setpoint.

    Only the power above standby produces hydrogen; the standby share
    covers auxiliaries.  Setpoints outside [standby, nominal] are
    controller bugs and rejected.
    """
    eps = 1e-9 * max(1.0, config.nominal_power_kw)
    if not config.standby_power_kw - eps <= power_setpoint_kw <= config.nominal_power_kw + eps:
        raise ControlError(
            f"electrolyzer setpoint {power_setpoint_kw:.3f} kW outside "
            f"[{config.standby_power_kw}, {config.nominal_power_kw}] kW"
        )
    h2 = max(0.0, power_setpoint_kw - config.standby_power_kw) * dt_h / (
        config.specific_consumption_kwh_per_kg
    )
    return ElectrolyzerOutput(
        h2_kg=h2,
        o2_kg=config.o2_yield_kg_per_kg * h2,
        heat_kwh=config.heat_yield_kwh_per_kg * h2,
        energy_kwh=power_setpoint_kw * dt_h,
    )


@dataclass(frozen=True)
class H2BufferConfig:
    volume_m3: float = 80.0
    temperature_k: float = 293.0
    p_max_bar: float = 30.0
    p_min_bar: float = 1.0
    meth_trigger_bar: float = 15.0

    def __post_init__(self):
        if self.volume_m3 <= 0 or self.temperature_k <= 0:
            raise ValueError("buffer volume and temperature must be positive")
        if not 0.0 <= self.p_min_bar < self.meth_trigger_bar < self.p_max_bar:
            raise ValueError(
                f"need p_min < trigger < p_max, got "
                f"{self.p_min_bar}/{self.meth_trigger_bar}/{self.p_max_bar} bar"
            )

    def mass_at(self, pressure_bar: float) -> float:
        return pressure_bar * 1e5 * self.volume_m3 / (R_H2_J_PER_KGK * self.temperature_k)

    def pressure_of(self, mass_kg: float) -> float:
        return mass_kg * R_H2_J_PER_KGK * self.temperature_k / (self.volume_m3 * 1e5)


@dataclass(frozen=True)
class H2BufferState:
    mass_kg: float


def buffer_pressure(state: H2BufferState, config: H2BufferConfig) -> float:
    return config.pressure_of(state.mass_kg)


def buffer_apply(
    state: H2BufferState, config: H2BufferConfig, h2_in_kg: float, h2_out_kg: float
) -> tuple[H2BufferState, float]:
    """Apply one step's hydrogen exchange; returns new state and pressure.

    Bound violations mean the coordinator or plant logic mis-sized a
    transfer — that is a bug, not an operating condition, so it raises.
    """
    if h2_in_kg < 0 or h2_out_kg < 0:
        raise ValueError("buffer transfers must be non-negative masses")
    mass = state.mass_kg + h2_in_kg - h2_out_kg
    pressure = config.pressure_of(mass)
    slack = 1e-9 * config.p_max_bar
    if pressure > config.p_max_bar + slack or pressure < config.p_min_bar - slack:
        raise ControlError(
            f"buffer pressure {pressure:.4f} bar outside "
            f"[{config.p_min_bar}, {config.p_max_bar}] bar after applying "
            f"in={h2_in_kg:.4f} kg out={h2_out_kg:.4f} kg"
        )
    return H2BufferState(mass_kg=mass), pressure


class MethMode(IntEnum):
    HOT_STANDBY = 1
    REACTOR_BALANCING = 2
    UP_AND_RUNNING = 3


@dataclass(frozen=True)
class MethanationConfig:
    nominal_h2_intake_kg_per_h: float = 20.0
    ramp_up_kg_per_h_per_h: float = 3.8    # kg(H2)/h of load change per hour
    ramp_down_kg_per_h_per_h: float = 46.0
    co2_ratio_kg_per_kg: float = 5.5  # per kg H2 consumed
    ch4_yield_kg_per_kg: float = 2.0
    sng_lhv_kwh_per_kg: float = 13.9
    heat_yield_kwh_per_kg: float = 4.7
    balancing_duration_steps: int = 2

    def __post_init__(self):
        if self.ramp_up_kg_per_h_per_h <= 0 or self.ramp_down_kg_per_h_per_h <= 0:
            raise ValueError("ramp limits must be positive")
        if self.nominal_h2_intake_kg_per_h <= 0:
            raise ValueError("nominal intake must be positive")
        if self.balancing_duration_steps < 1:
            raise ValueError("balancing must last at least one step")


@dataclass(frozen=True)
class MethanationState:
    mode: MethMode = MethMode.HOT_STANDBY
    load_kg_per_h: float = 0.0
    balancing_remaining: int = 0


@dataclass(frozen=True)
class MethanationOutput:
    h2_consumed_kg: float
    sng_kg: float
    co2_kg: float
    heat_kwh: float


def methanation_step(
    config: MethanationConfig,
    state: MethanationState,
    h2_feed_target_kg_per_h: float,
    dt_h: float,
) -> tuple[MethanationState, MethanationOutput]:
    """Advance the three-state machine one step toward a feed target.

    A cold start always passes through the reactor-balancing phase
    (no production) for the configured number of steps.  Once running,
    the load tracks the target under asymmetric ramp limits; hydrogen
    drawn this step is the end-of-step load times dt.  Reaching zero
    load drops the unit back to hot standby.
    """
    if h2_feed_target_kg_per_h < 0:
        raise ValueError(f"negative feed target {h2_feed_target_kg_per_h}")
    target = min(h2_feed_target_kg_per_h, config.nominal_h2_intake_kg_per_h)

    mode = state.mode
    load = state.load_kg_per_h
    balancing = state.balancing_remaining

    if mode == MethMode.HOT_STANDBY and target > 0.0:
        mode = MethMode.REACTOR_BALANCING
        balancing = config.balancing_duration_steps

    new_load = 0.0
    if mode == MethMode.REACTOR_BALANCING:
        # the balancing phase cannot be aborted once entered
        balancing -= 1
        if balancing <= 0:
            mode = MethMode.UP_AND_RUNNING  # production starts next step
            balancing = 0
    elif mode == MethMode.UP_AND_RUNNING:
        lo = load - config.ramp_down_kg_per_h_per_h * dt_h
        hi = load + config.ramp_up_kg_per_h_per_h * dt_h
        new_load = min(max(target, lo), hi)
        new_load = min(max(new_load, 0.0), config.nominal_h2_intake_kg_per_h)
        if new_load <= 0.0:
            new_load = 0.0
            mode = MethMode.HOT_STANDBY

    h2 = new_load * dt_h
    new_state = MethanationState(mode=mode, load_kg_per_h=new_load, balancing_remaining=balancing)
    output = MethanationOutput(
        h2_consumed_kg=h2,
        sng_kg=config.ch4_yield_kg_per_kg * h2,
        co2_kg=config.co2_ratio_kg_per_kg * h2,
        heat_kwh=config.heat_yield_kwh_per_kg * h2,
    )
    return new_state, output


@dataclass(frozen=True)
class PlantSizing:
    """Component sizes entering the capital cost model."""

    electrolyzer_kwe: float
    h2_buffer_m3: float       # gas capacity in standard m3 of H2
    methanation_kw_sng: float


@dataclass(frozen=True)
class P2GPlantConfig:
    name: str
    en_bus: str
    gn_node: str
    electrolyzer: ElectrolyzerConfig = field(default_factory=ElectrolyzerConfig)
    buffer: H2BufferConfig = field(default_factory=H2BufferConfig)
    methanation: MethanationConfig = field(default_factory=MethanationConfig)
    initial_buffer_pressure_bar: float | None = None

    def initial_buffer_state(self) -> H2BufferState:
        p0 = self.initial_buffer_pressure_bar
        if p0 is None:
            p0 = self.buffer.p_min_bar
        if not self.buffer.p_min_bar <= p0 <= self.buffer.p_max_bar:
            raise ValueError(f"plant {self.name}: initial buffer pressure {p0} bar out of band")
        return H2BufferState(mass_kg=self.buffer.mass_at(p0))

    def sizing(self) -> PlantSizing:
        # buffer capacity expressed as standard m3 of hydrogen at full pressure
        return PlantSizing(
            electrolyzer_kwe=self.electrolyzer.nominal_power_kw,
            h2_buffer_m3=self.buffer.volume_m3 * self.buffer.p_max_bar / ATM_BAR,
            methanation_kw_sng=(
                self.methanation.nominal_h2_intake_kg_per_h
                * self.methanation.ch4_yield_kg_per_kg
                * self.methanation.sng_lhv_kwh_per_kg
            ),
        )


@dataclass(frozen=True)
class PlantStepResult:
    """One plant's flows over one step (all non-negative)."""

    electricity_kwh: float
    surplus_electricity_kwh: float
    deficit_electricity_kwh: float
    h2_produced_kg: float
    h2_to_methanation_kg: float
    sng_kg: float
    sng_kwh: float
    co2_consumed_t: float
    o2_produced_t: float
    heat_kwh: float
    requested_setpoint_kw: float
    effective_setpoint_kw: float
    capped_by_buffer: bool
    meth_mode: MethMode
    meth_load_kg_per_h: float
    buffer_pressure_bar: float


@dataclass
class P2GPlant:
    """Stateful plant wrapper advancing all three units once per step."""

    config: P2GPlantConfig
    buffer_state: H2BufferState = field(init=False)
    meth_state: MethanationState = field(init=False)

    def __post_init__(self):
        self.buffer_state = self.config.initial_buffer_state()
        self.meth_state = MethanationState()

    @property
    def buffer_pressure_bar(self) -> float:
        return buffer_pressure(self.buffer_state, self.config.buffer)

    @property
    def stored_h2_kg(self) -> float:
        return self.buffer_state.mass_kg

    @property
    def available_h2_kg(self) -> float:
        """Hydrogen above the buffer's minimum-pressure cushion."""
        return max(0.0, self.buffer_state.mass_kg - self.config.buffer.mass_at(self.config.buffer.p_min_bar))

    def step(
        self,
        setpoint_kw: float,
        meth_target_kg_per_h: float,
        dt_h: float,
        surplus_kw: float = 0.0,
    ) -> PlantStepResult:
        """Advance methanation, electrolyzer and buffer by one step.

        The electrolyzer runs at the requested setpoint unless the
        buffer cannot absorb the hydrogen net of this step's methanation
        draw; in that case the setpoint is cut to the pass-through level
        (buffer-full protection).  ``surplus_kw`` splits the consumed
        energy into surplus-priced and deficit-priced shares.
        """
        cfg = self.config
        new_meth, meth_out = methanation_step(cfg.methanation, self.meth_state, meth_target_kg_per_h, dt_h)
        if meth_out.h2_consumed_kg > self.available_h2_kg + 1e-9:
            raise ControlError(
                f"plant {cfg.name}: methanation draw {meth_out.h2_consumed_kg:.4f} kg exceeds "
                f"available hydrogen {self.available_h2_kg:.4f} kg"
            )

        headroom_kg = cfg.buffer.mass_at(cfg.buffer.p_max_bar) - self.buffer_state.mass_kg
        allowed_h2_in = max(0.0, headroom_kg + meth_out.h2_consumed_kg)
        spec = cfg.electrolyzer.specific_consumption_kwh_per_kg
        requested = setpoint_kw
        requested_h2 = max(0.0, requested - cfg.electrolyzer.standby_power_kw) * dt_h / spec
        capped = requested_h2 > allowed_h2_in + 1e-12
        if capped:
            effective = cfg.electrolyzer.standby_power_kw + allowed_h2_in / dt_h * spec
        else:
            effective = requested
        elec_out = electrolyzer_step(cfg.electrolyzer, effective, dt_h)

        self.buffer_state, pressure = buffer_apply(
            self.buffer_state, cfg.buffer, elec_out.h2_kg, meth_out.h2_consumed_kg
        )
        self.meth_state = new_meth

        surplus_kwh = min(elec_out.energy_kwh, max(0.0, surplus_kw) * dt_h)
        return PlantStepResult(
            electricity_kwh=elec_out.energy_kwh,
            surplus_electricity_kwh=surplus_kwh,
            deficit_electricity_kwh=elec_out.energy_kwh - surplus_kwh,
            h2_produced_kg=elec_out.h2_kg,
            h2_to_methanation_kg=meth_out.h2_consumed_kg,
            sng_kg=meth_out.sng_kg,
            sng_kwh=meth_out.sng_kg * cfg.methanation.sng_lhv_kwh_per_kg,
            co2_consumed_t=meth_out.co2_kg / 1000.0,
            o2_produced_t=elec_out.o2_kg / 1000.0,
            heat_kwh=elec_out.heat_kwh + meth_out.heat_kwh,
            requested_setpoint_kw=requested,
            effective_setpoint_kw=effective,
            capped_by_buffer=capped,
            meth_mode=new_meth.mode,
            meth_load_kg_per_h=new_meth.load_kg_per_h,
            buffer_pressure_bar=pressure,
        )
