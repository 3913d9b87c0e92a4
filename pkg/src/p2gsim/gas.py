"""Transient isothermal medium-pressure gas network model.

Pipe flows follow the Renouard medium-pressure correlation; nodal
pressures integrate the lumped ideal-gas storage equation

    dP/dt [bar/s] = 1e-5 * R * T / V * m_net   (P in bar),

with each node's volume equal to half the volume of its incident pipes.
The citygate node is held at fixed pressure and can only deliver gas
into the network (a non-return connection to the high-pressure system).
A Newton steady-state solver on the same flow law serves as the
validation oracle and provides linepack headroom bookkeeping for the
SNG injection budget.

Units: pressures bar absolute, lengths m, diameters mm, flows kg/s.
Network limits are configured in barg and converted with 1 atm =
1.01325 bar.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

ATM_BAR = 1.01325
RENOUARD_COEF = 25.24
RENOUARD_EXP = 1.82
_ALPHA = 1.0 / RENOUARD_EXP
DEAD_BAND_BAR2 = 1e-12  # |p_m^2 - p_n^2| below this is treated as zero flow


class GasSolveError(RuntimeError):
    """Steady-state Newton solve failed (non-convergence or infeasible demand)."""


class GasIntegrationError(RuntimeError):
    """Transient integration produced an out-of-band pressure."""


@dataclass(frozen=True)
class Pipe:
    from_node: str
    to_node: str
    length_m: float
    diameter_mm: float

    def __post_init__(self):
        if self.length_m <= 0:
            raise ValueError(f"pipe {self.from_node}-{self.to_node}: non-positive length")
        if self.diameter_mm <= 0:
            raise ValueError(f"pipe {self.from_node}-{self.to_node}: non-positive diameter")
        if self.from_node == self.to_node:
            raise ValueError(f"pipe loops at node {self.from_node}")

    @property
    def volume_m3(self) -> float:
        return np.pi * (self.diameter_mm / 2000.0) ** 2 * self.length_m


@dataclass(frozen=True)
class GasProperties:
    rho_std_kg_per_m3: float = 0.78
    r_gas_j_per_kgk: float = 518.0
    temperature_k: float = 288.0


def renouard_flow(
    p_m_bar: float, p_n_bar: float, length_m: float, diameter_mm: float, rho_std: float
) -> float:
    """Signed pipe mass flow (kg/s), positive from m to n."""
    if p_m_bar <= 0 or p_n_bar <= 0:
        raise ValueError("pressures must be positive")
    if length_m <= 0 or diameter_mm <= 0:
        raise ValueError("geometry must be positive")
    du = p_m_bar * p_m_bar - p_n_bar * p_n_bar
    if du == 0.0:
        return 0.0
    k = RENOUARD_COEF * length_m * diameter_mm ** -4.82
    q_std_m3_h = (abs(du) / k) ** _ALPHA
    return float(np.sign(du) * q_std_m3_h * rho_std / 3600.0)


def node_volume(incident_pipes: Sequence[Pipe]) -> float:
    """Node storage volume: half the summed volume of its incident pipes."""
    if not incident_pipes:
        raise ValueError("node has no incident pipes")
    return 0.5 * sum(p.volume_m3 for p in incident_pipes)


@dataclass
class GasNetwork:
    """Connected pipe network with one fixed-pressure citygate node."""

    nodes: list[str]
    pipes: list[Pipe]
    citygate: str
    properties: GasProperties = field(default_factory=GasProperties)
    citygate_pressure_barg: float = 4.0
    p_min_barg: float = 1.5
    p_max_barg: float = 5.0

    node_index: dict = field(init=False, repr=False, compare=False)
    volumes_m3: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node ids")
        if self.citygate not in self.nodes:
            raise ValueError(f"citygate node {self.citygate!r} not in node list")
        if not self.p_min_barg <= self.citygate_pressure_barg <= self.p_max_barg:
            raise ValueError("citygate pressure outside the operating band")
        self.node_index = {n: i for i, n in enumerate(self.nodes)}
        n = len(self.nodes)

        i_from = np.empty(len(self.pipes), dtype=int)
        i_to = np.empty(len(self.pipes), dtype=int)
        for pi, pipe in enumerate(self.pipes):
            for end in (pipe.from_node, pipe.to_node):
                if end not in self.node_index:
                    raise ValueError(f"pipe {pipe.from_node}-{pipe.to_node}: unknown node {end}")
            i_from[pi] = self.node_index[pipe.from_node]
            i_to[pi] = self.node_index[pipe.to_node]

        vol = np.zeros(n)
        for pi, pipe in enumerate(self.pipes):
            vol[i_from[pi]] += 0.5 * pipe.volume_m3
            vol[i_to[pi]] += 0.5 * pipe.volume_m3
        if n > 1 and np.any(vol == 0.0):
            isolated = self.nodes[int(np.argmax(vol == 0.0))]
            raise ValueError(f"node {isolated} has no incident pipe")
        self.volumes_m3 = vol

        # connectivity check by union over pipes
        seen = {self.node_index[self.citygate]}
        frontier = [self.node_index[self.citygate]]
        adj: list[list[int]] = [[] for _ in range(n)]
        for pi in range(len(self.pipes)):
            adj[i_from[pi]].append(i_to[pi])
            adj[i_to[pi]].append(i_from[pi])
        while frontier:
            u = frontier.pop()
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    frontier.append(v)
        if len(seen) != n:
            missing = self.nodes[int(min(set(range(n)) - seen))]
            raise ValueError(f"node {missing} not connected to the citygate")

        props = self.properties
        self._i_from = i_from
        self._i_to = i_to
        self._k_pipe = np.array(
            [RENOUARD_COEF * p.length_m * p.diameter_mm ** -4.82 for p in self.pipes]
        )
        self._flow_coef = (1.0 / self._k_pipe) ** _ALPHA * props.rho_std_kg_per_m3 / 3600.0
        # incidence: +1 receiving (to), -1 sending (from)
        inc = np.zeros((n, len(self.pipes)))
        inc[i_to, np.arange(len(self.pipes))] += 1.0
        inc[i_from, np.arange(len(self.pipes))] -= 1.0
        self._incidence = inc
        self._cg = self.node_index[self.citygate]
        self._cg_out_pipes = np.where(i_from == self._cg)[0]  # positive flow leaves cg
        self._cg_in_pipes = np.where(i_to == self._cg)[0]     # positive flow enters cg
        kappa = 1e-5 * props.r_gas_j_per_kgk * props.temperature_k  # bar*m3/kg
        self._kappa = kappa
        with np.errstate(divide="ignore"):
            coef = np.where(vol > 0.0, kappa / np.where(vol > 0.0, vol, 1.0), 0.0)
        coef[self._cg] = 0.0  # citygate pressure is a boundary condition
        self._dpdt_coef = coef
        # flat int64 views for the compiled sub-step loop
        self._i_from64 = i_from.astype(np.int64)
        self._i_to64 = i_to.astype(np.int64)
        cg_sign = np.zeros(len(self.pipes), dtype=np.int64)
        cg_sign[self._cg_out_pipes] = 1
        cg_sign[self._cg_in_pipes] = -1
        self._cg_sign = cg_sign

    @property
    def citygate_pressure_bar(self) -> float:
        return self.citygate_pressure_barg + ATM_BAR

    @property
    def p_min_bar(self) -> float:
        return self.p_min_barg + ATM_BAR

    @property
    def p_max_bar(self) -> float:
        return self.p_max_barg + ATM_BAR

    @property
    def total_volume_m3(self) -> float:
        return float(self.volumes_m3.sum())

    def pipe_flows(self, pressure_bar: np.ndarray) -> np.ndarray:
        """Renouard flow per pipe at given nodal pressures, citygate clamp applied."""
        psq = pressure_bar * pressure_bar
        u = psq[self._i_from] - psq[self._i_to]
        au = np.abs(u)
        with np.errstate(invalid="ignore"):
            mag = self._flow_coef * au ** _ALPHA
        flow = np.sign(u) * np.where(au < DEAD_BAND_BAR2, 0.0, mag)
        # the citygate cannot accept gas back from the network
        flow[self._cg_out_pipes] = np.maximum(flow[self._cg_out_pipes], 0.0)
        flow[self._cg_in_pipes] = np.minimum(flow[self._cg_in_pipes], 0.0)
        return flow

    def citygate_flow(self, pipe_flow: np.ndarray) -> float:
        """Total supply from the citygate into the network (>= 0 by the clamp)."""
        out = pipe_flow[self._cg_out_pipes].sum() - pipe_flow[self._cg_in_pipes].sum()
        return float(out)


@dataclass
class GasState:
    """Nodal pressures plus step-level flow diagnostics."""

    pressure_bar: np.ndarray            # absolute bar per node
    citygate_flow_kg_per_s: float = 0.0  # average over the last advanced step
    pipe_flow_kg_per_s: np.ndarray | None = None  # instantaneous at these pressures
    substeps: int = 0

    @classmethod
    def uniform(cls, network: GasNetwork) -> "GasState":
        p = np.full(len(network.nodes), network.citygate_pressure_bar)
        return cls(pressure_bar=p, pipe_flow_kg_per_s=np.zeros(len(network.pipes)))


def pressure_rate_bar_per_s(
    net_flow_kg_per_s: float, volume_m3: float, properties: GasProperties
) -> float:
    """Ideal-gas pressure rate of a lumped volume receiving a net mass flow."""
    if volume_m3 <= 0:
        raise ValueError("volume must be positive")
    return (
        1e-5
        * properties.r_gas_j_per_kgk
        * properties.temperature_k
        / volume_m3
        * net_flow_kg_per_s
    )


def stored_mass(network: GasNetwork, pressure_bar: np.ndarray) -> float:
    """Ideal-gas mass held in the network volume at the given pressures (kg)."""
    props = network.properties
    return float(
        np.sum(pressure_bar * 1e5 * network.volumes_m3)
        / (props.r_gas_j_per_kgk * props.temperature_k)
    )


def mean_pressure(network: GasNetwork, pressure_bar: np.ndarray) -> float:
    """Volume-weighted mean network pressure (bar abs).

    Weighting by node volume makes the linepack budget exact: the mass
    headroom (p_max - mean)·1e5·V_tot/(R·T) is precisely the mass that
    brings the stored mass to its p_max value.
    """
    return float(np.sum(pressure_bar * network.volumes_m3) / network.total_volume_m3)


def pressure_rhs(
    network: GasNetwork,
    pressure_bar: np.ndarray,
    injections_kg_per_s: np.ndarray,
    withdrawals_kg_per_s: np.ndarray,
) -> np.ndarray:
    """Nodal dP/dt (bar/s); zero at the citygate (fixed-pressure boundary)."""
    flow = network.pipe_flows(pressure_bar)
    net = injections_kg_per_s - withdrawals_kg_per_s + network._incidence @ flow
    return network._dpdt_coef * net


@njit(cache=True)
def _euler_substep_loop(
    p, i_from, i_to, flow_coef, dpdt_coef, exogenous, cg_sign,
    dt_s, dp_max_bar, h_floor_s, p_ceiling, rate,
):  # pragma: no cover - exercised through step()
    """Compiled adaptive-Euler loop; mutates ``p`` and returns
    (citygate mass, substeps, bad node index or -1, elapsed s at failure)."""
    n = p.shape[0]
    m = i_from.shape[0]
    remaining = dt_s
    citygate_mass = 0.0
    substeps = 0
    while remaining > 1e-9:
        for i in range(n):
            rate[i] = exogenous[i]
        cg_step = 0.0
        for k in range(m):
            a = i_from[k]
            b = i_to[k]
            u = p[a] * p[a] - p[b] * p[b]
            au = abs(u)
            if au < DEAD_BAND_BAR2:
                f = 0.0
            else:
                f = flow_coef[k] * au ** _ALPHA
                if u < 0.0:
                    f = -f
            s = cg_sign[k]
            if s == 1 and f < 0.0:      # no flow back into the citygate
                f = 0.0
            elif s == -1 and f > 0.0:
                f = 0.0
            rate[a] -= f
            rate[b] += f
            if s == 1:
                cg_step += f
            elif s == -1:
                cg_step -= f
        max_rate = 0.0
        for i in range(n):
            rate[i] *= dpdt_coef[i]
            ar = abs(rate[i])
            if ar > max_rate:
                max_rate = ar
        if max_rate > 0.0:
            h = dp_max_bar / max_rate
            if h < h_floor_s:
                h = h_floor_s
            if h > remaining:
                h = remaining
        else:
            h = remaining
        for i in range(n):
            p[i] += rate[i] * h
        citygate_mass += cg_step * h
        substeps += 1
        for i in range(n):
            if dpdt_coef[i] > 0.0 and (p[i] <= 0.01 or p[i] > p_ceiling):
                return citygate_mass, substeps, i, dt_s - remaining + h
        remaining -= h
    return citygate_mass, substeps, -1, dt_s


def step(
    network: GasNetwork,
    state: GasState,
    injections_kg_per_s: np.ndarray,
    withdrawals_kg_per_s: np.ndarray,
    dt_s: float,
    dp_max_bar: float = 0.01,
    h_floor_s: float = 1.0,
    p_margin_bar: float = 1.0,
) -> GasState:
    """Advance the network by ``dt_s`` with adaptive explicit sub-stepping.

    The sub-step is sized so no nodal pressure moves more than
    ``dp_max_bar`` per sub-step, floored at ``h_floor_s``.  Injections
    and withdrawals are piecewise-constant over the step.  The returned
    state's citygate flow is the step-average supply, so the mass ledger
    Δstored = (inj − wit + citygate)·dt closes to rounding error.

    The inner loop runs compiled: near equilibrium the sub-step keeps
    bouncing off the dp_max criterion (the scheme hovers within
    ~dp_max of the steady state), so a year of 15-minute steps takes
    millions of sub-steps and pure-numpy stepping would dominate the
    whole simulation.
    """
    if dt_s <= 0:
        raise ValueError(f"non-positive step length {dt_s}")
    inj = np.asarray(injections_kg_per_s, dtype=float)
    wit = np.asarray(withdrawals_kg_per_s, dtype=float)
    n = len(network.nodes)
    if inj.shape != (n,) or wit.shape != (n,):
        raise ValueError("injection/withdrawal arrays must have one entry per node")
    if np.any(inj < 0) or np.any(wit < 0):
        raise ValueError("injections and withdrawals are magnitudes and must be >= 0")

    p = state.pressure_bar.astype(float).copy()
    p[network._cg] = network.citygate_pressure_bar
    citygate_mass, substeps, bad, elapsed = _euler_substep_loop(
        p,
        network._i_from64,
        network._i_to64,
        network._flow_coef,
        network._dpdt_coef,
        inj - wit,
        network._cg_sign,
        float(dt_s),
        float(dp_max_bar),
        float(h_floor_s),
        network.p_max_bar + p_margin_bar,
        np.empty(n),
    )
    if bad >= 0:
        raise GasIntegrationError(
            f"pressure out of band at node {network.nodes[bad]}: {p[bad]:.4f} bar abs "
            f"after {elapsed:.1f} s of a {dt_s:.0f} s step"
        )

    final_flows = network.pipe_flows(p)
    return GasState(
        pressure_bar=p,
        citygate_flow_kg_per_s=citygate_mass / dt_s,
        pipe_flow_kg_per_s=final_flows,
        substeps=substeps,
    )


def _step_reference(
    network: GasNetwork,
    state: GasState,
    injections_kg_per_s: np.ndarray,
    withdrawals_kg_per_s: np.ndarray,
    dt_s: float,
    dp_max_bar: float = 0.01,
    h_floor_s: float = 1.0,
    p_margin_bar: float = 1.0,
) -> GasState:
    """Pure-numpy twin of :func:`step` kept as a cross-check for tests."""
    inj = np.asarray(injections_kg_per_s, dtype=float)
    wit = np.asarray(withdrawals_kg_per_s, dtype=float)
    p = state.pressure_bar.astype(float).copy()
    p[network._cg] = network.citygate_pressure_bar
    p_ceiling = network.p_max_bar + p_margin_bar
    exogenous = inj - wit
    citygate_mass = 0.0
    remaining = dt_s
    substeps = 0
    while remaining > 1e-9:
        flow = network.pipe_flows(p)
        net = exogenous + network._incidence @ flow
        dpdt = network._dpdt_coef * net
        max_rate = float(np.max(np.abs(dpdt)))
        if max_rate > 0.0:
            h = min(remaining, max(h_floor_s, dp_max_bar / max_rate))
        else:
            h = remaining
        p = p + dpdt * h
        citygate_mass += network.citygate_flow(flow) * h
        substeps += 1
        bad = (p <= 0.01) | (p > p_ceiling)
        bad[network._cg] = False
        if np.any(bad):
            node = network.nodes[int(np.argmax(bad))]
            raise GasIntegrationError(
                f"pressure out of band at node {node}: {p[np.argmax(bad)]:.4f} bar abs "
                f"after {dt_s - remaining + h:.1f} s of a {dt_s:.0f} s step"
            )
        remaining -= h

    final_flows = network.pipe_flows(p)
    return GasState(
        pressure_bar=p,
        citygate_flow_kg_per_s=citygate_mass / dt_s,
        pipe_flow_kg_per_s=final_flows,
        substeps=substeps,
    )


def max_sng_injectable(
    network: GasNetwork,
    state: GasState,
    withdrawals_kg_per_s: np.ndarray,
    dt_s: float,
) -> float:
    """Mass budget (kg) the network can accept this step.

    Withdrawn mass plus the linepack headroom between the current mean
    pressure and the maximum allowed pressure; clamped at zero during
    over-pressure excursions.
    """
    props = network.properties
    p_bar = mean_pressure(network, state.pressure_bar)
    headroom = (
        (network.p_max_bar - p_bar)
        * 1e5
        * network.total_volume_m3
        / (props.r_gas_j_per_kgk * props.temperature_k)
    )
    wit_mass = float(np.sum(withdrawals_kg_per_s)) * dt_s
    return max(0.0, wit_mass + headroom)


def steady_state_solve(
    network: GasNetwork,
    withdrawals_kg_per_s: np.ndarray,
    injections_kg_per_s: np.ndarray | None = None,
    tol_kg_per_s: float = 1e-9,
    max_iter: int = 100,
) -> np.ndarray:
    """Newton solve of nodal continuity with Renouard flows.

    Works in squared-pressure variables where the flow law is smooth
    except at zero; the citygate holds its fixed pressure.  Returns
    per-node absolute pressures (bar) with every free node's mass
    residual below ``tol_kg_per_s``.
    """
    n = len(network.nodes)
    wit = np.asarray(withdrawals_kg_per_s, dtype=float)
    inj = (
        np.zeros(n) if injections_kg_per_s is None else np.asarray(injections_kg_per_s, dtype=float)
    )
    if wit.shape != (n,) or inj.shape != (n,):
        raise ValueError("injection/withdrawal arrays must have one entry per node")
    exogenous = inj - wit

    cg = network._cg
    free = np.array([i for i in range(n) if i != cg], dtype=int)
    col_of = np.full(n, -1, dtype=int)
    col_of[free] = np.arange(len(free))

    x = _tree_init_squared(network, exogenous)
    x_floor = 0.04  # 0.2 bar abs: below this the demand is deemed infeasible

    def residual(xv: np.ndarray) -> np.ndarray:
        flow = _flows_from_squared(network, xv)
        return (exogenous + network._incidence @ flow)[free]

    r = residual(x)
    for _ in range(max_iter):
        worst = float(np.max(np.abs(r))) if r.size else 0.0
        if worst < tol_kg_per_s:
            p = np.sqrt(x)
            if np.any(p[free] <= np.sqrt(x_floor) * (1.0 + 1e-12)):
                raise GasSolveError("infeasible demand: pressure at the solver floor")
            return p
        jac = _steady_jacobian(network, x, col_of)
        try:
            dx_free = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            jac = jac + np.eye(len(free)) * 1e-12
            dx_free = np.linalg.solve(jac, -r)
        lam = 1.0
        improved = False
        for _ in range(40):
            x_try = x.copy()
            x_try[free] = np.maximum(x[free] + lam * dx_free, x_floor)
            r_try = residual(x_try)
            if np.max(np.abs(r_try)) < worst:
                x, r = x_try, r_try
                improved = True
                break
            lam *= 0.5
        if not improved:
            raise GasSolveError(f"line search stalled at residual {worst:.3e} kg/s")
    raise GasSolveError(
        f"no convergence after {max_iter} iterations, residual {np.max(np.abs(r)):.3e} kg/s"
    )


def _flows_from_squared(network: GasNetwork, x: np.ndarray) -> np.ndarray:
    u = x[network._i_from] - x[network._i_to]
    au = np.abs(u)
    mag = network._flow_coef * au ** _ALPHA
    flow = np.sign(u) * np.where(au < DEAD_BAND_BAR2, 0.0, mag)
    flow[network._cg_out_pipes] = np.maximum(flow[network._cg_out_pipes], 0.0)
    flow[network._cg_in_pipes] = np.minimum(flow[network._cg_in_pipes], 0.0)
    return flow


def _steady_jacobian(network: GasNetwork, x: np.ndarray, col_of: np.ndarray) -> np.ndarray:
    """d(residual)/d(x) over free nodes; clamped pipes keep a tiny slope."""
    u = x[network._i_from] - x[network._i_to]
    au = np.maximum(np.abs(u), 1e-9)
    g = _ALPHA * network._flow_coef * au ** (_ALPHA - 1.0)
    # pipes currently clamped at the citygate contribute (almost) no coupling
    clamped_out = u[network._cg_out_pipes] < 0.0
    clamped_in = u[network._cg_in_pipes] > 0.0
    g[network._cg_out_pipes[clamped_out]] = 1e-15
    g[network._cg_in_pipes[clamped_in]] = 1e-15

    m = int(np.max(col_of)) + 1
    jac = np.zeros((m, m))
    cf = col_of[network._i_from]
    ct = col_of[network._i_to]
    for pi in range(len(network.pipes)):
        gp = g[pi]
        a, b = cf[pi], ct[pi]
        if a >= 0:
            jac[a, a] -= gp
            if b >= 0:
                jac[a, b] += gp
        if b >= 0:
            jac[b, b] -= gp
            if a >= 0:
                jac[b, a] += gp
    return jac


def _tree_init_squared(network: GasNetwork, exogenous: np.ndarray) -> np.ndarray:
    """Initial squared pressures from a spanning-tree sweep of net demands."""
    n = len(network.nodes)
    cg = network._cg
    parent = np.full(n, -1, dtype=int)
    parent_pipe = np.full(n, -1, dtype=int)
    order = [cg]
    seen = {cg}
    head = 0
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for pi in range(len(network.pipes)):
        adj[network._i_from[pi]].append((network._i_to[pi], pi))
        adj[network._i_to[pi]].append((network._i_from[pi], pi))
    while head < len(order):
        u = order[head]
        head += 1
        for v, pi in adj[u]:
            if v not in seen:
                seen.add(v)
                parent[v] = u
                parent_pipe[v] = pi
                order.append(v)

    subtree = -exogenous.copy()  # net demand drawn through the parent pipe
    for u in reversed(order):
        if parent[u] >= 0:
            subtree[parent[u]] += subtree[u]
    x = np.empty(n)
    x[cg] = network.citygate_pressure_bar ** 2
    props = network.properties
    for u in order[1:]:
        pi = parent_pipe[u]
        q = subtree[u] * 3600.0 / props.rho_std_kg_per_m3  # std m3/h toward u
        drop = network._k_pipe[pi] * abs(q) ** RENOUARD_EXP * np.sign(q)
        x[u] = max(x[parent[u]] - drop, 0.05)
    return x
