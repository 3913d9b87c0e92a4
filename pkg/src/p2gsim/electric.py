"""Radial distribution power flow via backward/forward sweep.

The network is a forest: each HV/MV transformer feeds one radial tree
of MV buses.  The sweep is implemented in its equivalent matrix form:
the backward branch-current accumulation and forward voltage-drop pass
are precomputed into a per-feeder path-impedance matrix ``M`` with
``M[i, j] = sum of branch impedances shared by the root paths of buses
i and j``, so each iteration is a single dense mat-vec,

    V = V_root - M @ conj(S_draw / V),

which reproduces the explicit sweep iterates exactly.  Loads and
generation are constant-power injections; the transformer bus is the
slack at a fixed voltage setpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class NetworkTopologyError(ValueError):
    """Bus/branch data does not describe a forest rooted at the transformers."""


class PowerFlowError(RuntimeError):
    """Sweep failed to converge; carries the last voltage residual."""

    def __init__(self, message: str, last_residual: float):
        super().__init__(message)
        self.last_residual = last_residual


@dataclass(frozen=True)
class Branch:
    from_bus: str
    to_bus: str
    r_pu: float
    x_pu: float
    length_km: float = 0.0

    def __post_init__(self):
        if self.r_pu < 0 or self.x_pu < 0:
            raise ValueError(f"negative impedance on branch {self.from_bus}-{self.to_bus}")
        if self.r_pu == 0 and self.x_pu == 0:
            raise ValueError(f"zero-impedance branch {self.from_bus}-{self.to_bus}")
        if self.from_bus == self.to_bus:
            raise NetworkTopologyError(f"self-loop at bus {self.from_bus}")


@dataclass(frozen=True)
class Transformer:
    id: str
    root_bus: str
    v_setpoint_pu: float = 1.0


@dataclass
class ElectricalNetwork:
    """Forest of radial feeders with per-unit branch impedances."""

    buses: list[str]
    branches: list[Branch]
    transformers: list[Transformer]
    base_mva: float = 10.0
    base_kv: float = 20.0

    # derived topology products, filled in __post_init__
    bus_index: dict = field(init=False, repr=False, compare=False)
    feeder_of: np.ndarray = field(init=False, repr=False, compare=False)
    parent: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.buses)) != len(self.buses):
            raise NetworkTopologyError("duplicate bus ids")
        self.bus_index = {b: i for i, b in enumerate(self.buses)}
        n = len(self.buses)
        roots = []
        for tr in self.transformers:
            if tr.root_bus not in self.bus_index:
                raise NetworkTopologyError(f"transformer {tr.id}: unknown root bus {tr.root_bus}")
            roots.append(self.bus_index[tr.root_bus])
        if len(set(roots)) != len(roots):
            raise NetworkTopologyError("two transformers share a root bus")

        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for bi, br in enumerate(self.branches):
            for end in (br.from_bus, br.to_bus):
                if end not in self.bus_index:
                    raise NetworkTopologyError(f"branch {br.from_bus}-{br.to_bus}: unknown bus {end}")
            adjacency[self.bus_index[br.from_bus]].append((self.bus_index[br.to_bus], bi))
            adjacency[self.bus_index[br.to_bus]].append((self.bus_index[br.from_bus], bi))

        # BFS from all roots at once assigns feeders, parents, traversal order
        self.feeder_of = np.full(n, -1, dtype=int)
        self.parent = np.full(n, -1, dtype=int)
        parent_branch = np.full(n, -1, dtype=int)
        order: list[int] = []
        queue = list(roots)
        for f, r in enumerate(roots):
            self.feeder_of[r] = f
        seen_branches: set[int] = set()
        head = 0
        while head < len(queue):
            u = queue[head]
            head += 1
            order.append(u)
            for v, bi in adjacency[u]:
                if bi in seen_branches:
                    continue
                seen_branches.add(bi)
                if self.feeder_of[v] != -1:
                    raise NetworkTopologyError(
                        f"branch {self.branches[bi].from_bus}-{self.branches[bi].to_bus} closes a loop"
                    )
                self.feeder_of[v] = self.feeder_of[u]
                self.parent[v] = u
                parent_branch[v] = bi
                queue.append(v)
        if (self.feeder_of == -1).any():
            orphan = self.buses[int(np.argmax(self.feeder_of == -1))]
            raise NetworkTopologyError(f"bus {orphan} not reachable from any transformer")
        if len(seen_branches) != len(self.branches):
            raise NetworkTopologyError("duplicate branch between already-connected buses")

        # root-path impedances, depths, and the per-feeder M matrices
        z = np.array([complex(br.r_pu, br.x_pu) for br in self.branches]) if self.branches else np.zeros(0, complex)
        z_path = np.zeros(n, dtype=complex)
        depth = np.zeros(n, dtype=int)
        for u in order:
            p = self.parent[u]
            if p >= 0:
                z_path[u] = z_path[p] + z[parent_branch[u]]
                depth[u] = depth[p] + 1

        self._roots = roots
        self._parent_branch = parent_branch
        self._order = order
        self._depth = depth
        self._feeder_buses: list[np.ndarray] = []
        self._feeder_M: list[np.ndarray] = []
        for f, r in enumerate(roots):
            members = [u for u in order if self.feeder_of[u] == f and u != r]
            idx = np.array(members, dtype=int)
            M = np.zeros((len(members), len(members)), dtype=complex)
            for a_k, u in enumerate(members):
                for b_k in range(a_k, len(members)):
                    a, b = u, members[b_k]
                    while a != b:  # walk up to the lowest common ancestor
                        if depth[a] >= depth[b]:
                            a = self.parent[a]
                        else:
                            b = self.parent[b]
                    M[a_k, b_k] = M[b_k, a_k] = z_path[a]
            self._feeder_buses.append(idx)
            self._feeder_M.append(M)

    @property
    def root_indices(self) -> list[int]:
        return list(self._roots)

    def transformer_index(self, tr_id: str) -> int:
        for i, tr in enumerate(self.transformers):
            if tr.id == tr_id:
                return i
        raise KeyError(f"unknown transformer {tr_id!r}")


@dataclass
class ElectricalState:
    """Solved network snapshot (voltages in pu, powers in kW/kvar)."""

    v_pu: np.ndarray                   # complex per-bus voltage
    branch_flow_kw: np.ndarray         # complex sending-end power per branch
    transformer_import_kw: np.ndarray  # signed active power, positive = HV->MV
    iterations: int
    max_mismatch_pu: float             # worst nodal power residual (pu)


def bfs_power_flow(
    network: ElectricalNetwork,
    injections_kw: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> ElectricalState:
    """Solve the radial power flow for complex net injections (kW + j kvar).

    Positive injection is generation, negative is load.  Converged when
    the largest per-iteration voltage change drops below ``tol`` (pu).
    """
    inj = np.asarray(injections_kw, dtype=complex)
    if inj.shape != (len(network.buses),):
        raise ValueError(f"injections shape {inj.shape} != ({len(network.buses)},)")
    if not np.all(np.isfinite(inj)):
        raise ValueError("non-finite injection")

    s_draw_pu = -inj / (network.base_mva * 1000.0)
    v = np.zeros(len(network.buses), dtype=complex)
    for f, r in enumerate(network.root_indices):
        vset = network.transformers[f].v_setpoint_pu
        v[r] = vset
        v[network._feeder_buses[f]] = vset

    delta = np.inf
    iterations = 0
    while delta >= tol:
        iterations += 1
        if iterations > max_iter:
            raise PowerFlowError(f"no convergence after {max_iter} iterations", float(delta))
        delta = 0.0
        for f in range(len(network.transformers)):
            idx = network._feeder_buses[f]
            if idx.size == 0:
                continue
            i_draw = np.conj(s_draw_pu[idx] / v[idx])
            v_new = network.transformers[f].v_setpoint_pu - network._feeder_M[f] @ i_draw
            step = float(np.max(np.abs(v_new - v[idx])))
            if not np.isfinite(step):
                raise PowerFlowError("voltage iteration diverged", step)
            delta = max(delta, step)
            v[idx] = v_new

    # subtree draw currents give branch flows and transformer imports
    i_subtree = np.conj(s_draw_pu / v)
    branch_flow = np.zeros(len(network.branches), dtype=complex)
    for u in reversed(network._order):
        p = network.parent[u]
        if p >= 0:
            branch_flow[network._parent_branch[u]] = (
                v[p] * np.conj(i_subtree[u]) * network.base_mva * 1000.0
            )
            i_subtree[p] += i_subtree[u]
    tr_import = np.array(
        [
            (v[r] * np.conj(i_subtree[r]) * network.base_mva * 1000.0).real
            for r in network.root_indices
        ]
    )

    return ElectricalState(
        v_pu=v,
        branch_flow_kw=branch_flow,
        transformer_import_kw=tr_import,
        iterations=iterations,
        max_mismatch_pu=_nodal_mismatch_pu(network, v, s_draw_pu),
    )


def _nodal_mismatch_pu(network: ElectricalNetwork, v: np.ndarray, s_draw_pu: np.ndarray) -> float:
    """Worst |S residual| (pu) over non-root buses, from branch currents."""
    s_net = np.zeros(len(network.buses), dtype=complex)
    for br in network.branches:
        a = network.bus_index[br.from_bus]
        b = network.bus_index[br.to_bus]
        i_ab = (v[a] - v[b]) / complex(br.r_pu, br.x_pu)
        s_net[a] += v[a] * np.conj(i_ab)
        s_net[b] -= v[b] * np.conj(i_ab)
    res = s_net + s_draw_pu
    mask = np.ones(len(network.buses), dtype=bool)
    mask[network.root_indices] = False
    return float(np.max(np.abs(res[mask]))) if mask.any() else 0.0


@dataclass(frozen=True)
class FeederBalance:
    transformer_id: str
    import_kw: float
    rpf_kw: float
    surplus_kw: float


def transformer_balance(
    network: ElectricalNetwork,
    state: ElectricalState,
    load_kw: np.ndarray,
    res_kw: np.ndarray,
) -> list[FeederBalance]:
    """Per-transformer import, reverse power flow, and RES surplus.

    RPF is read off the solved transformer flow; surplus compares the
    feeder's generation and demand profile sums directly (lossless), so
    the two can differ by network losses.  Feeders are independent: no
    netting across transformers.
    """
    load = np.asarray(load_kw, dtype=float)
    res = np.asarray(res_kw, dtype=float)
    out = []
    for f, tr in enumerate(network.transformers):
        members = network.feeder_of == f
        surplus = float(res[members].sum() - load[members].sum())
        imp = float(state.transformer_import_kw[f])
        out.append(
            FeederBalance(
                transformer_id=tr.id,
                import_kw=imp,
                rpf_kw=max(0.0, -imp),
                surplus_kw=max(0.0, surplus),
            )
        )
    return out
