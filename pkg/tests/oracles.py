"""Independent reference implementations used to pin test expectations.

Nothing here imports solver internals: the power-flow oracle assembles
the nodal admittance system and runs a dense Newton iteration in
rectangular voltage coordinates, and the levelized-cost oracle is a
literal year-by-year discounted sum.  Agreement between these and the
package implementations is what the oracle-style tests assert.
"""

from __future__ import annotations

import numpy as np

from p2gsim.electric import Branch, ElectricalNetwork, Transformer

# ---------------------------------------------------------------------------
# nodal Newton power flow


def newton_nodal_pf(network: ElectricalNetwork, injections_kw, tol=1e-12, max_iter=60):
    """Per-bus complex voltages from a dense Newton solve of S = V (Y V)*.

    Root buses are held at their transformer setpoints; every other bus
    is a constant-power node with the given active injection (reactive
    power zero, matching the package's load model).
    """
    n = len(network.buses)
    y = np.zeros((n, n), dtype=complex)
    for branch in network.branches:
        a = network.bus_index[branch.from_bus]
        b = network.bus_index[branch.to_bus]
        adm = 1.0 / complex(branch.r_pu, branch.x_pu)
        y[a, a] += adm
        y[b, b] += adm
        y[a, b] -= adm
        y[b, a] -= adm

    roots = {network.bus_index[t.root_bus]: t.v_setpoint_pu for t in network.transformers}
    free = np.array([i for i in range(n) if i not in roots], dtype=int)
    v = np.ones(n, dtype=complex)
    for i, setpoint in roots.items():
        v[i] = setpoint

    s_pu = np.asarray(injections_kw, dtype=float) / (network.base_mva * 1000.0)

    def mismatch(voltage):
        s_calc = voltage * np.conj(y @ voltage)
        m = s_pu + 0j - s_calc  # injections are pure active power
        return np.concatenate([m[free].real, m[free].imag])

    x = np.concatenate([v[free].real, v[free].imag])
    k = len(free)
    for _ in range(max_iter):
        v[free] = x[:k] + 1j * x[k:]
        f = mismatch(v)
        if np.abs(f).max() < tol:
            return v
        jac = np.zeros((2 * k, 2 * k))
        h = 1e-7
        for col in range(2 * k):
            xp = x.copy()
            xp[col] += h
            vp = v.copy()
            vp[free] = xp[:k] + 1j * xp[k:]
            jac[:, col] = (mismatch(vp) - f) / h
        x = x - np.linalg.solve(jac, f)
    raise RuntimeError("nodal Newton oracle did not converge")


def random_radial_network(rng: np.random.Generator, max_buses: int = 15):
    """A random single-transformer tree with random loads and generation."""
    n = int(rng.integers(2, max_buses + 1))
    buses = [f"b{i}" for i in range(n)]
    branches = []
    for i in range(1, n):
        parent = int(rng.integers(0, i))
        km = float(rng.uniform(0.2, 1.2))
        branches.append(
            Branch(buses[parent], buses[i], r_pu=0.01 * km, x_pu=0.0075 * km, length_km=km)
        )
    network = ElectricalNetwork(
        buses=buses,
        branches=branches,
        transformers=[Transformer(id="TR", root_bus=buses[0])],
    )
    injections = np.zeros(n)
    injections[1:] = rng.uniform(-250.0, 150.0, size=n - 1)  # kW, draws dominate
    return network, injections


# ---------------------------------------------------------------------------
# levelized cost


def lc_oracle(accounts, cost, sizing) -> float:
    """Literal discounted-sum evaluation of the levelized cost of SNG."""
    capex = (
        cost.electrolyzer_capex_eur_per_kwe * sizing.electrolyzer_kwe
        + cost.h2_buffer_capex_eur_per_m3 * sizing.h2_buffer_m3
        + cost.methanation_capex_eur_per_kw_sng * sizing.methanation_kw_sng
    )
    opex = (
        cost.electrolyzer_opex_fraction * cost.electrolyzer_capex_eur_per_kwe * sizing.electrolyzer_kwe
        + cost.h2_buffer_opex_fraction * cost.h2_buffer_capex_eur_per_m3 * sizing.h2_buffer_m3
        + cost.methanation_opex_fraction * cost.methanation_capex_eur_per_kw_sng * sizing.methanation_kw_sng
    )
    numerator = capex  # year 0
    denominator = 0.0
    for year in range(1, cost.plant_lifetime_y + 1):
        disc = 1.0 / (1.0 + cost.wacc) ** year
        net = opex
        net += accounts.surplus_energy_mwh * cost.surplus_price_eur_per_mwh
        net += accounts.deficit_energy_mwh * cost.deficit_price_eur_per_mwh
        net += accounts.co2_t * cost.co2_cost_eur_per_t
        if year % cost.replacement_period_y == 0 and year != cost.plant_lifetime_y:
            net += (
                cost.stack_replacement_fraction
                * cost.electrolyzer_capex_eur_per_kwe
                * sizing.electrolyzer_kwe
            )
        net -= accounts.o2_t * cost.o2_revenue_eur_per_t
        net -= accounts.heat_mwh * cost.heat_revenue_eur_per_mwh
        numerator += net * disc
        denominator += accounts.sng_mwh * disc
    return numerator / denominator
