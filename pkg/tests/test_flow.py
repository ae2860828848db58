"""Flow solver checked against the exhaustive cut scan and closed forms.

The cut scan is an independent oracle: it never touches the augmenting
path machinery, only subset enumeration, so agreement between the two is
real evidence rather than a solver testing itself.
"""

import numpy as np
import pytest

from flexdesign.construct import ConstructionConfig, DesignGraph, build_design
from flexdesign.flow import (
    FulfillmentSolver,
    full_flex_value,
    fulfillment_ratio,
    max_fulfilled_demand,
    min_cut_bruteforce,
)
from flexdesign.system import (
    DistributionSpec,
    ProductionSystem,
    Scenario,
    make_pareto_instance,
    make_two_level_instance,
    make_uniform_instance,
    sample_scenario,
)
from flexdesign.errors import InvalidInputError, TooLargeError

METHODS = ("wpc", "upc", "tpc", "full")


def random_case(seed):
    """One (graph, scenario) pair on a small random system, mixed methods."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(1, 11))
    n = int(rng.integers(1, 11))
    fam = seed % 3
    if fam == 0 and m == n and m % 2 == 0:
        inst = make_two_level_instance(n, float(rng.uniform(0.05, 0.5)))
    elif fam == 1:
        inst = make_pareto_instance(m, n, beta=0.7, cap=50.0, seed=seed)
    else:
        inst = make_uniform_instance(m, n, seed=seed)
    method = METHODS[seed % 4]
    gamma = float(rng.uniform(1.0, 12.0))
    g = build_design(inst, ConstructionConfig(seed=seed, gamma=gamma), method)
    scen = sample_scenario(inst, seed=seed + 100000)
    return g, scen


def manual_graph(m, n, pairs, method="wpc"):
    adj = [[] for _ in range(m)]
    for u, v in pairs:
        adj[u].append(v)
    return DesignGraph(m=m, n=n, adjacency=tuple(tuple(sorted(r)) for r in adj),
                       method=method, gamma=1.0, seed=None)


# ---------------------------------------------------------------- closed forms

def test_full_graph_value_is_min_of_totals():
    inst = make_uniform_instance(8, 12, seed=0)
    g = build_design(inst, ConstructionConfig(seed=0), "full")
    for k in range(100):
        scen = sample_scenario(inst, seed=k)
        want = min(float(scen.supply.sum()), float(scen.demand.sum()))
        got = max_fulfilled_demand(g, scen).value
        assert got == pytest.approx(want, abs=1e-12)


def test_full_flex_value_cases():
    s = Scenario(supply=np.array([0.51, 0.51]), demand=np.array([0.49, 0.49]))
    assert full_flex_value(s) == pytest.approx(0.98, abs=1e-15)
    z = Scenario(supply=np.array([0.5, 0.5]), demand=np.zeros(2))
    assert full_flex_value(z) == 0.0


def test_single_edge_path():
    g = manual_graph(2, 2, [(0, 0)])
    scen = Scenario(supply=np.array([0.5, 0.5]), demand=np.array([0.5, 0.5]))
    res = max_fulfilled_demand(g, scen)
    assert res.value == pytest.approx(0.5, abs=1e-15)
    assert fulfillment_ratio(g, scen) == pytest.approx(0.5, abs=1e-15)


def test_empty_graph():
    g = manual_graph(3, 3, [])
    scen = Scenario(supply=np.full(3, 1 / 3), demand=np.full(3, 1 / 3))
    assert max_fulfilled_demand(g, scen).value == 0.0
    assert fulfillment_ratio(g, scen) == 0.0


def test_ratio_when_benchmark_is_zero():
    g = manual_graph(2, 2, [(0, 0)])
    scen = Scenario(supply=np.array([0.5, 0.5]), demand=np.zeros(2))
    assert max_fulfilled_demand(g, scen).ratio_to_full == 1.0


# ---------------------------------------------------------------- duality

def test_flow_equals_min_cut_on_random_cases():
    for seed in range(200):
        g, scen = random_case(seed)
        flow = max_fulfilled_demand(g, scen).value
        cut = min_cut_bruteforce(g, scen)
        assert flow == pytest.approx(cut.value, abs=1e-9), f"case seed {seed}"
        # recompute the reported cut from its subset as a second check
        inside = set(cut.subset)
        nbr = set()
        for u in inside:
            nbr.update(g.neighbors(u))
        again = (float(scen.supply.sum())
                 - sum(float(scen.supply[u]) for u in inside)
                 + sum(float(scen.demand[v]) for v in nbr))
        assert cut.value == pytest.approx(again, abs=1e-12)


def test_cut_never_exceeds_total_supply():
    for seed in range(30):
        g, scen = random_case(seed)
        cut = min_cut_bruteforce(g, scen)
        assert cut.value <= float(scen.supply.sum()) + 1e-12


def test_isolated_small_supply_cut_oracle():
    # complete design on the 4-node two-level family except supply 3 cut off;
    # with every demand high the shortfall is exactly that node's capacity
    inst = make_two_level_instance(4, 0.2)
    pairs = [(u, v) for u in range(3) for v in range(4)]
    g = manual_graph(4, 4, pairs)
    scen = Scenario(supply=inst.mean_supply.copy(), demand=np.full(4, 0.5))
    cut = min_cut_bruteforce(g, scen)
    assert cut.value == pytest.approx(0.95, abs=1e-12)
    assert cut.subset == (3,)
    assert max_fulfilled_demand(g, scen).value == pytest.approx(0.95, abs=1e-12)


def test_brute_force_size_guard():
    g = manual_graph(21, 2, [])
    scen = Scenario(supply=np.full(21, 1 / 21), demand=np.full(2, 0.5))
    with pytest.raises(TooLargeError):
        min_cut_bruteforce(g, scen, max_m=20)


# ---------------------------------------------------------------- properties

def test_adding_edges_never_hurts():
    rng = np.random.default_rng(11)
    for trial in range(30):
        m = int(rng.integers(2, 8))
        n = int(rng.integers(2, 8))
        all_pairs = [(u, v) for u in range(m) for v in range(n)]
        k = int(rng.integers(0, len(all_pairs)))
        chosen = [all_pairs[i] for i in rng.choice(len(all_pairs), k, replace=False)]
        g1 = manual_graph(m, n, chosen)
        extra = [p for p in all_pairs if p not in chosen]
        add = [extra[i] for i in rng.choice(len(extra), min(3, len(extra)), replace=False)]
        g2 = manual_graph(m, n, chosen + add)
        s = rng.uniform(0, 1, m)
        d = rng.uniform(0, 1, n)
        scen = Scenario(supply=s, demand=d)
        assert (max_fulfilled_demand(g2, scen).value
                >= max_fulfilled_demand(g1, scen).value - 1e-12)


def test_value_scales_linearly():
    g, scen = random_case(17)
    base = max_fulfilled_demand(g, scen).value
    doubled = Scenario(supply=scen.supply * 2.0, demand=scen.demand * 2.0)
    assert max_fulfilled_demand(g, doubled).value == base * 2.0
    lam = 0.7310585786300049
    scaled = Scenario(supply=scen.supply * lam, demand=scen.demand * lam)
    assert max_fulfilled_demand(g, scaled).value == pytest.approx(base * lam, rel=1e-12)


def test_ratio_bounds():
    for seed in range(40):
        g, scen = random_case(seed)
        r = fulfillment_ratio(g, scen)
        assert 0.0 <= r <= 1.0


def test_flow_decomposition_is_feasible():
    for seed in (3, 19, 41):
        g, scen = random_case(seed)
        res = max_fulfilled_demand(g, scen, with_flows=True)
        flows = np.array(res.edge_flows)
        edges = list(g.edges())
        assert len(flows) == len(edges)
        assert np.all(flows >= -1e-12)
        out = np.zeros(g.m)
        into = np.zeros(g.n)
        for (u, v), f in zip(edges, flows):
            out[u] += f
            into[v] += f
        assert np.all(out <= scen.supply + 1e-9)
        assert np.all(into <= scen.demand + 1e-9)
        assert float(flows.sum()) == pytest.approx(res.value, abs=1e-9)


def test_solver_reuse_matches_fresh_solves():
    inst = make_uniform_instance(12, 12, seed=4)
    g = build_design(inst, ConstructionConfig(seed=4, gamma=6.0), "tpc")
    solver = FulfillmentSolver(g)
    for k in range(20):
        scen = sample_scenario(inst, seed=k)
        a = solver.solve(scen.supply, scen.demand)[0]
        b = max_fulfilled_demand(g, scen).value
        assert a == pytest.approx(b, abs=1e-12)


def test_dimension_mismatch_rejected():
    g = manual_graph(2, 2, [(0, 0)])
    scen = Scenario(supply=np.array([1.0]), demand=np.array([0.5, 0.5]))
    with pytest.raises(InvalidInputError):
        max_fulfilled_demand(g, scen)
