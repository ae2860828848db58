import json
import math

import numpy as np
import pytest

from flexdesign.construct import (
    ConstructionConfig,
    DesignGraph,
    build_design,
    edge_probability,
    expected_edge_count,
    gamma_from_theory,
    importance_profile,
    method_profile,
    probability_matrix,
)
from flexdesign.system import (
    DistributionSpec,
    ProductionSystem,
    make_pareto_instance,
    make_two_level_instance,
    make_uniform_instance,
)
from flexdesign.errors import InvalidInputError, InvalidInstanceError


def symmetric_system(m, n):
    return ProductionSystem(
        mean_supply=np.full(m, 1.0 / m),
        mean_demand=np.full(n, 1.0 / n),
        supply_dist=tuple(DistributionSpec.deterministic() for _ in range(m)),
        demand_dist=tuple(DistributionSpec.two_point() for _ in range(n)),
        kappa=2.0,
    )


def lopsided_system():
    return ProductionSystem(
        mean_supply=np.array([0.97, 0.01, 0.01, 0.01]),
        mean_demand=np.full(4, 0.25),
        supply_dist=tuple(DistributionSpec.deterministic() for _ in range(4)),
        demand_dist=tuple(DistributionSpec.two_point() for _ in range(4)),
        kappa=2.0,
    )


# ---------------------------------------------------------------- profiles

def test_profile_symmetric_threshold_inactive():
    prof = importance_profile(symmetric_system(10, 10), threshold_c=0.2)
    assert np.all(prof.q == 0.1)
    assert np.all(prof.p == 0.1)
    assert prof.norm_q == pytest.approx(1.0, abs=1e-12)


def test_profile_clamp_worked_example():
    # means (0.97, 0.01, 0.01, 0.01), c = 0.2: floor 0.05 lifts three nodes,
    # so the normalizer is 0.97 + 3 * 0.05 = 1.12
    prof = importance_profile(lopsided_system(), threshold_c=0.2)
    assert prof.norm_q == pytest.approx(1.12, abs=1e-15)
    assert prof.q[0] == pytest.approx(0.8660714285714286, abs=1e-15)
    assert np.all(prof.q[1:] == prof.q[1])
    assert prof.q[1] == pytest.approx(0.044642857142857144, abs=1e-15)
    assert float(prof.q.sum()) == pytest.approx(1.0, abs=1e-12)
    assert float(prof.p.sum()) == pytest.approx(1.0, abs=1e-12)


def test_profile_normalizer_and_floor_bounds():
    rng = np.random.default_rng(7)
    for trial in range(50):
        m = int(rng.integers(2, 40))
        n = int(rng.integers(2, 40))
        inst = make_pareto_instance(m, n, beta=0.7, cap=50.0, seed=trial)
        prof = importance_profile(inst, threshold_c=0.2)
        assert prof.norm_q <= 1.2 + 1e-12
        assert prof.norm_p <= 1.2 + 1e-12
        assert np.all(prof.q >= (5.0 / 6.0) * inst.mean_supply - 1e-15)
        assert np.all(prof.p >= (5.0 / 6.0) * inst.mean_demand - 1e-15)
        assert np.all(prof.q >= 0.2 / (m * prof.norm_q) - 1e-15)
        assert np.all(prof.p >= 0.2 / (n * prof.norm_p) - 1e-15)


def test_profile_normalizer_monotone_in_threshold():
    inst = make_pareto_instance(30, 30, beta=0.5, cap=50.0, seed=3)
    last = 0.0
    for c in (0.1, 0.2, 0.5, 0.9):
        prof = importance_profile(inst, threshold_c=c)
        assert prof.norm_q >= last - 1e-15
        assert prof.norm_q <= 1.0 + c + 1e-12
        last = prof.norm_q


def test_method_profile_wpc_ignores_threshold():
    inst = lopsided_system()
    prof = method_profile(inst, "wpc", threshold_c=0.5)
    assert np.array_equal(prof.q, inst.mean_supply)
    assert method_profile(inst, "full") is None


def test_method_profile_upc_uniform():
    inst = lopsided_system()
    prof = method_profile(inst, "upc")
    assert np.all(prof.q == 0.25)
    assert np.all(prof.p == 0.25)


# ---------------------------------------------------------------- gamma

def test_gamma_from_theory_worked_value():
    # kappa = 1 collapses the first log factor, leaving ln(4 / 0.04) = ln 100
    got = gamma_from_theory(epsilon=0.04, kappa=1.0, c0=1.0)
    assert got == pytest.approx(4.605170185988092, abs=1e-15)
    assert got == pytest.approx(math.log(100.0), abs=1e-15)


def test_gamma_from_theory_linear_in_c0():
    base = gamma_from_theory(0.1, 2.0, c0=1.0)
    assert gamma_from_theory(0.1, 2.0, c0=2.0) == pytest.approx(2 * base, rel=1e-15)


def test_gamma_from_theory_monotone_in_epsilon():
    assert gamma_from_theory(0.01, 2.0) > gamma_from_theory(0.1, 2.0)


def test_gamma_from_theory_domain():
    with pytest.raises(InvalidInputError):
        gamma_from_theory(0.0, 1.0)
    with pytest.raises(InvalidInputError):
        gamma_from_theory(0.1, 0.5)


def test_config_theory_mode_resolution():
    cfg = ConstructionConfig(seed=1, gamma_mode="theory", epsilon=0.04, kappa=1.0)
    assert cfg.resolve_gamma() == pytest.approx(math.log(100.0), abs=1e-15)
    # a gammaless direct config is fine to hold (full builds ignore gamma)
    # but cannot resolve a density
    with pytest.raises(InvalidInputError):
        ConstructionConfig(seed=1, gamma_mode="direct").resolve_gamma()
    with pytest.raises(InvalidInputError):
        ConstructionConfig(seed=1, gamma=-2.0)
    with pytest.raises(InvalidInputError):
        ConstructionConfig(seed=1, gamma_mode="theory")


# ---------------------------------------------------------------- edge rule

def test_edge_probability_clamps_at_one():
    prof = importance_profile(symmetric_system(2, 2))
    # gamma * n_bar * q * p = 7.4 * 2 * 0.25 = 3.7
    assert edge_probability(prof, 7.4, 0, 0) == 1.0


def test_edge_probability_symmetric_value():
    prof = importance_profile(symmetric_system(50, 50))
    assert edge_probability(prof, 10.0, 3, 7) == pytest.approx(10.0 / 50, rel=1e-12)


def test_edge_probability_two_level_wpc_rates():
    inst = make_two_level_instance(100, 0.2)
    prof = method_profile(inst, "wpc")
    assert edge_probability(prof, 5.0, 0, 0) == pytest.approx(5.0 * 1.8 / 100, rel=1e-12)
    assert edge_probability(prof, 5.0, 99, 0) == pytest.approx(5.0 * 0.2 / 100, rel=1e-12)


def test_edge_probability_index_errors():
    prof = importance_profile(symmetric_system(3, 3))
    with pytest.raises(IndexError):
        edge_probability(prof, 1.0, 3, 0)
    with pytest.raises(IndexError):
        edge_probability(prof, 1.0, 0, -1)


def test_probability_matrix_matches_pointwise():
    inst = make_pareto_instance(6, 9, beta=0.5, cap=50.0, seed=1)
    prof = importance_profile(inst, threshold_c=0.5)
    mat = probability_matrix(prof, 12.0)
    assert mat.shape == (6, 9)
    for u in range(6):
        for v in range(9):
            assert mat[u, v] == edge_probability(prof, 12.0, u, v)


# ---------------------------------------------------------------- builders

def test_full_design_complete():
    inst = symmetric_system(3, 4)
    g = build_design(inst, ConstructionConfig(seed=0), "full")
    assert g.edge_count == 12
    assert all(g.neighbors(u) == tuple(range(4)) for u in range(3))
    assert g.method == "full"


def test_build_determinism():
    inst = make_uniform_instance(30, 30, seed=5)
    cfg = ConstructionConfig(seed=123, gamma=8.0)
    a = build_design(inst, cfg, "tpc")
    b = build_design(inst, cfg, "tpc")
    c = build_design(inst, ConstructionConfig(seed=124, gamma=8.0), "tpc")
    assert a.adjacency == b.adjacency
    assert a.adjacency != c.adjacency


def test_symmetric_tpc_equals_wpc():
    inst = symmetric_system(20, 20)
    pw = method_profile(inst, "wpc")
    pt = method_profile(inst, "tpc", threshold_c=0.5)
    for u in range(20):
        for v in range(20):
            assert edge_probability(pw, 9.0, u, v) == edge_probability(pt, 9.0, u, v)
    for seed in (1, 2, 3):
        gw = build_design(inst, ConstructionConfig(seed=seed, gamma=9.0), "wpc")
        gt = build_design(inst, ConstructionConfig(seed=seed, gamma=9.0), "tpc")
        assert gw.adjacency == gt.adjacency


def test_complete_at_saturating_gamma():
    # r = 12 * 12 / 144 = 1 for every pair, so the draw is deterministic
    inst = symmetric_system(12, 12)
    g = build_design(inst, ConstructionConfig(seed=9, gamma=12.0), "tpc")
    assert g.edge_count == 144


def test_expected_edge_count_bound_and_values():
    inst = symmetric_system(100, 100)
    cfg = ConstructionConfig(seed=0, gamma=10.0)
    assert expected_edge_count(inst, cfg, "upc") == pytest.approx(1000.0, abs=1e-9)
    assert expected_edge_count(inst, cfg, "full") == 10000.0
    for seed in range(10):
        pinst = make_pareto_instance(40, 60, beta=0.6, cap=50.0, seed=seed)
        val = expected_edge_count(pinst, ConstructionConfig(seed=0, gamma=7.0,
                                                           threshold_c=0.5), "tpc")
        assert val <= 7.0 * 60 + 1e-9


def test_realized_edges_concentrate_near_expectation():
    inst = make_two_level_instance(100, 0.2)
    cfg = ConstructionConfig(seed=0, gamma=10.0, threshold_c=0.5)
    expect = expected_edge_count(inst, cfg, "tpc")
    counts = [build_design(inst, ConstructionConfig(seed=s, gamma=10.0,
                                                    threshold_c=0.5), "tpc").edge_count
              for s in range(100)]
    # binomial sum, sd ~ sqrt(E); keep a wide 5 sigma band
    assert abs(np.mean(counts) - expect) <= 5 * math.sqrt(expect / 100)


# ---------------------------------------------------------------- serialization

def test_design_json_round_trip(tmp_path):
    inst = make_uniform_instance(10, 15, seed=2)
    g = build_design(inst, ConstructionConfig(seed=7, gamma=6.0), "wpc")
    path = tmp_path / "design.json"
    g.save(path)
    with open(path) as fh:
        doc = json.load(fh)
    assert sorted(doc) == ["edges", "gamma", "m", "method", "n", "seed"]
    assert doc["edges"] == sorted(doc["edges"])
    back = DesignGraph.load(path)
    assert back == g


def test_design_validation():
    with pytest.raises(InvalidInstanceError):
        DesignGraph(m=2, n=2, adjacency=((0, 0), ()), method="wpc",
                    gamma=1.0, seed=0)
    with pytest.raises(InvalidInstanceError):
        DesignGraph(m=2, n=2, adjacency=((2,), ()), method="wpc",
                    gamma=1.0, seed=0)


def test_method_names_case_insensitive():
    inst = symmetric_system(4, 4)
    g = build_design(inst, ConstructionConfig(seed=1, gamma=4.0), "TPC")
    assert g.method == "tpc"
    with pytest.raises(InvalidInputError):
        build_design(inst, ConstructionConfig(seed=1, gamma=4.0), "nope")
