"""Exhaustive diagnostics for the conditions behind the design guarantees.

Each audit enumerates supply subsets of a concrete design (bitmask order,
neighbor sets as integer bitsets) and checks one condition:

cut_condition
    neighbor-demand(L) + outside-supply(L) >= 1 - 2*epsilon for every
    subset L.  By max-flow duality this holds exactly when the fulfilled
    demand reaches 1 - 2*epsilon.
either_or
    every subset L fulfills  neighbor-demand(L) >= supply(L) - epsilon,
    or else the complement of its neighborhood K satisfies
    neighbor-supply(K) >= demand(K) - epsilon.
expansion_demand
    subsets with importance weight q(L) above c_l * epsilon / kappa have
    neighbor-demand at least min(1 - delta, (kappa / c_l) * q(L)).
expansion_importance
    subsets with q(L) above tau have neighbor importance p at least
    1 - tau; a scenario-free property of the wiring itself.

These subset conditions are asymptotic guarantees for random designs, so
at desk scale the audits report empirical pass rates rather than
certainties; regression baselines for those rates live in the test
suite.  The neighbor-probability check is the one Monte Carlo routine
here: it resamples a design many times and compares the frequency of
"v is a neighbor of L" against the analytic floor
1 - exp(-p(v) * gamma * n_bar * q(L)).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .construct import DesignGraph, ImportanceProfile, probability_matrix
from .errors import BoundViolationError, InvalidInputError, TooLargeError
from .flow import _mask_weight, _weighted_byte_tables, neighbor_bitmasks
from .rng import make_rng
from .system import ProductionSystem, Scenario


@dataclass(frozen=True)
class AuditConfig:
    """Tolerances and constants shared by the subset audits.

    ``tau`` defaults to 1/(2*kappa) and ``c_l`` to 5/6; ``delta`` is the
    ceiling-gap constant of the demand-expansion condition (default 1/3).
    All of them are free parameters rather than baked-in numbers.

    ``tol`` is a pure rounding guard for the >= comparisons: realized
    capacities are float sums, and configurations that land exactly on a
    condition's boundary (say a demand total of exactly 1 - delta) must
    not flip the verdict over a one-ulp difference.  Genuine violations
    at desk scale are larger than any capacity quantum, so the default
    1e-9 never masks one.
    """

    epsilon: float
    kappa: float = 2.0
    delta: float = 1.0 / 3.0
    tau: float | None = None
    c_l: float = 5.0 / 6.0
    gamma: float | None = None
    max_enumeration_m: int = 20
    tol: float = 1e-9

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise InvalidInputError("epsilon must lie in (0, 1)")
        if not (self.kappa >= 1.0):
            raise InvalidInputError("kappa must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise InvalidInputError("delta must lie in (0, 1)")
        if not (0.0 < self.c_l <= 1.0):
            raise InvalidInputError("c_l must lie in (0, 1]")
        if self.tau is None:
            object.__setattr__(self, "tau", 1.0 / (2.0 * self.kappa))
        if not (0.0 < self.tau < 1.0):
            raise InvalidInputError("tau must lie in (0, 1)")
        if self.max_enumeration_m < 0:
            raise InvalidInputError("max_enumeration_m must be >= 0")
        if not (self.tol >= 0.0):
            raise InvalidInputError("tol must be >= 0")


@dataclass(frozen=True)
class AuditReport:
    """Verdict of one audit: worst subset, its two sides, and the margin."""

    condition: str
    passed: bool
    worst_subset: tuple
    lhs: float
    rhs: float
    gap: float
    subsets_checked: int

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "pass": self.passed,
            "worst_subset": list(self.worst_subset),
            "lhs": self.lhs,
            "rhs": self.rhs,
            "gap": self.gap,
            "subsets_checked": self.subsets_checked,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def _guard_enumeration(m: int, cap: int) -> None:
    if m > cap:
        raise TooLargeError(f"m = {m} exceeds the enumeration cap {cap}")


def _subset_ids(mask: int, m: int) -> tuple:
    return tuple(u for u in range(m) if mask >> u & 1)


def cut_condition_audit(graph: DesignGraph, scenario: Scenario, epsilon: float,
                        max_m: int = 20, tol: float = 1e-9) -> AuditReport:
    """Check neighbor-demand(L) + outside-supply(L) >= 1 - 2*epsilon for all L.

    The worst subset is the exact minimizer, so the verdict agrees with
    asking whether the max-flow value reaches 1 - 2*epsilon.  ``tol``
    absorbs float rounding for instances that land exactly on the
    threshold; it is far below any real capacity gap.
    """
    if not (0.0 < epsilon < 1.0):
        raise InvalidInputError("epsilon must lie in (0, 1)")
    if tol < 0.0:
        raise InvalidInputError("tol must be >= 0")
    if scenario.m != graph.m or scenario.n != graph.n:
        raise InvalidInputError("scenario shape does not match design shape")
    m = graph.m
    _guard_enumeration(m, max_m)
    s = [float(x) for x in scenario.supply]
    total_s = sum(s)
    nb = neighbor_bitmasks(graph)
    d_tab = _weighted_byte_tables([float(x) for x in scenario.demand])

    size = 1 << m
    gamma_of = [0] * size
    s_of = [0.0] * size
    best = total_s
    best_mask = 0
    for mask in range(1, size):
        low = mask & -mask
        rest = mask ^ low
        u = low.bit_length() - 1
        gm = gamma_of[rest] | nb[u]
        sv = s_of[rest] + s[u]
        gamma_of[mask] = gm
        s_of[mask] = sv
        value = (total_s - sv) + _mask_weight(gm, d_tab)
        if value < best:
            best = value
            best_mask = mask
    rhs = 1.0 - 2.0 * epsilon
    return AuditReport(
        condition="cut_condition",
        passed=best >= rhs - tol,
        worst_subset=_subset_ids(best_mask, m),
        lhs=best,
        rhs=rhs,
        gap=best - rhs,
        subsets_checked=size,
    )


def either_or_audit(graph: DesignGraph, profile: ImportanceProfile | None,
                    scenario: Scenario, config: AuditConfig) -> AuditReport:
    """Check that every supply subset wins on at least one side.

    For each L the demand branch asks neighbor-demand(L) >= supply(L) -
    epsilon; when that fails, the supply branch asks, with K the demand
    nodes outside L's neighborhood, neighbor-supply(K) >= demand(K) -
    epsilon.  The report's lhs/rhs describe the better branch of the
    worst subset.  ``profile`` is accepted for interface symmetry with
    the expansion audits; the condition itself only involves realized
    capacities and adjacency.
    """
    if scenario.m != graph.m or scenario.n != graph.n:
        raise InvalidInputError("scenario shape does not match design shape")
    m, n = graph.m, graph.n
    _guard_enumeration(m, config.max_enumeration_m)
    eps = config.epsilon
    s = [float(x) for x in scenario.supply]
    d = [float(x) for x in scenario.demand]
    total_d = sum(d)
    nb = neighbor_bitmasks(graph)
    d_tab = _weighted_byte_tables(d)
    s_tab = _weighted_byte_tables(s)
    # demand-side adjacency as bitmasks over supply ids
    vmask = [0] * n
    for u, row in enumerate(graph.adjacency):
        bit = 1 << u
        for v in row:
            vmask[v] |= bit

    size = 1 << m
    gamma_of = [0] * size
    s_of = [0.0] * size
    worst_gap = math.inf
    worst = (0, 0.0, 0.0)  # mask, lhs, rhs
    for mask in range(size):
        if mask:
            low = mask & -mask
            rest = mask ^ low
            u = low.bit_length() - 1
            gm = gamma_of[rest] | nb[u]
            sv = s_of[rest] + s[u]
            gamma_of[mask] = gm
            s_of[mask] = sv
        else:
            gm = 0
            sv = 0.0
        d_gm = _mask_weight(gm, d_tab)
        lhs1 = d_gm
        rhs1 = sv - eps
        gap1 = lhs1 - rhs1
        if gap1 >= 0.0:
            if gap1 < worst_gap:
                worst_gap = gap1
                worst = (mask, lhs1, rhs1)
            continue
        # demand branch failed; try the supply branch on K
        kmask = ((1 << n) - 1) ^ gm
        gk = 0
        kk = kmask
        while kk:
            lowb = kk & -kk
            gk |= vmask[lowb.bit_length() - 1]
            kk ^= lowb
        lhs2 = _mask_weight(gk, s_tab)
        rhs2 = (total_d - d_gm) - eps
        gap2 = lhs2 - rhs2
        gap, lhs, rhs = (gap2, lhs2, rhs2) if gap2 > gap1 else (gap1, lhs1, rhs1)
        if gap < worst_gap:
            worst_gap = gap
            worst = (mask, lhs, rhs)
    return AuditReport(
        condition="either_or",
        passed=worst_gap >= -config.tol,
        worst_subset=_subset_ids(worst[0], m),
        lhs=worst[1],
        rhs=worst[2],
        gap=worst_gap,
        subsets_checked=size,
    )


def _expansion_scan(graph, q, side_weights, q_floor, rhs_of, condition, cap, tol):
    """Shared scan for the two expansion audits: iterate subsets whose
    importance weight q(L) reaches q_floor and compare the weight of the
    neighborhood against rhs_of(q(L)).  The floor filter and the verdict
    both use the rounding guard so subsets sitting exactly on either
    boundary are neither dropped nor failed over a one-ulp difference."""
    m = graph.m
    _guard_enumeration(m, cap)
    nb = neighbor_bitmasks(graph)
    w_tab = _weighted_byte_tables(side_weights)
    size = 1 << m
    gamma_of = [0] * size
    q_of = [0.0] * size
    checked = 0
    worst_gap = math.inf
    worst = None
    for mask in range(1, size):
        low = mask & -mask
        rest = mask ^ low
        u = low.bit_length() - 1
        gm = gamma_of[rest] | nb[u]
        qv = q_of[rest] + q[u]
        gamma_of[mask] = gm
        q_of[mask] = qv
        if qv < q_floor - tol:
            continue
        checked += 1
        lhs = _mask_weight(gm, w_tab)
        rhs = rhs_of(qv)
        gap = lhs - rhs
        if gap < worst_gap:
            worst_gap = gap
            worst = (mask, lhs, rhs)
    if worst is None:
        return AuditReport(condition, True, (), 0.0, 0.0, 0.0, 0)
    return AuditReport(
        condition=condition,
        passed=worst_gap >= -tol,
        worst_subset=_subset_ids(worst[0], m),
        lhs=worst[1],
        rhs=worst[2],
        gap=worst_gap,
        subsets_checked=checked,
    )


def expansion_audit_demand(graph: DesignGraph, profile: ImportanceProfile,
                           scenario: Scenario, config: AuditConfig) -> AuditReport:
    """Demand expansion: subsets of importance at least c_l * epsilon / kappa
    must see realized neighbor demand min(1 - delta, (kappa / c_l) * q(L))."""
    if scenario.m != graph.m or scenario.n != graph.n:
        raise InvalidInputError("scenario shape does not match design shape")
    if profile.m != graph.m:
        raise InvalidInputError("profile shape does not match design shape")
    kappa, c_l, delta = config.kappa, config.c_l, config.delta
    q_floor = c_l * config.epsilon / kappa
    ceiling = 1.0 - delta
    slope = kappa / c_l

    def rhs_of(qv):
        return min(ceiling, slope * qv)

    return _expansion_scan(
        graph,
        [float(x) for x in profile.q],
        [float(x) for x in scenario.demand],
        q_floor,
        rhs_of,
        "expansion_demand",
        config.max_enumeration_m,
        config.tol,
    )


def expansion_audit_importance(graph: DesignGraph, profile: ImportanceProfile,
                               config: AuditConfig) -> AuditReport:
    """Importance expansion: subsets of importance at least tau must have a
    neighborhood of importance at least 1 - tau.  Scenario-free."""
    if profile.m != graph.m or profile.n != graph.n:
        raise InvalidInputError("profile shape does not match design shape")
    tau = config.tau
    floor = 1.0 - tau

    def rhs_of(_qv):
        return floor

    return _expansion_scan(
        graph,
        [float(x) for x in profile.q],
        [float(x) for x in profile.p],
        tau,
        rhs_of,
        "expansion_importance",
        config.max_enumeration_m,
        config.tol,
    )


def neighbor_probability_check(system: ProductionSystem, profile: ImportanceProfile,
                               gamma: float, subset, v: int, trials: int,
                               seed: int) -> tuple:
    """Monte Carlo check of the neighbor-probability floor.

    Resamples the wiring coin flips ``trials`` times and counts how often
    demand node ``v`` neighbors the supply subset.  Returns (empirical,
    lower_bound) where the bound is 1 - exp(-p(v) * gamma * n_bar * q(L)).
    Raises BoundViolationError if the empirical frequency falls more than
    three binomial standard deviations below the bound.
    """
    if trials < 1:
        raise InvalidInputError("trials must be >= 1")
    if not (0 <= int(v) < profile.n):
        raise IndexError(f"demand id {v} out of range [0, {profile.n})")
    ids = sorted({int(u) for u in subset})
    if ids and (ids[0] < 0 or ids[-1] >= profile.m):
        raise IndexError("supply id out of range in subset")
    q_l = float(profile.q[ids].sum()) if ids else 0.0
    p_v = float(profile.p[v])
    bound = 1.0 - math.exp(-p_v * gamma * profile.n_bar * q_l)
    if not ids:
        return 0.0, bound
    r = np.minimum(gamma * profile.n_bar * profile.q[ids] * p_v, 1.0)
    rng = make_rng(seed)
    hits = 0
    block = max(1, 4_000_000 // len(ids))
    done = 0
    while done < trials:
        take = min(block, trials - done)
        draws = rng.random((take, len(ids)))
        hits += int(np.any(draws < r, axis=1).sum())
        done += take
    empirical = hits / trials
    sigma = math.sqrt(max(bound * (1.0 - bound), 0.0) / trials)
    if empirical < bound - 3.0 * sigma:
        err = BoundViolationError(
            f"empirical frequency {empirical:.6f} fell below the analytic "
            f"floor {bound:.6f} minus 3 sigma ({3.0 * sigma:.6f})"
        )
        err.empirical = empirical
        err.lower_bound = bound
        raise err
    return empirical, bound


def profile_edge_probabilities(profile: ImportanceProfile, gamma: float) -> np.ndarray:
    """Convenience passthrough used by audit tooling."""
    return probability_matrix(profile, gamma)
