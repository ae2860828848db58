"""Flexibility-design builders.

Given a normalized production system, this module turns node means into
importance weights (optionally clamped below so no node is ignored) and
wires supply to demand by independent coin flips: pair (u, v) receives an
edge with probability min(gamma * n_bar * q(u) * p(v), 1), where n_bar is
the larger side count and gamma tunes the average degree.

Four wiring methods are exposed:

``wpc``
    mean-weighted wiring, q and p proportional to the raw means;
``upc``
    uniform wiring, q = 1/m and p = 1/n regardless of the means;
``tpc``
    thresholded wiring, means clamped below at threshold_c/m (supply)
    and threshold_c/n (demand) before normalizing, which guarantees
    every node a positive connection probability;
``full``
    the complete bipartite graph, no randomness.

On a symmetric system the clamp is inactive and ``tpc`` degenerates to
``wpc`` exactly, coin flip for coin flip.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidInstanceError
from .rng import make_rng
from .system import ProductionSystem

WPC = "wpc"
UPC = "upc"
TPC = "tpc"
FULL = "full"
METHODS = (WPC, UPC, TPC, FULL)

_NORM_TOL = 1e-6


def _canonical_method(method: str) -> str:
    m = str(method).strip().lower()
    if m not in METHODS:
        raise InvalidInputError(f"unknown method {method!r}; expected one of {METHODS}")
    return m


def _require_normalized(system: ProductionSystem) -> None:
    ts = system.total_mean_supply()
    td = system.total_mean_demand()
    if abs(ts - 1.0) > _NORM_TOL or abs(td - 1.0) > _NORM_TOL:
        raise InvalidInstanceError(
            f"system must be normalized to unit totals (got {ts!r} / {td!r}); "
            "call normalize() first"
        )


@dataclass(frozen=True)
class ImportanceProfile:
    """Connection weights for one system: q over supplies, p over demands.

    Both vectors sum to one.  ``norm_q`` and ``norm_p`` are the
    normalizers divided out after clamping, and ``threshold_c`` records
    the clamp level used (0 for unclamped profiles).
    """

    q: np.ndarray
    p: np.ndarray
    norm_q: float
    norm_p: float
    threshold_c: float

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        p = np.asarray(self.p, dtype=float)
        q.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def m(self) -> int:
        return int(self.q.size)

    @property
    def n(self) -> int:
        return int(self.p.size)

    @property
    def n_bar(self) -> int:
        return max(self.m, self.n)


def importance_profile(system: ProductionSystem, threshold_c: float = 0.2) -> ImportanceProfile:
    """Clamp each side's means from below, then renormalize.

    q(u) = max(mean_supply(u), threshold_c/m) / norm_q where norm_q makes
    the weights sum to one; p(v) analogous with n.  The clamp keeps every
    weight at or above threshold_c / (side count * normalizer), so no node
    can be starved of edges by a vanishing mean.
    """
    if not (threshold_c > 0.0):
        raise InvalidInputError("threshold_c must be positive")
    _require_normalized(system)
    m, n = system.m, system.n
    raw_q = np.maximum(system.mean_supply, threshold_c / m)
    raw_p = np.maximum(system.mean_demand, threshold_c / n)
    norm_q = float(raw_q.sum())
    norm_p = float(raw_p.sum())
    return ImportanceProfile(raw_q / norm_q, raw_p / norm_p, norm_q, norm_p, threshold_c)


def method_profile(system: ProductionSystem, method: str, threshold_c: float = 0.2):
    """Importance profile a wiring method uses; None for the full graph."""
    method = _canonical_method(method)
    if method == FULL:
        return None
    if method == TPC:
        return importance_profile(system, threshold_c)
    _require_normalized(system)
    m, n = system.m, system.n
    if method == UPC:
        return ImportanceProfile(np.full(m, 1.0 / m), np.full(n, 1.0 / n), 1.0, 1.0, 0.0)
    ts = system.total_mean_supply()
    td = system.total_mean_demand()
    return ImportanceProfile(system.mean_supply / ts, system.mean_demand / td, ts, td, 0.0)


def gamma_from_theory(epsilon: float, kappa: float, c0: float = 1.0) -> float:
    """Average-degree parameter that backs the probabilistic guarantee:
    c0 * kappa^3 * ln(e * kappa) * ln(4 * kappa / epsilon)."""
    if not (0.0 < epsilon < 1.0):
        raise InvalidInputError("epsilon must lie in (0, 1)")
    if not (kappa >= 1.0):
        raise InvalidInputError("kappa must be >= 1")
    if not (c0 > 0.0):
        raise InvalidInputError("c0 must be positive")
    return c0 * kappa**3 * math.log(math.e * kappa) * math.log(4.0 * kappa / epsilon)


@dataclass(frozen=True)
class ConstructionConfig:
    """How to pick gamma, the clamp level, and the build seed.

    ``gamma_mode`` is "direct" (use ``gamma`` as given, the way the
    simulation studies sweep average degree) or "theory" (derive gamma
    from epsilon, kappa, and the free constant c0).
    """

    seed: int
    gamma_mode: str = "direct"
    gamma: float | None = None
    epsilon: float | None = None
    kappa: float | None = None
    c0: float = 1.0
    threshold_c: float = 0.2

    def __post_init__(self):
        if self.gamma_mode not in ("direct", "theory"):
            raise InvalidInputError("gamma_mode must be 'direct' or 'theory'")
        if self.gamma is not None and not (self.gamma > 0.0):
            raise InvalidInputError("gamma must be positive")
        if not (self.threshold_c > 0.0):
            raise InvalidInputError("threshold_c must be positive")
        if self.gamma_mode == "theory" and self.epsilon is None:
            raise InvalidInputError("theory mode needs epsilon")

    def resolve_gamma(self, system: ProductionSystem | None = None) -> float:
        if self.gamma_mode == "direct":
            if self.gamma is None:
                raise InvalidInputError("direct mode needs an explicit gamma")
            return float(self.gamma)
        kappa = self.kappa if self.kappa is not None else (system.kappa if system else None)
        if kappa is None:
            raise InvalidInputError("theory mode needs kappa (or a system to take it from)")
        return gamma_from_theory(self.epsilon, kappa, self.c0)


def edge_probability(profile: ImportanceProfile, gamma: float, u: int, v: int) -> float:
    """Probability the coin flip for pair (u, v) lands an edge."""
    if not (0 <= int(u) < profile.m):
        raise IndexError(f"supply id {u} out of range [0, {profile.m})")
    if not (0 <= int(v) < profile.n):
        raise IndexError(f"demand id {v} out of range [0, {profile.n})")
    if not (gamma > 0.0):
        raise InvalidInputError("gamma must be positive")
    # associate as (gamma * n_bar) * (q * p) to match probability_matrix bitwise
    return min(gamma * profile.n_bar * (float(profile.q[u]) * float(profile.p[v])), 1.0)


def probability_matrix(profile: ImportanceProfile, gamma: float) -> np.ndarray:
    """m x n matrix of edge probabilities, clamped at one."""
    if not (gamma > 0.0):
        raise InvalidInputError("gamma must be positive")
    return np.minimum(gamma * profile.n_bar * np.outer(profile.q, profile.p), 1.0)


@dataclass(frozen=True)
class DesignGraph:
    """Immutable bipartite design: per-supply-node sorted demand neighbors."""

    m: int
    n: int
    adjacency: tuple
    method: str
    gamma: float
    seed: int | None

    def __post_init__(self):
        if self.m < 1 or self.n < 1:
            raise InvalidInstanceError("m and n must be >= 1")
        if len(self.adjacency) != self.m:
            raise InvalidInstanceError("adjacency must list every supply node")
        adj = []
        for u, nbrs in enumerate(self.adjacency):
            row = tuple(int(v) for v in nbrs)
            for a, b in zip(row, row[1:]):
                if b <= a:
                    raise InvalidInstanceError(
                        f"neighbors of supply {u} must be strictly increasing"
                    )
            if row and (row[0] < 0 or row[-1] >= self.n):
                raise InvalidInstanceError(f"neighbor of supply {u} out of range")
            adj.append(row)
        object.__setattr__(self, "adjacency", tuple(adj))
        object.__setattr__(self, "method", _canonical_method(self.method))

    @property
    def edge_count(self) -> int:
        return sum(len(r) for r in self.adjacency)

    def neighbors(self, u: int):
        return self.adjacency[u]

    def edges(self):
        """Yield (u, v) pairs in lexicographic order."""
        for u, row in enumerate(self.adjacency):
            for v in row:
                yield (u, v)

    def supply_degrees(self) -> np.ndarray:
        return np.array([len(r) for r in self.adjacency], dtype=int)

    def demand_degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        for row in self.adjacency:
            for v in row:
                deg[v] += 1
        return deg

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "gamma": self.gamma,
            "seed": self.seed,
            "m": self.m,
            "n": self.n,
            "edges": [[u, v] for (u, v) in self.edges()],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DesignGraph":
        try:
            m = int(d["m"])
            n = int(d["n"])
            edges = d["edges"]
            method = d["method"]
            gamma = float(d.get("gamma", 0.0))
            seed = d.get("seed")
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInstanceError(f"malformed design data: {exc}") from exc
        rows = [[] for _ in range(m)]
        for pair in edges:
            u, v = int(pair[0]), int(pair[1])
            if not (0 <= u < m):
                raise InvalidInstanceError(f"edge endpoint {u} out of supply range")
            rows[u].append(v)
        return cls(m, n, tuple(tuple(sorted(set(r))) for r in rows), method, gamma,
                   None if seed is None else int(seed))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "DesignGraph":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInstanceError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


def build_design(system: ProductionSystem, config: ConstructionConfig, method: str) -> DesignGraph:
    """Sample one design.

    Every pair flips an independent coin; the uniform draws come as one
    m x n block from a Philox stream keyed by config.seed, in fixed row
    order, so two methods with identical probabilities and the same seed
    produce identical edge sets.  The full method takes every pair and
    consumes no randomness.
    """
    method = _canonical_method(method)
    m, n = system.m, system.n
    if method == FULL:
        _require_normalized(system)
        adj = tuple(tuple(range(n)) for _ in range(m))
        gamma = 0.0
        if config.gamma is not None:
            gamma = float(config.gamma)
        return DesignGraph(m, n, adj, FULL, gamma, config.seed)
    gamma = config.resolve_gamma(system)
    profile = method_profile(system, method, config.threshold_c)
    rmat = probability_matrix(profile, gamma)
    draws = make_rng(config.seed).random((m, n))
    hit = draws < rmat
    adj = tuple(tuple(int(v) for v in np.flatnonzero(hit[u])) for u in range(m))
    return DesignGraph(m, n, adj, method, gamma, config.seed)


def expected_edge_count(system: ProductionSystem, config: ConstructionConfig, method: str) -> float:
    """Analytic expected number of edges under the method's coin flips."""
    method = _canonical_method(method)
    if method == FULL:
        return float(system.m * system.n)
    gamma = config.resolve_gamma(system)
    profile = method_profile(system, method, config.threshold_c)
    return float(probability_matrix(profile, gamma).sum())
