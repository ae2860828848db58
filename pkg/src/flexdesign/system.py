"""Production systems: mean capacities plus per-node randomness.

A system couples m supply nodes and n demand nodes.  Each node has a mean
capacity and a distribution law describing how its realized capacity
varies around that mean.  Scenario sampling, normalization to unit totals,
and the regularity checks used by the probabilistic design guarantees all
live here, together with the instance families used throughout the
experiment harness (two-level supplies, heavy-tailed means, uniform means).

Supported laws
--------------
deterministic
    The realized value always equals the mean.
two_point
    Zero with probability 1/2, twice the mean otherwise.
scaled_two_point
    Zero with probability 1 - prob, factor * mean otherwise, with
    factor * prob = 1 so the mean is preserved.
multinomial_allocated
    The nodes of one side sharing this law split a fixed total by a
    weighted multinomial allocation (weights proportional to the means).
    Components are negatively associated and sum exactly to the total.
"""
from __future__ import annotations

import dataclasses
import json
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidInstanceError
from .rng import make_rng

_KINDS = ("deterministic", "two_point", "scaled_two_point", "multinomial_allocated")
_MEAN_TOL = 1e-12


@dataclass(frozen=True)
class DistributionSpec:
    """Law of one node's capacity, parameterized relative to the node mean.

    ``factor`` and ``prob`` describe two-point laws (high value is
    factor * mean, taken with probability prob).  ``total`` and ``units``
    apply only to multinomial allocation: the group's conserved total and
    the integer resolution of the split.
    """

    kind: str
    factor: float = 2.0
    prob: float = 0.5
    total: float | None = None
    units: int = 10000

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidInputError(f"unknown distribution kind {self.kind!r}")
        if self.kind in ("two_point", "scaled_two_point"):
            if not (self.factor > 1.0):
                raise InvalidInputError("two-point factor must exceed 1")
            if not (0.0 < self.prob <= 1.0):
                raise InvalidInputError("two-point prob must lie in (0, 1]")
            if abs(self.factor * self.prob - 1.0) > _MEAN_TOL:
                raise InvalidInstanceError(
                    "two-point law does not preserve the mean: "
                    f"factor*prob = {self.factor * self.prob!r} != 1"
                )
        if self.kind == "multinomial_allocated":
            if self.total is None or not (self.total > 0.0):
                raise InvalidInputError("multinomial allocation needs a positive total")
            if int(self.units) < 1:
                raise InvalidInputError("multinomial units must be >= 1")

    @classmethod
    def deterministic(cls) -> "DistributionSpec":
        return cls("deterministic")

    @classmethod
    def two_point(cls) -> "DistributionSpec":
        return cls("two_point", factor=2.0, prob=0.5)

    @classmethod
    def scaled_two_point(cls, factor: float, prob: float | None = None) -> "DistributionSpec":
        if prob is None:
            if not factor > 1.0:
                raise InvalidInputError("two-point factor must exceed 1")
            prob = 1.0 / factor
        return cls("scaled_two_point", factor=float(factor), prob=float(prob))

    @classmethod
    def multinomial_allocated(cls, total: float, units: int = 10000) -> "DistributionSpec":
        return cls("multinomial_allocated", total=float(total), units=int(units))

    def support_max(self, mean: float) -> float:
        """Largest value the law can realize for a node with this mean."""
        if self.kind == "deterministic":
            return mean
        if self.kind in ("two_point", "scaled_two_point"):
            return self.factor * mean
        return float(self.total)

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "scaled_two_point":
            d["factor"] = self.factor
            d["prob"] = self.prob
        elif self.kind == "multinomial_allocated":
            d["total"] = self.total
            d["units"] = self.units
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        kind = d.get("kind")
        if kind == "deterministic":
            return cls.deterministic()
        if kind == "two_point":
            return cls.two_point()
        if kind == "scaled_two_point":
            return cls.scaled_two_point(float(d["factor"]), float(d.get("prob", 1.0 / float(d["factor"]))))
        if kind == "multinomial_allocated":
            return cls.multinomial_allocated(float(d["total"]), int(d.get("units", 10000)))
        raise InvalidInstanceError(f"unknown distribution kind {kind!r}")


def _as_mean_array(values, side: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise InvalidInstanceError(f"{side} means must form a non-empty 1-d array")
    if not np.all(np.isfinite(arr)):
        raise InvalidInstanceError(f"{side} means must be finite")
    if np.any(arr < 0.0):
        raise InvalidInstanceError(f"{side} means must be nonnegative")
    arr.setflags(write=False)
    return arr


def _validate_side(means: np.ndarray, specs, side: str) -> None:
    if len(specs) != means.size:
        raise InvalidInstanceError(
            f"{side}: {len(specs)} distribution specs for {means.size} nodes"
        )
    group = [i for i, sp in enumerate(specs) if sp.kind == "multinomial_allocated"]
    if not group:
        return
    totals = {specs[i].total for i in group}
    units = {specs[i].units for i in group}
    if len(totals) != 1 or len(units) != 1:
        raise InvalidInstanceError(
            f"{side}: multinomial-allocated nodes must share one total and one resolution"
        )
    total = next(iter(totals))
    group_mean = float(means[group].sum())
    if abs(group_mean - total) > 1e-9 * max(1.0, abs(total)):
        raise InvalidInstanceError(
            f"{side}: allocated total {total!r} does not match the group's "
            f"summed means {group_mean!r}"
        )
    if group_mean <= 0.0:
        raise InvalidInstanceError(f"{side}: multinomial allocation needs positive means")


@dataclass(frozen=True)
class ProductionSystem:
    """Bipartite system of supply and demand nodes with capacity laws.

    ``kappa`` is the bounded-variation constant: a well-posed system keeps
    every realized capacity within [0, kappa * mean].  Construction does
    not reject systems that break this (a warning is emitted instead);
    :func:`check_assumptions` reports the violations.
    """

    mean_supply: np.ndarray
    mean_demand: np.ndarray
    supply_dist: tuple
    demand_dist: tuple
    kappa: float = 2.0

    def __post_init__(self):
        ms = _as_mean_array(self.mean_supply, "supply")
        md = _as_mean_array(self.mean_demand, "demand")
        object.__setattr__(self, "mean_supply", ms)
        object.__setattr__(self, "mean_demand", md)
        object.__setattr__(self, "supply_dist", tuple(self.supply_dist))
        object.__setattr__(self, "demand_dist", tuple(self.demand_dist))
        if not (isinstance(self.kappa, (int, float)) and math.isfinite(self.kappa) and self.kappa > 0):
            raise InvalidInstanceError("kappa must be a positive finite number")
        object.__setattr__(self, "kappa", float(self.kappa))
        _validate_side(ms, self.supply_dist, "supply")
        _validate_side(md, self.demand_dist, "demand")
        bad = self._support_violations()
        if self.kappa < 1.0:
            warnings.warn(
                f"kappa = {self.kappa} is below 1; the bounded-variation "
                "premise cannot hold",
                stacklevel=2,
            )
        elif bad:
            warnings.warn(
                f"{len(bad)} node(s) can realize capacities above kappa times "
                f"their mean (first: {bad[0]})",
                stacklevel=2,
            )

    def _support_violations(self) -> list:
        out = []
        for label, means, specs in (
            ("supply", self.mean_supply, self.supply_dist),
            ("demand", self.mean_demand, self.demand_dist),
        ):
            for i, sp in enumerate(specs):
                mean = float(means[i])
                if sp.support_max(mean) > self.kappa * mean + _MEAN_TOL:
                    out.append(f"{label}[{i}]")
        return out

    @property
    def m(self) -> int:
        return int(self.mean_supply.size)

    @property
    def n(self) -> int:
        return int(self.mean_demand.size)

    @property
    def n_bar(self) -> int:
        return max(self.m, self.n)

    def total_mean_supply(self) -> float:
        return float(self.mean_supply.sum())

    def total_mean_demand(self) -> float:
        return float(self.mean_demand.sum())

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "n": self.n,
            "kappa": self.kappa,
            "mean_supply": [float(x) for x in self.mean_supply],
            "mean_demand": [float(x) for x in self.mean_demand],
            "supply_dist": [sp.to_dict() for sp in self.supply_dist],
            "demand_dist": [sp.to_dict() for sp in self.demand_dist],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ProductionSystem":
        try:
            ms = d["mean_supply"]
            md = d["mean_demand"]
            sd = [DistributionSpec.from_dict(x) for x in d["supply_dist"]]
            dd = [DistributionSpec.from_dict(x) for x in d["demand_dist"]]
            kappa = float(d.get("kappa", 2.0))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInstanceError(f"malformed instance data: {exc}") from exc
        sys_ = cls(ms, md, tuple(sd), tuple(dd), kappa)
        for key in ("m", "n"):
            if key in d and int(d[key]) != getattr(sys_, key):
                raise InvalidInstanceError(
                    f"declared {key} = {d[key]} does not match the arrays"
                )
        return sys_

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ProductionSystem":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInstanceError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


@dataclass(frozen=True)
class Scenario:
    """One realized draw of all capacities, tagged with the seed that made it."""

    supply: np.ndarray
    demand: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        s = np.asarray(self.supply, dtype=float)
        d = np.asarray(self.demand, dtype=float)
        if s.ndim != 1 or d.ndim != 1:
            raise InvalidInputError("scenario sides must be 1-d arrays")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(d))):
            raise InvalidInputError("realized capacities must be finite")
        if np.any(s < 0.0) or np.any(d < 0.0):
            raise InvalidInputError("realized capacities must be nonnegative")
        s.setflags(write=False)
        d.setflags(write=False)
        object.__setattr__(self, "supply", s)
        object.__setattr__(self, "demand", d)

    @property
    def m(self) -> int:
        return int(self.supply.size)

    @property
    def n(self) -> int:
        return int(self.demand.size)

    def total_supply(self) -> float:
        return float(self.supply.sum())

    def total_demand(self) -> float:
        return float(self.demand.sum())

    def to_dict(self) -> dict:
        return {
            "supply": [float(x) for x in self.supply],
            "demand": [float(x) for x in self.demand],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        try:
            return cls(d["supply"], d["demand"], d.get("seed"))
        except (KeyError, TypeError) as exc:
            raise InvalidInstanceError(f"malformed scenario data: {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInstanceError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


def _sample_side(means: np.ndarray, specs, rng: np.random.Generator) -> np.ndarray:
    """Draw one side.  Allocation groups consume randomness first, then the
    independent two-point nodes in ascending node order; deterministic nodes
    consume none."""
    values = means.astype(float).copy()
    group = [i for i, sp in enumerate(specs) if sp.kind == "multinomial_allocated"]
    if group:
        sp0 = specs[group[0]]
        w = means[group]
        pvals = w / w.sum()
        counts = rng.multinomial(sp0.units, pvals)
        values[group] = counts * (sp0.total / sp0.units)
    ind = [i for i, sp in enumerate(specs) if sp.kind in ("two_point", "scaled_two_point")]
    if ind:
        u = rng.random(len(ind))
        factor = np.array([specs[i].factor for i in ind])
        prob = np.array([specs[i].prob for i in ind])
        values[ind] = np.where(u < prob, factor * means[ind], 0.0)
    return values


def sample_scenario(system: ProductionSystem, seed: int) -> Scenario:
    """Sample one scenario.  A pure function of (system, seed): the supply
    side is drawn first, then the demand side, from one Philox stream."""
    rng = make_rng(seed)
    s = _sample_side(system.mean_supply, system.supply_dist, rng)
    d = _sample_side(system.mean_demand, system.demand_dist, rng)
    return Scenario(s, d, seed=int(seed))


def normalize(system: ProductionSystem) -> ProductionSystem:
    """Rescale both sides so each side's means sum to one.

    Law shapes are preserved: two-point factors are unchanged and
    allocation totals are rescaled with their side.
    """
    ts = system.total_mean_supply()
    td = system.total_mean_demand()
    if ts <= 0.0 or td <= 0.0:
        raise InvalidInstanceError("cannot normalize a side with zero total mean")

    def scale_specs(specs, factor):
        out = []
        for sp in specs:
            if sp.kind == "multinomial_allocated":
                out.append(dataclasses.replace(sp, total=sp.total * factor))
            else:
                out.append(sp)
        return tuple(out)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ProductionSystem(
            system.mean_supply / ts,
            system.mean_demand / td,
            scale_specs(system.supply_dist, 1.0 / ts),
            scale_specs(system.demand_dist, 1.0 / td),
            system.kappa,
        )


@dataclass(frozen=True)
class AssumptionReport:
    """Advisory verdicts for the regularity premises of the design guarantees.

    ``mean_bound`` is the ceiling c * epsilon^2 / (kappa^3 * ln(n_bar)) no
    mean may exceed; ``balance_lhs`` and ``balance_rhs`` are the two sides
    of the size/balance requirement min(m, n) / ln(n_bar) >= kappa^3 /
    (c * epsilon^2).
    """

    kappa_ok: bool
    mean_bound_ok: bool
    balance_ok: bool
    mean_bound: float
    max_mean_supply: float
    max_mean_demand: float
    balance_lhs: float
    balance_rhs: float
    violations: tuple

    @property
    def ok(self) -> bool:
        return self.kappa_ok and self.mean_bound_ok and self.balance_ok

    def to_dict(self) -> dict:
        return {
            "kappa_ok": self.kappa_ok,
            "mean_bound_ok": self.mean_bound_ok,
            "balance_ok": self.balance_ok,
            "mean_bound": self.mean_bound,
            "max_mean_supply": self.max_mean_supply,
            "max_mean_demand": self.max_mean_demand,
            "balance_lhs": self.balance_lhs,
            "balance_rhs": self.balance_rhs,
            "ok": self.ok,
            "violations": list(self.violations),
        }


def check_assumptions(system: ProductionSystem, epsilon: float, c: float = 0.9) -> AssumptionReport:
    """Evaluate the regularity premises on a system.

    Advisory only.  The premises are stated for systems normalized to unit
    totals; a note is recorded when the totals are off.  ``c`` is the free
    constant (strictly below one) in the mean ceiling.
    """
    if not (0.0 < epsilon < 1.0):
        raise InvalidInputError("epsilon must lie in (0, 1)")
    if not (0.0 < c < 1.0):
        raise InvalidInputError("c must lie in (0, 1)")
    kappa = system.kappa
    n_bar = system.n_bar
    log_term = math.log(n_bar)
    if log_term > 0.0:
        mean_bound = c * epsilon**2 / (kappa**3 * log_term)
        balance_lhs = min(system.m, system.n) / log_term
    else:
        mean_bound = math.inf
        balance_lhs = math.inf
    balance_rhs = kappa**3 / (c * epsilon**2)

    violations = []
    support_bad = system._support_violations()
    kappa_ok = kappa >= 1.0 and not support_bad
    if kappa < 1.0:
        violations.append(f"kappa = {kappa} is below 1")
    for name in support_bad[:5]:
        violations.append(f"{name}: support exceeds kappa * mean")
    if len(support_bad) > 5:
        violations.append(f"... {len(support_bad) - 5} more support violations")

    max_s = float(system.mean_supply.max())
    max_d = float(system.mean_demand.max())
    mean_bound_ok = max_s <= mean_bound and max_d <= mean_bound
    if max_s > mean_bound:
        violations.append(f"max supply mean {max_s:.6g} exceeds ceiling {mean_bound:.6g}")
    if max_d > mean_bound:
        violations.append(f"max demand mean {max_d:.6g} exceeds ceiling {mean_bound:.6g}")

    balance_ok = balance_lhs >= balance_rhs
    if not balance_ok:
        violations.append(
            f"min(m, n)/ln(n_bar) = {balance_lhs:.6g} is below {balance_rhs:.6g}"
        )

    for label, total in (
        ("supply", system.total_mean_supply()),
        ("demand", system.total_mean_demand()),
    ):
        if abs(total - 1.0) > 1e-9:
            violations.append(f"{label} means sum to {total:.6g}, not 1 (normalize first)")

    return AssumptionReport(
        kappa_ok=kappa_ok,
        mean_bound_ok=mean_bound_ok,
        balance_ok=balance_ok,
        mean_bound=mean_bound,
        max_mean_supply=max_s,
        max_mean_demand=max_d,
        balance_lhs=balance_lhs,
        balance_rhs=balance_rhs,
        violations=tuple(violations),
    )


def make_two_level_instance(n: int, alpha: float) -> ProductionSystem:
    """Symmetric m = n system with deterministic two-level supplies.

    The first n/2 supply nodes carry mean (2 - alpha)/n, the remaining
    n/2 carry alpha/n, so supplies sum to one.  Demands are i.i.d.
    two-point with mean 1/n.  Small alpha makes the second block easy for
    mean-proportional wiring to starve.
    """
    if not isinstance(n, (int, np.integer)) or n < 2 or n % 2 != 0:
        raise InvalidInstanceError("n must be an even integer >= 2")
    if not (0.0 < alpha < 1.0):
        raise InvalidInstanceError("alpha must lie in (0, 1)")
    n = int(n)
    half = n // 2
    ms = np.empty(n)
    ms[:half] = (2.0 - alpha) / n
    ms[half:] = alpha / n
    md = np.full(n, 1.0 / n)
    return ProductionSystem(
        ms,
        md,
        tuple(DistributionSpec.deterministic() for _ in range(n)),
        tuple(DistributionSpec.two_point() for _ in range(n)),
        kappa=2.0,
    )


def make_pareto_instance(
    m: int, n: int, beta: float, cap: float = 50.0, *, seed: int
) -> ProductionSystem:
    """System whose mean capacities follow a truncated power law.

    Means are drawn from a Pareto law with scale 1 and shape ``beta``,
    truncated at ``cap``, then each side is rescaled to sum to one.
    Smaller ``beta`` gives heavier tails and a more lopsided system.
    Supplies are deterministic at their means; demands are two-point.
    """
    if m < 1 or n < 1:
        raise InvalidInstanceError("m and n must be >= 1")
    if not (beta > 0.0):
        raise InvalidInputError("beta must be positive")
    if not (cap > 1.0):
        raise InvalidInputError("cap must exceed the scale 1")
    rng = make_rng(seed)
    raw_s = np.minimum(1.0 + rng.pareto(beta, m), cap)
    raw_d = np.minimum(1.0 + rng.pareto(beta, n), cap)
    ms = raw_s / raw_s.sum()
    md = raw_d / raw_d.sum()
    return ProductionSystem(
        ms,
        md,
        tuple(DistributionSpec.deterministic() for _ in range(m)),
        tuple(DistributionSpec.two_point() for _ in range(n)),
        kappa=2.0,
    )


def make_uniform_instance(m: int, n: int, *, seed: int) -> ProductionSystem:
    """System whose mean capacities are uniform draws rescaled to unit totals.

    Exact zeros are redrawn so every node keeps a positive mean.  Supplies
    are deterministic at their means; demands are two-point.
    """
    if m < 1 or n < 1:
        raise InvalidInstanceError("m and n must be >= 1")
    rng = make_rng(seed)

    def draw(size):
        x = rng.random(size)
        while np.any(x == 0.0):
            zero = x == 0.0
            x[zero] = rng.random(int(zero.sum()))
        return x

    raw_s = draw(m)
    raw_d = draw(n)
    ms = raw_s / raw_s.sum()
    md = raw_d / raw_d.sum()
    return ProductionSystem(
        ms,
        md,
        tuple(DistributionSpec.deterministic() for _ in range(m)),
        tuple(DistributionSpec.two_point() for _ in range(n)),
        kappa=2.0,
    )
