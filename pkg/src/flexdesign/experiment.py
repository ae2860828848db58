"""Monte Carlo harness for design evaluation.

A plan names an instance family, a set of wiring methods, and a grid of
average degrees.  For every (method, gamma) cell the harness builds
``n_graphs`` independent designs and evaluates each on ``n_scenarios``
demand draws, reporting the mean and spread of the fulfillment ratio,
the average edge count, and how often the design reaches (1 - epsilon)
of the benchmark.  Scenario draws are keyed by (graph index, scenario
index) only, so every method and every gamma sees identical demand
realizations; differences between rows are differences between designs,
not sampling luck.

Seeds derive from the plan's master seed by fixed integer paths, which
makes runs deterministic, byte-for-byte in the emitted CSV, no matter
how many worker processes share the load.
"""
from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .construct import METHODS, ConstructionConfig, DesignGraph, build_design
from .errors import InvalidInputError, InvalidInstanceError
from .flow import FulfillmentSolver
from .rng import derive_seed
from .system import (
    ProductionSystem,
    make_pareto_instance,
    make_two_level_instance,
    make_uniform_instance,
    normalize,
    sample_scenario,
)

_FAMILIES = ("two_level", "pareto", "uniform", "instance")
# seed-path tags: instance draw, graph builds, scenario draws
_PATH_INSTANCE = 0
_PATH_GRAPH = 1
_PATH_SCENARIO = 2

CSV_HEADER = ("method", "gamma", "mean_ratio", "std_ratio", "mean_edges",
              "optimality_freq", "n_samples")


@dataclass(frozen=True)
class ExperimentPlan:
    """Everything needed to reproduce one Monte Carlo sweep."""

    family: str
    methods: tuple
    gamma_grid: tuple
    n_graphs: int
    n_scenarios: int
    epsilon: float
    master_seed: int
    threshold_c: float = 0.5
    n: int | None = None
    m: int | None = None
    alpha: float | None = None
    beta: float | None = None
    cap: float = 50.0
    instance_path: str | None = None
    instance_seed: int | None = None

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}")
        methods = tuple(str(x).strip().lower() for x in self.methods)
        if not methods or any(x not in METHODS for x in methods):
            raise InvalidInputError(f"methods must be a non-empty subset of {METHODS}")
        object.__setattr__(self, "methods", methods)
        grid = tuple(float(g) for g in self.gamma_grid)
        if not grid or any(not (g > 0.0) for g in grid):
            raise InvalidInputError("gamma_grid must be non-empty and positive")
        object.__setattr__(self, "gamma_grid", grid)
        if self.n_graphs < 1 or self.n_scenarios < 1:
            raise InvalidInputError("n_graphs and n_scenarios must be >= 1")
        if not (0.0 < self.epsilon < 1.0):
            raise InvalidInputError("epsilon must lie in (0, 1)")
        if not isinstance(self.master_seed, (int, np.integer)):
            raise InvalidInputError("master_seed must be an integer")
        if self.family == "two_level" and (self.n is None or self.alpha is None):
            raise InvalidInputError("two_level plans need n and alpha")
        if self.family == "pareto" and (self.n is None or self.beta is None):
            raise InvalidInputError("pareto plans need n and beta")
        if self.family == "uniform" and self.n is None:
            raise InvalidInputError("uniform plans need n")
        if self.family == "instance" and not self.instance_path:
            raise InvalidInputError("instance plans need instance_path")

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "methods": list(self.methods),
            "gamma_grid": list(self.gamma_grid),
            "n_graphs": self.n_graphs,
            "n_scenarios": self.n_scenarios,
            "epsilon": self.epsilon,
            "master_seed": self.master_seed,
            "threshold_c": self.threshold_c,
            "n": self.n,
            "m": self.m,
            "alpha": self.alpha,
            "beta": self.beta,
            "cap": self.cap,
            "instance_path": self.instance_path,
            "instance_seed": self.instance_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentPlan":
        try:
            return cls(
                family=d["family"],
                methods=tuple(d["methods"]),
                gamma_grid=tuple(d["gamma_grid"]),
                n_graphs=int(d["n_graphs"]),
                n_scenarios=int(d["n_scenarios"]),
                epsilon=float(d["epsilon"]),
                master_seed=int(d["master_seed"]),
                threshold_c=float(d.get("threshold_c", 0.5)),
                n=None if d.get("n") is None else int(d["n"]),
                m=None if d.get("m") is None else int(d["m"]),
                alpha=None if d.get("alpha") is None else float(d["alpha"]),
                beta=None if d.get("beta") is None else float(d["beta"]),
                cap=float(d.get("cap", 50.0)),
                instance_path=d.get("instance_path"),
                instance_seed=None if d.get("instance_seed") is None else int(d["instance_seed"]),
            )
        except KeyError as exc:
            raise InvalidInstanceError(f"experiment plan is missing field {exc}") from exc

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "ExperimentPlan":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInstanceError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(data)


def plan_system(plan: ExperimentPlan) -> ProductionSystem:
    """Materialize the plan's production system (normalized)."""
    if plan.family == "two_level":
        return make_two_level_instance(plan.n, plan.alpha)
    seed = plan.instance_seed
    if seed is None:
        seed = derive_seed(plan.master_seed, _PATH_INSTANCE)
    m = plan.m if plan.m is not None else plan.n
    if plan.family == "pareto":
        return make_pareto_instance(m, plan.n, plan.beta, plan.cap, seed=seed)
    if plan.family == "uniform":
        return make_uniform_instance(m, plan.n, seed=seed)
    return normalize(ProductionSystem.load(plan.instance_path))


@dataclass(frozen=True)
class ExperimentRow:
    method: str
    gamma: float
    mean_ratio: float
    std_ratio: float
    mean_edges: float
    optimality_freq: float
    n_samples: int


@dataclass(frozen=True)
class ExperimentTable:
    rows: tuple
    epsilon: float | None = None


@dataclass(frozen=True)
class OptimalityRow:
    method: str
    gamma: float
    freq: float
    per_graph: tuple


@dataclass(frozen=True)
class OptimalityTable:
    rows: tuple
    epsilon: float | None = None


class _CellStats(NamedTuple):
    sum_ratio: float
    sum_sq: float
    count_rel: int
    count_abs: int
    edges: int


_WORK = {}


def _init_worker(plan, system):
    _WORK["plan"] = plan
    _WORK["system"] = system


def _cell(system: ProductionSystem, plan: ExperimentPlan, method: str,
          gamma_index: int, graph_index: int) -> _CellStats:
    """Build one design and sweep its shared scenario draws."""
    cfg = ConstructionConfig(
        seed=derive_seed(plan.master_seed, _PATH_GRAPH, gamma_index, graph_index),
        gamma=plan.gamma_grid[gamma_index],
        threshold_c=plan.threshold_c,
    )
    graph = build_design(system, cfg, method)
    solver = FulfillmentSolver(graph)
    eps = plan.epsilon
    sum_ratio = 0.0
    sum_sq = 0.0
    count_rel = 0
    count_abs = 0
    for j in range(plan.n_scenarios):
        scen = sample_scenario(system, derive_seed(plan.master_seed, _PATH_SCENARIO,
                                                   graph_index, j))
        z, _ = solver.solve(scen.supply, scen.demand)
        zf = min(scen.total_supply(), scen.total_demand())
        ratio = 1.0 if zf <= 0.0 else min(z / zf, 1.0)
        sum_ratio += ratio
        sum_sq += ratio * ratio
        if z >= (1.0 - eps) * zf:
            count_rel += 1
        if z >= 1.0 - eps:
            count_abs += 1
    return _CellStats(sum_ratio, sum_sq, count_rel, count_abs, graph.edge_count)


def _cell_task(args):
    method, gamma_index, graph_index = args
    return args, _cell(_WORK["system"], _WORK["plan"], method, gamma_index, graph_index)


def _collect_cells(plan: ExperimentPlan, jobs: int = 1) -> dict:
    """Run every (method, gamma, graph) cell; deterministic regardless of jobs."""
    system = plan_system(plan)
    tasks = [
        (method, gi, g)
        for method in plan.methods
        for gi in range(len(plan.gamma_grid))
        for g in range(plan.n_graphs)
    ]
    cells = {}
    if jobs is None:
        jobs = os.cpu_count() or 1
    jobs = max(1, min(int(jobs), len(tasks)))
    if jobs == 1:
        for t in tasks:
            method, gi, g = t
            cells[t] = _cell(system, plan, method, gi, g)
        return cells
    chunk = max(1, len(tasks) // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=(plan, system)) as pool:
        for key, stats in pool.map(_cell_task, tasks, chunksize=chunk):
            cells[key] = stats
    return cells


def ratio_table_from_cells(plan: ExperimentPlan, cells: dict) -> ExperimentTable:
    rows = []
    n_samples = plan.n_graphs * plan.n_scenarios
    for method in plan.methods:
        for gi, gamma in enumerate(plan.gamma_grid):
            sum_r = sum_sq = 0.0
            count_rel = 0
            edge_total = 0
            for g in range(plan.n_graphs):
                st = cells[(method, gi, g)]
                sum_r += st.sum_ratio
                sum_sq += st.sum_sq
                count_rel += st.count_rel
                edge_total += st.edges
            mean = sum_r / n_samples
            var = max(sum_sq / n_samples - mean * mean, 0.0)
            rows.append(ExperimentRow(
                method=method,
                gamma=gamma,
                mean_ratio=mean,
                std_ratio=math.sqrt(var),
                mean_edges=edge_total / plan.n_graphs,
                optimality_freq=count_rel / n_samples,
                n_samples=n_samples,
            ))
    return ExperimentTable(tuple(rows), plan.epsilon)


def optimality_table_from_cells(plan: ExperimentPlan, cells: dict) -> OptimalityTable:
    rows = []
    for method in plan.methods:
        for gi, gamma in enumerate(plan.gamma_grid):
            per_graph = tuple(
                cells[(method, gi, g)].count_abs / plan.n_scenarios
                for g in range(plan.n_graphs)
            )
            pooled = sum(cells[(method, gi, g)].count_abs for g in range(plan.n_graphs))
            rows.append(OptimalityRow(
                method=method,
                gamma=gamma,
                freq=pooled / (plan.n_graphs * plan.n_scenarios),
                per_graph=per_graph,
            ))
    return OptimalityTable(tuple(rows), plan.epsilon)


def run_ratio_experiment(plan: ExperimentPlan, jobs: int = 1) -> ExperimentTable:
    """Fulfillment-ratio sweep over the plan's (method, gamma) grid."""
    return ratio_table_from_cells(plan, _collect_cells(plan, jobs))


def run_optimality_experiment(plan: ExperimentPlan, jobs: int = 1) -> OptimalityTable:
    """Frequency of reaching 1 - epsilon in absolute value (not ratio),
    reported pooled and per graph."""
    return optimality_table_from_cells(plan, _collect_cells(plan, jobs))


def run_experiment_suite(plan: ExperimentPlan, jobs: int = 1):
    """One pass over the cells, both tables out."""
    cells = _collect_cells(plan, jobs)
    return ratio_table_from_cells(plan, cells), optimality_table_from_cells(plan, cells)


class IsolationResult(NamedTuple):
    freq_many_isolated: float
    mean_isolated_u2: float
    mean_u2_edges: float
    analytic_u2_edges: float


def run_isolation_experiment(n: int, alpha: float, gamma: float, n_graphs: int,
                             seed: int) -> IsolationResult:
    """How often mean-weighted wiring strands the low-mean supply block.

    Builds ``n_graphs`` mean-weighted designs on the two-level family and
    reports the frequency that more than n/4 of the low block's nodes end
    up with no edges at all, plus the average isolated count and the
    average number of edges touching the low block (whose analytic
    expectation is gamma * alpha * n / 2).
    """
    if n_graphs < 1:
        raise InvalidInputError("n_graphs must be >= 1")
    system = make_two_level_instance(n, alpha)
    half = n // 2
    isolated_counts = np.empty(n_graphs)
    u2_edges = np.empty(n_graphs)
    for g in range(n_graphs):
        cfg = ConstructionConfig(seed=derive_seed(seed, _PATH_GRAPH, 0, g), gamma=gamma)
        graph = build_design(system, cfg, "wpc")
        degrees = [len(graph.adjacency[u]) for u in range(half, n)]
        isolated_counts[g] = sum(1 for dg in degrees if dg == 0)
        u2_edges[g] = sum(degrees)
    return IsolationResult(
        freq_many_isolated=float(np.mean(isolated_counts > n / 4)),
        mean_isolated_u2=float(isolated_counts.mean()),
        mean_u2_edges=float(u2_edges.mean()),
        analytic_u2_edges=gamma * alpha * n / 2.0,
    )


def emit_results(table: ExperimentTable, path, fmt: str = "csv") -> None:
    """Write the ratio table; reals carry six decimals in either format."""
    fmt = str(fmt).lower()
    if fmt not in ("csv", "json"):
        raise InvalidInputError("format must be 'csv' or 'json'")
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(CSV_HEADER)
                for r in table.rows:
                    writer.writerow([
                        r.method,
                        f"{r.gamma:.6f}",
                        f"{r.mean_ratio:.6f}",
                        f"{r.std_ratio:.6f}",
                        f"{r.mean_edges:.6f}",
                        f"{r.optimality_freq:.6f}",
                        r.n_samples,
                    ])
        else:
            payload = [
                {
                    "method": r.method,
                    "gamma": round(r.gamma, 6),
                    "mean_ratio": round(r.mean_ratio, 6),
                    "std_ratio": round(r.std_ratio, 6),
                    "mean_edges": round(r.mean_edges, 6),
                    "optimality_freq": round(r.optimality_freq, 6),
                    "n_samples": r.n_samples,
                }
                for r in table.rows
            ]
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2)
                fh.write("\n")
    except OSError as exc:
        raise InvalidInputError(f"cannot write results to {path}: {exc}") from exc


def read_results(path, fmt: str = "csv") -> ExperimentTable:
    """Parse a file produced by :func:`emit_results`."""
    fmt = str(fmt).lower()
    rows = []
    if fmt == "csv":
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            for rec in reader:
                rows.append(ExperimentRow(
                    method=rec["method"],
                    gamma=float(rec["gamma"]),
                    mean_ratio=float(rec["mean_ratio"]),
                    std_ratio=float(rec["std_ratio"]),
                    mean_edges=float(rec["mean_edges"]),
                    optimality_freq=float(rec["optimality_freq"]),
                    n_samples=int(rec["n_samples"]),
                ))
    elif fmt == "json":
        with open(path) as fh:
            for rec in json.load(fh):
                rows.append(ExperimentRow(**rec))
    else:
        raise InvalidInputError("format must be 'csv' or 'json'")
    return ExperimentTable(tuple(rows))


def emit_design_snapshot(graph: DesignGraph, path, split: int | None = None) -> None:
    """Write the design plus its degree profile and block edge shares.

    ``split`` divides the supply side into a first and second block
    (default: halves, matching the two-level family's high and low means);
    the share of edges touching each block is the headline statistic.
    """
    if split is None:
        split = graph.m // 2
    if not (0 <= split <= graph.m):
        raise InvalidInputError("split must lie in [0, m]")
    sdeg = graph.supply_degrees()
    ddeg = graph.demand_degrees()
    total = int(sdeg.sum())
    first = int(sdeg[:split].sum())

    def histogram(deg):
        vals, counts = np.unique(np.asarray(deg), return_counts=True)
        return [[int(a), int(b)] for a, b in zip(vals, counts)]

    payload = graph.to_dict()
    payload.update({
        "supply_degrees": [int(x) for x in sdeg],
        "demand_degrees": [int(x) for x in ddeg],
        "supply_degree_histogram": histogram(sdeg),
        "demand_degree_histogram": histogram(ddeg),
        "split_index": int(split),
        "edge_share_first_block": (first / total) if total else 0.0,
        "edge_share_second_block": ((total - first) / total) if total else 0.0,
    })
    try:
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise InvalidInputError(f"cannot write snapshot to {path}: {exc}") from exc
