"""Fulfilled demand of a design under one scenario.

The fulfilled demand is the value of a maximum flow through the
three-layer network  source -> supplies -> demands -> sink,  where the
source arcs carry realized supplies, the sink arcs carry realized
demands, and the design's edges carry effectively infinite capacity.
By strong duality this equals the smallest value of
outside-supply(L) + neighbor-demand(L) over supply subsets L, which the
brute-force oracle evaluates exhaustively on small instances.

The solver is a blocking-flow (shortest augmenting path) method over
real capacities with a 1e-12 residual tolerance; it terminates when no
augmenting path with residual above the tolerance remains, which is the
max-flow certificate.
"""
from __future__ import annotations

from dataclasses import dataclass

from .construct import DesignGraph
from .errors import InvalidInputError, TooLargeError
from .system import Scenario

_TOL = 1e-12


@dataclass(frozen=True)
class FlowResult:
    """Max-flow value, its ratio to the full-flexibility benchmark, and
    (optionally) the per-edge flow assignment in the design's edge order."""

    value: float
    ratio_to_full: float
    edge_flows: tuple | None = None


@dataclass(frozen=True)
class CutResult:
    """Minimizing supply subset and its cut value."""

    value: float
    subset: tuple


class FulfillmentSolver:
    """Reusable max-flow solver bound to one design.

    Building the arc arrays once and swapping capacities per scenario is
    what makes large scenario sweeps affordable; ``solve`` is safe to call
    any number of times.
    """

    def __init__(self, graph: DesignGraph):
        self.graph = graph
        m, n = graph.m, graph.n
        self.m = m
        self.n = n
        # node ids: 0 source, 1..m supplies, m+1..m+n demands, m+n+1 sink
        nv = m + n + 2
        self.nv = nv
        self.source = 0
        self.sink = m + n + 1
        to = []
        out = [[] for _ in range(nv)]

        def add(a, b):
            i = len(to)
            to.append(b)
            to.append(a)
            out[a].append(i)
            out[b].append(i + 1)

        for u in range(m):
            add(0, 1 + u)
        for (u, v) in graph.edges():
            add(1 + u, 1 + m + v)
        for v in range(n):
            add(1 + m + v, self.sink)
        self.to = to
        self.out = out
        self.n_arcs = len(to)

    def solve(self, supply, demand, need_flows: bool = False):
        """Return the max-flow value (and per-edge flows if asked)."""
        m, n = self.m, self.n
        if len(supply) != m or len(demand) != n:
            raise InvalidInputError(
                f"scenario shape ({len(supply)}, {len(demand)}) does not match "
                f"design shape ({m}, {n})"
            )
        cap = [0.0] * self.n_arcs
        for u in range(m):
            cap[2 * u] = float(supply[u])
        # middle arcs: a value no feasible flow can reach
        inf_cap = float(sum(supply)) + float(sum(demand)) + 1.0
        mid_lo = 2 * m
        mid_hi = self.n_arcs - 2 * n
        for i in range(mid_lo, mid_hi, 2):
            cap[i] = inf_cap
        for v in range(n):
            cap[mid_hi + 2 * v] = float(demand[v])

        to = self.to
        out = self.out
        source, sink, nv = self.source, self.sink, self.nv
        total = 0.0
        while True:
            level = [-1] * nv
            level[source] = 0
            queue = [source]
            qi = 0
            while qi < len(queue):
                x = queue[qi]
                qi += 1
                lx = level[x] + 1
                for a in out[x]:
                    y = to[a]
                    if cap[a] > _TOL and level[y] < 0:
                        level[y] = lx
                        queue.append(y)
            if level[sink] < 0:
                break
            # blocking flow on the level graph, iterative DFS
            it = [0] * nv
            path = []
            x = source
            while True:
                if x == sink:
                    bottleneck = min(cap[a] for a in path)
                    for a in path:
                        cap[a] -= bottleneck
                        cap[a ^ 1] += bottleneck
                    total += bottleneck
                    k = 0
                    while k < len(path) and cap[path[k]] > _TOL:
                        k += 1
                    del path[k:]
                    x = source if k == 0 else to[path[k - 1]]
                    continue
                arcs = out[x]
                i = it[x]
                lx1 = level[x] + 1
                moved = False
                while i < len(arcs):
                    a = arcs[i]
                    y = to[a]
                    if cap[a] > _TOL and level[y] == lx1:
                        it[x] = i
                        path.append(a)
                        x = y
                        moved = True
                        break
                    i += 1
                if moved:
                    continue
                it[x] = len(arcs)
                if x == source:
                    break
                level[x] = -1
                a = path.pop()
                x = to[a ^ 1]
                it[x] += 1

        if not need_flows:
            return total, None
        flows = []
        for i in range(mid_lo, mid_hi, 2):
            flows.append(cap[i + 1])  # reverse capacity equals pushed flow
        return total, tuple(flows)


def full_flex_value(scenario: Scenario) -> float:
    """Fulfilled demand of the complete design: min of the two totals."""
    return min(scenario.total_supply(), scenario.total_demand())


def _ratio(value: float, benchmark: float) -> float:
    if benchmark <= 0.0:
        return 1.0
    return min(value / benchmark, 1.0)


def max_fulfilled_demand(graph: DesignGraph, scenario: Scenario,
                         with_flows: bool = False) -> FlowResult:
    """Exact fulfilled demand of ``graph`` under ``scenario``."""
    if scenario.m != graph.m or scenario.n != graph.n:
        raise InvalidInputError(
            f"scenario shape ({scenario.m}, {scenario.n}) does not match "
            f"design shape ({graph.m}, {graph.n})"
        )
    solver = FulfillmentSolver(graph)
    value, flows = solver.solve(scenario.supply, scenario.demand, need_flows=with_flows)
    return FlowResult(value, _ratio(value, full_flex_value(scenario)), flows)


def fulfillment_ratio(graph: DesignGraph, scenario: Scenario) -> float:
    """Fulfilled demand relative to the full-flexibility benchmark, in [0, 1].

    When both values are zero (nothing to fulfill) the ratio is 1.
    """
    return max_fulfilled_demand(graph, scenario).ratio_to_full


def _weighted_byte_tables(weights) -> list:
    """Per-byte lookup tables so a bitmask's weight sum costs one table
    probe per byte instead of a popcount loop."""
    n = len(weights)
    tables = []
    for base in range(0, n, 8):
        chunk = weights[base : base + 8]
        tab = [0.0] * 256
        for b in range(1, 256):
            low = b & -b
            tab[b] = tab[b ^ low] + (chunk[low.bit_length() - 1] if low.bit_length() <= len(chunk) else 0.0)
        tables.append(tab)
    return tables


def _mask_weight(mask: int, tables: list) -> float:
    total = 0.0
    i = 0
    while mask:
        total += tables[i][mask & 255]
        mask >>= 8
        i += 1
    return total


def neighbor_bitmasks(graph: DesignGraph) -> list:
    """Per-supply-node neighbor sets as integer bitmasks over demand ids."""
    masks = []
    for row in graph.adjacency:
        mk = 0
        for v in row:
            mk |= 1 << v
        masks.append(mk)
    return masks


def min_cut_bruteforce(graph: DesignGraph, scenario: Scenario, max_m: int = 20) -> CutResult:
    """Exhaustive minimum of outside-supply(L) + neighbor-demand(L).

    Enumerates all 2^m supply subsets; ties go to the smallest bitmask so
    results are reproducible.  Guarded by ``max_m`` because the scan is
    exponential in m.
    """
    if scenario.m != graph.m or scenario.n != graph.n:
        raise InvalidInputError("scenario shape does not match design shape")
    m = graph.m
    if m > max_m:
        raise TooLargeError(f"m = {m} exceeds the enumeration cap {max_m}")
    s = [float(x) for x in scenario.supply]
    total_s = sum(s)
    nb = neighbor_bitmasks(graph)
    d_tables = _weighted_byte_tables([float(x) for x in scenario.demand])

    size = 1 << m
    gamma_of = [0] * size
    s_of = [0.0] * size
    best_value = total_s  # L = empty set
    best_mask = 0
    for mask in range(1, size):
        low = mask & -mask
        rest = mask ^ low
        u = low.bit_length() - 1
        gm = gamma_of[rest] | nb[u]
        sv = s_of[rest] + s[u]
        gamma_of[mask] = gm
        s_of[mask] = sv
        value = (total_s - sv) + _mask_weight(gm, d_tables)
        if value < best_value:
            best_value = value
            best_mask = mask
    subset = tuple(u for u in range(m) if best_mask >> u & 1)
    return CutResult(best_value, subset)
