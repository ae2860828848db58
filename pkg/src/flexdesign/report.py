"""Figure rendering for experiment output.

The report path draws the familiar diagnostic pictures next to the
delimited tables: fulfillment ratio against average degree (one curve
per wiring method), the optimality-frequency analogue, and a degree
profile of a single design.  Files render through the Agg backend, so
everything works headless.
"""
from __future__ import annotations

import numpy as np

_METHOD_STYLE = {
    "tpc": {"color": "#1f77b4", "marker": "o"},
    "wpc": {"color": "#d62728", "marker": "s"},
    "upc": {"color": "#2ca02c", "marker": "^"},
    "full": {"color": "#7f7f7f", "marker": "d"},
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _grouped(rows):
    order = []
    series = {}
    for r in rows:
        if r.method not in series:
            order.append(r.method)
            series[r.method] = ([], [])
        xs, ys = series[r.method]
        xs.append(r.gamma)
        ys.append(r)
    return [(m, series[m][0], series[m][1]) for m in order]


def save_ratio_figure(table, path, title: str | None = None) -> None:
    """Mean fulfillment ratio vs average degree, one line per method."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method, xs, rows in _grouped(table.rows):
        style = _METHOD_STYLE.get(method, {})
        ys = [r.mean_ratio for r in rows]
        ax.plot(xs, ys, label=method.upper(), linewidth=1.5, markersize=5, **style)
    ax.set_xlabel("average degree")
    ax.set_ylabel("mean fulfillment ratio")
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_optimality_figure(table, path, title: str | None = None) -> None:
    """Pooled frequency of reaching the near-optimal threshold vs degree."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for method, xs, rows in _grouped(table.rows):
        style = _METHOD_STYLE.get(method, {})
        ys = [r.freq for r in rows]
        ax.plot(xs, ys, label=method.upper(), linewidth=1.5, markersize=5, **style)
    ax.set_xlabel("average degree")
    ax.set_ylabel("near-optimality frequency")
    ax.set_ylim(-0.02, 1.02)
    if title:
        ax.set_title(title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_snapshot_figure(graph, path, split: int | None = None,
                         title: str | None = None) -> None:
    """Degree profile of one design: supply degrees by node (split into
    blocks) and the demand-degree histogram."""
    plt = _pyplot()
    if split is None:
        split = graph.m // 2
    sdeg = graph.supply_degrees()
    ddeg = graph.demand_degrees()
    fig, (left, right) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    xs = np.arange(graph.m)
    left.bar(xs[:split], sdeg[:split], color="#1f77b4", label="first block")
    if split < graph.m:
        left.bar(xs[split:], sdeg[split:], color="#ff7f0e", label="second block")
    left.set_xlabel("supply node")
    left.set_ylabel("degree")
    left.legend(fontsize=8)
    right.hist(ddeg, bins="auto", color="#2ca02c")
    right.set_xlabel("demand-node degree")
    right.set_ylabel("count")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
