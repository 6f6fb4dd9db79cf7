"""Figure rendering for the report path.

Renders the risk-island map (node color = additional defaults, node size =
stress, edge color = liability amount) and the strategy relief bars to SVG
files next to the delimited outputs.  Output is byte-reproducible: fixed
hash salt, no embedded creation date.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
from matplotlib.collections import LineCollection
from matplotlib import colormaps

from .intervention import Assessment, RELIEF_FIELDS
from .layout import Layout

plt.rcParams["svg.hashsalt"] = "interbank"

_SVG_KW = {"format": "svg", "metadata": {"Date": None}}


def render_island_map(
    layout: Layout, path: str, node_colors: list[float] | None = None, title: str = ""
) -> None:
    """Risk-island SVG: bundled edges under stress-sized nodes.

    ``node_colors`` carries the additional-defaults channel; without it the
    island threat level stands in.
    """
    fig, ax = plt.subplots(figsize=(8.0, 8.0))
    segments = []
    amounts = []
    for edge in layout.edges:
        pts = edge["points"]
        segments.extend([(pts[k], pts[k + 1]) for k in range(len(pts) - 1)])
        amounts.extend([edge["amount"]] * (len(pts) - 1))
    if segments:
        peak = max(amounts) or 1.0
        colors = colormaps["Blues"]([0.25 + 0.75 * a / peak for a in amounts])
        ax.add_collection(LineCollection(segments, colors=colors, linewidths=0.6, zorder=1))
    if node_colors is None:
        node_colors = [0.0] * layout.n
        for profile in layout.island_profiles:
            for bank_id in profile["member_ids"]:
                node_colors[layout.ids.index(bank_id)] = profile["threat"]
    x = layout.positions[:, 0]
    y = layout.positions[:, 1]
    ax.scatter(
        x,
        y,
        s=(layout.radii**2) * 3.0,
        c=node_colors,
        cmap="YlOrRd",
        edgecolors="#404040",
        linewidths=0.4,
        zorder=2,
    )
    for profile in layout.island_profiles:
        members = [layout.ids.index(b) for b in profile["member_ids"]]
        ax.annotate(
            profile["kind"],
            (float(x[members].mean()), float(y[members].mean())),
            fontsize=9,
            fontweight="bold",
            color="#303030",
            ha="center",
        )
    ax.set_aspect("equal")
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)


def render_relief_bars(assessments: list[Assessment], path: str) -> None:
    """Grouped bars: relief percentage per indicator for each strategy."""
    fig, ax = plt.subplots(figsize=(9.0, 4.5))
    n_ind = len(RELIEF_FIELDS)
    width = 0.8 / max(len(assessments), 1)
    cmap = colormaps["tab10"]
    for k, a in enumerate(assessments):
        xs = [i + k * width for i in range(n_ind)]
        ys = [a.relief[name] for name in RELIEF_FIELDS]
        label = f"{a.label} (cost {a.rescue_cost:.1f})"
        ax.bar(xs, ys, width=width, color=cmap(k % 10), label=label)
    ax.set_xticks([i + 0.4 for i in range(n_ind)])
    ax.set_xticklabels([name.replace("_", " ") for name in RELIEF_FIELDS], rotation=20)
    ax.axhline(0.0, color="#808080", linewidth=0.8)
    ax.set_ylabel("relief %")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)


def render_kl_trace(layout: Layout, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6.0, 3.0))
    ax.plot(layout.kl_trace, color="#2E86AB", linewidth=1.0)
    ax.set_xlabel("iteration")
    ax.set_ylabel("KL divergence")
    fig.tight_layout()
    fig.savefig(path, **_SVG_KW)
    plt.close(fig)
