"""Figures written next to the CSV outputs (matplotlib, file backends only)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no version stamp, so reruns produce identical files
_META = {"Software": None}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)


def plot_dig(dig, names: dict[int, str], path) -> None:
    """Heat map of the blocking fractions (rows move, columns block)."""
    labels = [names.get(i, str(i)) for i in dig.ids]
    n = len(labels)
    fig, ax = plt.subplots(layout="constrained", figsize=(1.6 + 0.45 * n, 1.2 + 0.45 * n))
    im = ax.imshow(dig.weights, vmin=0.0, vmax=1.0, cmap="viridis")
    ax.set_xticks(range(n), labels, rotation=90, fontsize=8)
    ax.set_yticks(range(n), labels, fontsize=8)
    ax.set_xlabel("blocking part")
    ax.set_ylabel("moving part")
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04, label="blocking fraction")
    _save(fig, path)


def _layout(tree) -> dict[int, tuple[float, float]]:
    pos = {}
    cursor = [0.0]

    def place(nid, depth):
        n = tree.nodes[nid]
        if n.is_leaf:
            pos[nid] = (cursor[0], -depth)
            cursor[0] += 1.0
        else:
            for c in n.children:
                place(c, depth + 1)
            xs = [pos[c][0] for c in n.children]
            pos[nid] = (0.5 * (min(xs) + max(xs)), -depth)

    place(tree.root, 0)
    return pos


def plot_tree(tree, path) -> None:
    """Tree drawing: subassemblies boxed in blue, parts as plain text."""
    pos = _layout(tree)
    width = max(4.0, 0.9 * tree.n_parts)
    height = 1.0 + 0.9 * (1 + max(-y for _, y in pos.values()))
    fig, ax = plt.subplots(figsize=(width, height))
    fig.subplots_adjust(left=0.02, right=0.98, bottom=0.02, top=0.98)
    for nid, n in tree.nodes.items():
        for c in n.children:
            (x0, y0), (x1, y1) = pos[nid], pos[c]
            ax.plot([x0, x1], [y0, y1], color="0.6", lw=1, zorder=1)
    for nid, (x, y) in sorted(pos.items()):
        n = tree.nodes[nid]
        box = None if n.is_leaf else dict(boxstyle="square,pad=0.3", fc="white", ec="tab:blue")
        ax.text(x, y, tree.label(nid), ha="center", va="center", fontsize=7, bbox=box, zorder=2)
    ax.set_axis_off()
    ax.margins(0.08, 0.15)
    _save(fig, path)


def plot_schedule(schedule, path, title: str = "") -> None:
    """Gantt chart of robot assignments per time step."""
    fig, ax = plt.subplots(layout="constrained", figsize=(max(4.0, 0.5 * len(schedule.steps) + 2), 0.6 * schedule.robots + 1.2))
    cmap = plt.get_cmap("tab20")
    for t, step in enumerate(schedule.steps):
        for r, (j, a) in step.items():
            ax.barh(r, 1.0, left=t, color=cmap(j % 20), edgecolor="k", lw=0.5)
            ax.text(t + 0.5, r, str(j), ha="center", va="center", fontsize=7)
    ax.set_yticks(range(schedule.robots), [f"robot {r}" for r in range(schedule.robots)])
    ax.set_xlabel("time step")
    ax.invert_yaxis()
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)


def plot_comparison(rows, path) -> None:
    """Makespan per robot count for each method; ``rows`` are
    ``(method, robots, makespan, speedup)`` with ``None`` for failures."""
    methods = sorted({r[0] for r in rows}, key=[r[0] for r in rows].index)
    robots = sorted({r[1] for r in rows})
    fig, ax = plt.subplots(layout="constrained", figsize=(5, 3.2))
    w = 0.8 / max(1, len(methods))
    for k, m in enumerate(methods):
        vals = [next((r[2] for r in rows if r[0] == m and r[1] == q), None) for q in robots]
        xs = np.arange(len(robots)) + k * w
        ax.bar(xs, [np.nan if v is None else v for v in vals], width=w, label=m)
    ax.set_xticks(np.arange(len(robots)) + 0.4 - w / 2, [str(q) for q in robots])
    ax.set_xlabel("robots")
    ax.set_ylabel("makespan")
    ax.legend(frameon=False, fontsize=8)
    _save(fig, path)
