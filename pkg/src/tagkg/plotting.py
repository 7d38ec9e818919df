"""SVG bar chart of per-group metric improvements."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "tagkg"

import matplotlib.pyplot as plt

from .metrics import GroupDelta


def _bucket_label(lo: float, hi: float) -> str:
    if math.isinf(hi):
        return f"({lo:g}, inf)"
    if lo == 0:
        return f"[0, {hi:g}]"
    return f"({lo:g}, {hi:g}]"


def plot_group_delta(delta: GroupDelta, out_path: str | Path, metric_name: str = "mAP") -> None:
    labels = [_bucket_label(b.lo, b.hi) for b in delta.buckets]
    values = [b.delta if b.delta is not None else 0.0 for b in delta.buckets]
    present = [b.delta is not None for b in delta.buckets]

    fig, ax = plt.subplots(figsize=(6, 4))
    colors = ["#4c72b0" if p else "#cccccc" for p in present]
    ax.bar(range(len(labels)), values, color=colors)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=30, ha="right")
    ax.set_xlabel("training samples per class")
    ax.set_ylabel(f"absolute {metric_name} improvement")
    ax.axhline(0.0, color="black", linewidth=0.8)
    for i, (value, p) in enumerate(zip(values, present)):
        if not p:
            ax.text(i, 0, "absent", ha="center", va="bottom", fontsize=8, color="#888888")
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
