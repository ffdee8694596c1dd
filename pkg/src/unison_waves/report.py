"""Figures for stabilization sweeps, written as PNG files next to the CSV."""

from __future__ import annotations

from collections import defaultdict
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _by_family(rows: Sequence[dict], key: str) -> dict[str, dict[int, list[float]]]:
    out: dict[str, dict[int, list[float]]] = defaultdict(lambda: defaultdict(list))
    for row in rows:
        if row[key] is not None:
            out[row["family"]][row["n"]].append(row[key])
    return out


def rounds_figure(rows: Sequence[dict], path: Path) -> Path:
    """Worst and mean rounds-to-WU against ``n``, one line per family, with the ``10n`` guide."""
    fig, ax = plt.subplots(figsize=(6, 4))
    sizes = set()
    for fam, per_n in sorted(_by_family(rows, "rounds_to_WU").items()):
        ns = sorted(per_n)
        sizes.update(ns)
        worst = [max(per_n[n]) for n in ns]
        mean = [sum(per_n[n]) / len(per_n[n]) for n in ns]
        (line,) = ax.plot(ns, worst, marker="o", label=f"{fam} (max)")
        ax.plot(ns, mean, linestyle="--", color=line.get_color(), alpha=0.6)
    if sizes:
        ns = sorted(sizes)
        ax.plot(ns, [10 * n for n in ns], color="grey", linewidth=0.8, label="10n")
    ax.set_xlabel("processes n")
    ax.set_ylabel("rounds to WU")
    ax.set_title("Stabilization time (dashed: mean)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def normalized_histogram(rows: Sequence[dict], path: Path) -> Path:
    """Distribution of rounds-to-WU divided by ``n``, split by daemon."""
    per_daemon: dict[str, list[float]] = defaultdict(list)
    for row in rows:
        if row["rounds_to_WU"] is not None:
            per_daemon[row["daemon"]].append(row["rounds_to_WU"] / row["n"])
    fig, ax = plt.subplots(figsize=(6, 4))
    if per_daemon:
        names = sorted(per_daemon)
        ax.hist([per_daemon[d] for d in names], bins=20, label=names, stacked=True)
        ax.legend(fontsize=7)
    ax.set_xlabel("rounds to WU / n")
    ax.set_ylabel("runs")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render(rows: Sequence[dict], csv_path: str | Path) -> list[Path]:
    csv_path = Path(csv_path)
    stem = csv_path.with_suffix("")
    return [
        rounds_figure(rows, Path(f"{stem}_rounds.png")),
        normalized_histogram(rows, Path(f"{stem}_rounds_per_n.png")),
    ]
