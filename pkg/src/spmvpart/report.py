"""Render metric figures from a sweep CSV produced by the run command."""
from __future__ import annotations

import csv
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

__all__ = ["render_report", "METRICS"]

METRICS = ["lb_nodes", "lb_cores", "t_total", "t_gather_plus_construct"]


def _slug(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "-", name) or "matrix"


def render_report(csv_path, out_dir=None) -> list[Path]:
    """Plot each metric against the node count, one figure per metric.

    Rows are grouped by (matrix, cores_per_node); the four combinations
    become separate curves. Figures are written as PNG files next to the
    CSV (or into out_dir) and the written paths are returned.
    """
    csv_path = Path(csv_path)
    out_dir = Path(out_dir) if out_dir is not None else csv_path.parent
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return []

    groups: dict[tuple[str, str], list[dict]] = {}
    for r in rows:
        groups.setdefault((r["matrix"], r["cores_per_node"]), []).append(r)

    paths: list[Path] = []
    for (matrix, fc), grp in sorted(groups.items()):
        combos = sorted({r["combination"] for r in grp})
        for metric in METRICS:
            fig, ax = plt.subplots(figsize=(5.0, 3.5))
            for combo in combos:
                pts = sorted(
                    (int(r["nodes"]), float(r[metric]))
                    for r in grp
                    if r["combination"] == combo
                )
                ax.plot(
                    [p[0] for p in pts],
                    [p[1] for p in pts],
                    marker="o",
                    linewidth=1.2,
                    label=combo,
                )
            ax.set_xlabel("nodes")
            ax.set_ylabel(metric)
            ax.set_title(f"{matrix} ({fc} cores/node)", fontsize=10)
            ax.grid(True, alpha=0.3)
            ax.legend(fontsize=8)
            fig.tight_layout()
            path = out_dir / f"{_slug(matrix)}_fc{fc}_{metric}.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            paths.append(path)
    return paths
