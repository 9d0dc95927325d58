"""Figure rendering from benchmark CSV files.

Plots are produced offline from the delimited output (no live plotting):
sweep CSVs become memory-strength heatmaps, bench CSVs become logical error
rate vs mean-iterations curves.  Files render through the Agg backend, so
no display is required.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .bench import read_csv


def plot_sweep_heatmap(csv_path, out_path, title: str | None = None) -> None:
    """Heatmap of logical error rate over the (center, width) grid.

    Cells whose interval includes negative memory strengths sit above the
    dashed guide line width = 2 * center.
    """
    rows = read_csv(csv_path)
    if not rows:
        raise ValueError(f"no data rows in {csv_path}")
    centers = sorted({float(r["gamma_center"]) for r in rows})
    widths = sorted({float(r["gamma_width"]) for r in rows})
    grid = np.full((len(widths), len(centers)), np.nan)
    for r in rows:
        ci = centers.index(float(r["gamma_center"]))
        wi = widths.index(float(r["gamma_width"]))
        grid[wi, ci] = float(r["ler"])
    fig, ax = plt.subplots(figsize=(6, 5))
    masked = np.ma.masked_invalid(grid)
    floor = max(np.nanmin(grid[grid > 0]) if (grid > 0).any() else 1e-6, 1e-12)
    mesh = ax.pcolormesh(
        centers,
        widths,
        masked,
        shading="nearest",
        norm=matplotlib.colors.LogNorm(vmin=floor, vmax=max(np.nanmax(grid), 2 * floor)),
        cmap="viridis",
    )
    fig.colorbar(mesh, ax=ax, label="logical error rate")
    c = np.linspace(min(centers), max(centers), 50)
    ax.plot(c, 2 * c, "k--", linewidth=1, label="interval reaches 0")
    ax.set_ylim(min(widths), max(widths))
    ax.set_xlabel(r"$\gamma$ center")
    ax.set_ylabel(r"$\gamma$ width")
    ax.legend(loc="upper left", fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


def plot_bench_curves(csv_path, out_path, title: str | None = None) -> None:
    """LER vs mean BP iterations, one curve per (problem, S) series."""
    rows = read_csv(csv_path)
    if not rows:
        raise ValueError(f"no data rows in {csv_path}")
    series: dict[tuple, list[dict]] = {}
    for r in rows:
        key = (r["problem"], r["S"], r.get("mode", ""))
        series.setdefault(key, []).append(r)
    fig, ax = plt.subplots(figsize=(6, 4.5))
    for (problem, s, mode), pts in series.items():
        pts = sorted(pts, key=lambda r: float(r["mean_iterations"]))
        x = np.array([float(p["mean_iterations"]) for p in pts])
        y = np.array([float(p["ler"]) for p in pts])
        ylo = y - np.array([float(p["ci_low"]) for p in pts])
        yhi = np.array([float(p["ci_high"]) for p in pts]) - y
        label = f"{problem} S={s}" + (f" {mode}" if mode else "")
        ax.errorbar(x, y, yerr=[np.maximum(ylo, 0), np.maximum(yhi, 0)], marker="o", capsize=2, label=label)
    ax.set_xlabel("mean BP iterations")
    ax.set_ylabel("logical error rate")
    ax.set_yscale("log")
    if any(float(r["ler"]) > 0 for r in rows):
        ax.set_xscale("log")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)
