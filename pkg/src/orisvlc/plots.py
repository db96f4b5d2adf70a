"""Matplotlib renderings of the CSV/JSON outputs. Files only, no display."""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .montecarlo import AggregateReport  # noqa: E402

_STYLE = {"no-mirror": ("k", "o"), "benchmark": ("tab:gray", "s"),
          "mm": ("tab:blue", "^"), "mp": ("tab:red", "v")}


def _label(mode: str, approach: str) -> str:
    return approach if mode == "none" else f"{approach} ({mode})"


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def sweep_figure(report: AggregateReport, field: str, ylabel: str, path: Path,
                 log: bool = False) -> Path:
    plan = report.plan
    n = len(plan.psi_deg)
    fig, axes = plt.subplots(1, n, figsize=(4.2 * n, 3.6), squeeze=False, sharey=True)
    for ax, psi in zip(axes[0], plan.psi_deg):
        for mode, approach in plan.cases():
            color, marker = _STYLE[approach]
            ls = "-" if mode in ("oris", "none") else "--"
            y = report.curve(mode, approach, psi, field)
            ax.plot(plan.gamma_db, y, ls, color=color, marker=marker, ms=3,
                    label=_label(mode, approach))
        ax.set_title(f"FoV {psi:g} deg")
        ax.set_xlabel("SNR threshold (dB)")
        if log:
            ax.set_yscale("log")
        ax.grid(alpha=0.3)
    axes[0][0].set_ylabel(ylabel)
    axes[0][-1].legend(fontsize=7)
    return _save(fig, path)


def heatmap_figure(grid: np.ndarray, title: str, path: Path) -> Path:
    """``grid`` rows run from the top of the wall down."""
    fig, ax = plt.subplots(figsize=(6, 3.4))
    im = ax.imshow(grid, cmap="viridis", aspect="auto", origin="upper")
    ax.set_xlabel("element along wall")
    ax.set_ylabel("element row (top first)")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label="placements")
    return _save(fig, path)


def coverage_figure(rows: List[Dict], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    psis = sorted({r["psi_deg"] for r in rows})
    cmap = plt.get_cmap("viridis", max(len(psis), 2))
    for i, psi in enumerate(psis):
        for mode, ls in (("mirror", "-"), ("oris", ":")):
            sel = [r for r in rows if r["psi_deg"] == psi and r["mode"] == mode]
            x = [r["x_led"] for r in sel]
            ax.plot(x, [r["raytrace_m"] for r in sel], ls, color=cmap(i),
                    label=f"{mode} {psi:g} deg")
            ax.plot(x, [r["theory_m"] for r in sel], "k--", lw=0.6)
    ax.set_xlabel("LED distance from wall (m)")
    ax.set_ylabel("max user distance (m)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=6, ncol=2)
    return _save(fig, path)


def render_report(report: AggregateReport, heatmaps: Dict[str, np.ndarray],
                  out_dir: Path) -> List[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = [
        sweep_figure(report, "p_out", "outage probability", out_dir / "outage.png"),
        sweep_figure(report, "mean_power", "mean total optical power (W)", out_dir / "power.png"),
        sweep_figure(report, "mean_eta", "mean energy efficiency (bit/J)", out_dir / "efficiency.png"),
        sweep_figure(report, "mean_mirrors", "mean reflector count", out_dir / "reflectors.png"),
    ]
    for name, grid in sorted(heatmaps.items()):
        paths.append(heatmap_figure(grid, name, out_dir / f"{name}.png"))
    return paths
