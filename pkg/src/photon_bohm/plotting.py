"""Deterministic SVG rendering of a trajectory ensemble."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

MAX_DRAWN = 200


def _subset(trajectories):
    if len(trajectories) <= MAX_DRAWN:
        return trajectories
    idx = np.linspace(0, len(trajectories) - 1, MAX_DRAWN).round().astype(int)
    return [trajectories[i] for i in idx]


def render_svg(path, scenario, trajectories, grid, rho, unit: str = "m"):
    """Trajectories beside the reference density; same input, same bytes."""
    plt.rcParams["svg.hashsalt"] = "photon-bohm"
    plt.rcParams["svg.fonttype"] = "none"
    fig, (ax, side) = plt.subplots(1, 2, figsize=(9, 5), gridspec_kw={"width_ratios": [4, 1]})
    drawn = _subset(trajectories)
    if scenario.name == "slab":
        for tr in drawn:
            ax.plot(tr.points[:, 0], tr.t, lw=0.5, color="k")
        ax.axvline(scenario.cfg.slab_start, color="tab:blue", lw=0.8)
        if np.isfinite(scenario.cfg.slab_end):
            ax.axvline(scenario.cfg.slab_end, color="tab:blue", lw=0.8)
        ax.set_xlabel(f"x [{unit}]")
        ax.set_ylabel(f"ct [{unit}]")
        side.plot(grid, rho, color="tab:red", lw=0.8)
        side.set_xlabel(f"x [{unit}]")
        side.set_title("density at t_end", fontsize=8)
    else:
        for tr in drawn:
            ax.plot(tr.points[:, 0], tr.points[:, 1], lw=0.4, color="k")
            if scenario.name == "two-photon":
                ax.plot(tr.points[:, 0], tr.points[:, 2], lw=0.4, color="tab:gray")
        ax.set_xlabel(f"x [{unit}]")
        ax.set_ylabel(f"y [{unit}]")
        side.plot(rho, grid, color="tab:red", lw=0.8)
        side.set_ylim(grid[0], grid[-1])
        side.set_xlabel("density")
        side.set_title("detection line", fontsize=8)
    ax.set_title(f"{scenario.name}: {len(drawn)} of {len(trajectories)} trajectories", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
