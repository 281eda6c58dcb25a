"""Figure rendering for the CLI report paths.

Whenever a report is written to disk the same data is rendered as a PNG
next to it (suppress with --no-plot).  Figures are diagnostics, not data:
the CSV/JSON stays the format of record.
"""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["figure_path", "save_verify_figure", "save_sweep_figure",
           "save_convergence_figure"]


def figure_path(out_path: str | Path) -> Path:
    return Path(out_path).with_suffix(".png")


def _finish(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_verify_figure(rows: list[dict], tolerance: float, path: Path) -> Path:
    """Bar chart of per-identity absolute errors against the tolerance."""
    labels = [f"{r['id']}@z={r['z']}" for r in rows]
    errs = [max(r["abs_err"], 1e-18) for r in rows]
    fig, ax = plt.subplots(figsize=(max(6.0, 0.55 * len(rows)), 4.0))
    colors = ["tab:blue" if r.get("passed", True) else "tab:red" for r in rows]
    ax.bar(range(len(rows)), errs, color=colors)
    ax.axhline(tolerance, color="k", linestyle="--", linewidth=1,
               label=f"tolerance {tolerance:g}")
    ax.set_yscale("log")
    ax.set_ylabel("absolute error")
    ax.set_xticks(range(len(rows)))
    ax.set_xticklabels(labels, rotation=60, ha="right", fontsize=7)
    ax.legend(loc="upper right", fontsize=8)
    return _finish(fig, Path(path))


def save_sweep_figure(xs: list[float], errs: list[float], xlabel: str,
                      path: Path) -> Path:
    """Error versus swept parameter, log-log where the data allows it."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(xs, [max(e, 1e-18) for e in errs], "o-")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("error")
    if all(x > 0 for x in xs) and max(xs) / max(min(xs), 1e-300) > 10:
        ax.set_xscale("log")
    ax.set_yscale("log")
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, Path(path))


def save_convergence_figure(groups: list[int], values: list[float],
                            reference: float | None, path: Path) -> Path:
    """Value-vs-groups table as a convergence picture."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    if reference is not None:
        errs = [max(abs(v - reference), 1e-18) for v in values]
        ax.loglog(groups, errs, "o-")
        ax.set_ylabel("|value - reference|")
    else:
        ax.semilogx(groups, values, "o-")
        ax.set_ylabel("value")
    ax.set_xlabel("groups")
    ax.grid(True, which="both", alpha=0.3)
    return _finish(fig, Path(path))
