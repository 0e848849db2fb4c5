"""Report rendering: figures and delimited output for one model.

``write_report`` runs the classification and a tail simulation, then writes
into the output directory: ``report.json`` (classification + fit),
``survival.csv`` (the curve), and PNG figures of the fitted survival curve,
the whitened-wedge geometry, and the boundary-block stationary weights.
The library operations themselves never render; all plotting lives here.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .classify import ClassificationReport, classify
from .model import WalkSpec
from .simulate import SimConfig, TailEstimate, survival_curve

__all__ = ["write_report", "plot_survival", "plot_wedge", "plot_stationary"]


def plot_survival(estimate: TailEstimate, chi: float, path: Path) -> None:
    """Log-log survival curve with the fitted and predicted slopes."""
    ns = np.array([n for n, _ in estimate.grid], dtype=float)
    surv = np.array([s for _, s in estimate.grid])
    keep = surv > 0
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    ax.loglog(ns[keep], surv[keep], ".", color="tab:blue", label="empirical survival")
    n_min, n_max = estimate.fit_window
    wmask = keep & (ns >= n_min) & (ns <= n_max)
    if wmask.any():
        wx = ns[wmask]
        anchor = surv[wmask][0]
        fit = anchor * (wx / wx[0]) ** estimate.fitted_slope
        ax.loglog(wx, fit, "-", color="tab:red",
                  label=f"fit slope {estimate.fitted_slope:.4f}")
        if chi > 0:
            pred = anchor * (wx / wx[0]) ** (-chi / 2)
            ax.loglog(wx, pred, "--", color="tab:gray",
                      label=f"predicted slope {-chi / 2:.4f}")
    ax.axvspan(n_min, n_max, color="tab:orange", alpha=0.08, label="fit window")
    ax.set_xlabel("n (steps)")
    ax.set_ylabel("P(passage time > n)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_wedge(report: ClassificationReport, path: Path) -> None:
    """Whitened image of the quadrant with the transformed drift directions."""
    T = report.transform
    e1 = np.array([T.a11, T.a21])
    e2 = np.array([T.a12, T.a22])
    e1 = e1 / np.hypot(*e1)
    e2 = e2 / np.hypot(*e2)
    v1 = np.array([T.a11 * report.mu_bar1.x + T.a12 * report.mu_bar1.y,
                   T.a21 * report.mu_bar1.x + T.a22 * report.mu_bar1.y])
    v2 = np.array([T.a11 * report.mu_bar2.x + T.a12 * report.mu_bar2.y,
                   T.a21 * report.mu_bar2.x + T.a22 * report.mu_bar2.y])
    v1 = v1 / np.hypot(*v1)
    v2 = v2 / np.hypot(*v2)
    n1 = np.array([0.0, 1.0])
    n2 = np.array([math.sin(report.phi0), -math.cos(report.phi0)])

    fig, ax = plt.subplots(figsize=(5.4, 5.4))
    for vec, style, label in (
        (e1, "k-", "edge 1"),
        (e2, "k-", "edge 2"),
    ):
        ax.plot([0, 1.4 * vec[0]], [0, 1.4 * vec[1]], style, lw=2)
        ax.annotate(label, 1.45 * vec)
    for base, vec, color, label in (
        (0.9 * e1, n1, "tab:gray", "normal 1"),
        (0.9 * e2, n2, "tab:gray", "normal 2"),
        (0.9 * e1, v1, "tab:blue", "drift 1"),
        (0.9 * e2, v2, "tab:red", "drift 2"),
    ):
        ax.annotate(
            "", xy=base + 0.45 * vec, xytext=base,
            arrowprops=dict(arrowstyle="->", color=color),
        )
        ax.annotate(label, base + 0.5 * vec, color=color, fontsize=8)
    ax.set_title(
        f"wedge angle {report.phi0:.4f}, tilt angles ({report.phi1:.4f}, {report.phi2:.4f}), "
        f"chi = {report.chi:.4f} ({report.verdict})"
    )
    ax.set_aspect("equal")
    ax.set_xlim(-0.4, 1.8)
    ax.set_ylim(-0.4, 1.8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_stationary(report: ClassificationReport, path: Path) -> None:
    """Bar chart of the boundary-block stationary weights for both sides."""
    R = len(report.pi1.weights)
    idx = np.arange(R)
    width = 0.38
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    ax.bar(idx - width / 2, report.pi1.weights, width,
           label=f"side 1 ({report.pi1.method})", color="tab:blue")
    ax.bar(idx + width / 2, report.pi2.weights, width,
           label=f"side 2 ({report.pi2.method})", color="tab:red")
    ax.set_xticks(idx)
    ax.set_xlabel("boundary block state")
    ax.set_ylabel("stationary weight")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(
    spec: WalkSpec,
    out_dir: Path,
    start: tuple[int, int] | None = None,
    radius: float | None = None,
    trials: int = 20000,
    horizon: int = 10**5,
    seed: int = 0,
    threads: int = 1,
) -> dict:
    """Classify, simulate, and render everything into ``out_dir``."""
    out_dir.mkdir(parents=True, exist_ok=True)
    report = classify(spec, seed=seed)
    if radius is None:
        radius = math.ceil(spec.R * math.sqrt(2.0)) + 4.0
    if start is None:
        d = max(int(radius) + 2, round(5 * radius / math.sqrt(2.0)))
        start = (d, d)
    cfg = SimConfig(start=start, radius=radius, horizon=horizon,
                    trials=trials, master_seed=seed)
    estimate = survival_curve(spec, cfg, threads=threads)

    (out_dir / "survival.csv").write_text(estimate.to_csv())
    plot_survival(estimate, report.chi, out_dir / "survival.png")
    plot_wedge(report, out_dir / "wedge.png")
    plot_stationary(report, out_dir / "stationary.png")

    payload = {
        "classification": report.to_dict(),
        "tail": estimate.to_dict(),
        "config": {
            "start": list(start),
            "radius": radius,
            "trials": trials,
            "horizon": horizon,
            "seed": seed,
        },
    }
    (out_dir / "report.json").write_text(json.dumps(payload, indent=1) + "\n")
    files = ["report.json", "survival.csv", "survival.png", "wedge.png", "stationary.png"]
    return {"out_dir": str(out_dir), "files": files, "verdict": report.verdict,
            "chi": report.chi, "fitted_slope": estimate.fitted_slope}
