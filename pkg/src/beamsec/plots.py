"""Matplotlib rendering of report figures (SVG files next to the CSV output).

Plots are a thin view over the report data; the CSV/JSON files remain the
source of truth.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "beamsec"

_SAVE_KW = {"format": "svg", "metadata": {"Date": None}}


def _save(fig, path: Path) -> Path:
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def plot_mse_vs_epsilon(cells, defense: str, path: Path) -> Path | None:
    """One line per attack: mean MSE over the epsilon grid."""
    attacks = sorted({c["attack"] for c in cells
                      if c["defense"] == defense and c["attack"] != "none"})
    if not attacks:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind in attacks:
        pts = sorted((c["epsilon"], c["mean_mse"]) for c in cells
                     if c["attack"] == kind and c["defense"] == defense)
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=kind)
    ax.set_xlabel(r"$\epsilon$")
    ax.set_ylabel("MSE")
    ax.set_title(f"Attack impact ({defense})")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_mse_histograms(cells, out_dir: Path) -> list[Path]:
    """Per attack: overlaid per-sample MSE histograms across epsilons."""
    written = []
    attacks = sorted({c["attack"] for c in cells if c["attack"] != "none"})
    for kind in attacks:
        rows = sorted((c for c in cells
                       if c["attack"] == kind and c["defense"] == "undefended"),
                      key=lambda c: c["epsilon"])
        if not rows:
            continue
        fig, ax = plt.subplots(figsize=(6, 4))
        for c in rows:
            edges = c["hist"]["edges"]
            centers = [(a + b) / 2 for a, b in zip(edges[:-1], edges[1:])]
            ax.step(centers, c["hist"]["counts"], where="mid",
                    label=rf"$\epsilon$={c['epsilon']}")
        ax.set_xlabel("per-sample MSE")
        ax.set_ylabel("count")
        ax.set_title(f"{kind}: MSE distribution")
        ax.legend()
        fig.tight_layout()
        written.append(_save(fig, out_dir / f"hist_{kind.lower()}.svg"))
    return written


def plot_defense_comparison(cells, out_dir: Path) -> list[Path]:
    """Per attack: mean MSE per defense over the epsilon grid."""
    written = []
    defenses = sorted({c["defense"] for c in cells})
    if len(defenses) < 2:
        return written
    attacks = sorted({c["attack"] for c in cells if c["attack"] != "none"})
    for kind in attacks:
        fig, ax = plt.subplots(figsize=(6, 4))
        for defense in defenses:
            pts = sorted((c["epsilon"], c["mean_mse"]) for c in cells
                         if c["attack"] == kind and c["defense"] == defense)
            if pts:
                ax.plot([p[0] for p in pts], [p[1] for p in pts],
                        marker="o", label=defense)
        ax.set_xlabel(r"$\epsilon$")
        ax.set_ylabel("MSE")
        ax.set_title(f"{kind}: mitigation comparison")
        ax.legend()
        fig.tight_layout()
        written.append(_save(fig, out_dir / f"defense_{kind.lower()}.svg"))
    return written


def render_report_figures(report, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    written = []
    p = plot_mse_vs_epsilon(report.cells, "undefended", out_dir / "mse_vs_epsilon.svg")
    if p:
        written.append(p)
    written += plot_mse_histograms(report.cells, out_dir)
    written += plot_defense_comparison(report.cells, out_dir)
    return written
