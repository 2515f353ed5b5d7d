"""Figures for batch runs, rendered off-screen."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def _scatter(records, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 4))
    lhs = [r["lhs"] for r in records]
    rhs = [r["rhs"] for r in records]
    ax.scatter(rhs, lhs, s=8, alpha=0.4)
    top = max(lhs + rhs + [1])
    ax.plot([0, top], [0, top], color="k", lw=0.8, ls="--", label="lhs = rhs")
    ax.set_xlabel(r"$\bar\chi(U)\,\bar\chi(V)$")
    ax.set_ylabel(r"$\sum_t \bar\chi(U \cap V^t)$")
    ax.legend(loc="upper left", frameon=False)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _ratios(records, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ratios = [r["lhs"] / r["rhs"] for r in records if r["rhs"] > 0]
    ax.hist(ratios, bins=20, range=(0, 1))
    ax.set_xlabel("lhs / rhs")
    ax.set_ylabel("instances")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _timing(records, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(4.5, 3))
    ax.hist([r.get("time_ms", 0.0) for r in records], bins=40)
    ax.set_xlabel("time per instance (ms)")
    ax.set_ylabel("instances")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def render_batch_figures(records: list[dict], outdir: str | Path) -> list[str]:
    """Write lhs-vs-rhs, ratio and timing plots as PNG; return their paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, draw in (("lhs_vs_rhs.png", _scatter), ("ratio_hist.png", _ratios), ("timing_hist.png", _timing)):
        path = outdir / name
        draw(records, path)
        paths.append(str(path))
    return paths
