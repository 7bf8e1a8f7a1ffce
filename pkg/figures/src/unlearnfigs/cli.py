"""figures <figure-id> --rounds PATH --out PATH [--treatments ...] [--mode ...]

Reads the delimited per-round output of the simulation CLI and renders one of
three two-panel diagnostics:

  tracking   tracking error over the full timeline + post-deletion zoom
  curvature  tracking error + condition number of the optimizer state
  spectral   condition number + cosine alignment against the counterfactual

Only documented columns are consumed; nothing is recomputed. Output is a PNG
and an SVG next to each other, byte-stable for identical inputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams.update({
    "figure.figsize": (10.0, 4.0),
    "figure.dpi": 110,
    "savefig.dpi": 150,
    "svg.hashsalt": "unlearnfigs",
    "axes.grid": True,
    "grid.alpha": 0.25,
    "font.size": 9,
})

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

FIGURE_IDS = ("tracking", "curvature", "spectral")

BASE_COLUMNS = ["run_id", "seed", "model", "env", "intervention", "t"]
REQUIRED_COLUMNS = {
    "tracking": BASE_COLUMNS + ["tracking_error"],
    "curvature": BASE_COLUMNS + ["tracking_error", "cond_A"],
    "spectral": BASE_COLUMNS + ["cond_A", "cos_state", "cos_update"],
}

# Canonical treatment ordering for stable legends and colors.
_TREATMENT_ORDER = ["none", "reset(0.3)", "reset(0.5)", "reset(0.7)",
                    "decay(0.5)", "decay(0.7)", "decay(0.9)"]
_PALETTE = ["#444444", "#1b9e77", "#66a61e", "#276419", "#d95f02", "#e7298a", "#7570b3"]


class FigureError(Exception):
    pass


def _treatment_color(label: str) -> str:
    if label in _TREATMENT_ORDER:
        return _PALETTE[_TREATMENT_ORDER.index(label)]
    return _PALETTE[hash_stable(label) % len(_PALETTE)]


def hash_stable(label: str) -> int:
    return sum(ord(c) * (i + 1) for i, c in enumerate(label))


def load_rounds(path: str, figure_id: str) -> pd.DataFrame:
    try:
        df = pd.read_csv(path)
    except FileNotFoundError:
        raise FigureError(f"rounds file not found: {path}")
    except pd.errors.EmptyDataError:
        raise FigureError(f"rounds file is empty: {path}")
    for column in REQUIRED_COLUMNS[figure_id]:
        if column not in df.columns:
            raise FigureError(f"missing required column {column!r} for figure {figure_id!r}")
    return df


def select_runs(df: pd.DataFrame, figure_id: str, treatments: list[str] | None) -> pd.DataFrame:
    # These diagnostics are about the second-order learner; the tracking
    # figure falls back to whatever models are present.
    ons = df[df["model"] == "ons"]
    if figure_id == "tracking":
        frame = ons if not ons.empty else df
    else:
        if ons.empty:
            raise FigureError(f"figure {figure_id!r} needs ONS rows with spectral columns")
        frame = ons
    present = list(dict.fromkeys(frame["intervention"]))
    if treatments:
        missing = [t for t in treatments if t not in present]
        if missing:
            raise FigureError(f"treatment {missing[0]!r} not present in the rounds file")
        frame = frame[frame["intervention"].isin(treatments)]
    if frame.empty:
        raise FigureError("no rows left after filtering")
    return frame


def _ordered_treatments(frame: pd.DataFrame) -> list[str]:
    present = list(dict.fromkeys(frame["intervention"]))
    known = [t for t in _TREATMENT_ORDER if t in present]
    return known + [t for t in present if t not in known]


def _plot_series(ax, frame: pd.DataFrame, column: str, mode: str) -> None:
    for label in _ordered_treatments(frame):
        color = _treatment_color(label)
        group = frame[frame["intervention"] == label]
        if mode == "per-seed":
            first = True
            for _, run in group.groupby("run_id", sort=False):
                run = run.sort_values("t")
                ax.plot(run["t"], run[column], color=color, lw=0.7, alpha=0.45,
                        label=label if first else None)
                first = False
        else:
            wide = group.pivot_table(index="t", columns="run_id", values=column, sort=True)
            mean = wide.mean(axis=1)
            std = wide.std(axis=1, ddof=1).fillna(0.0)
            ax.plot(mean.index, mean, color=color, lw=1.4, label=label)
            ax.fill_between(mean.index, mean - std, mean + std, color=color, alpha=0.18, lw=0)


def render(figure_id: str, rounds_path: str, out_path: str,
           treatments: list[str] | None = None, mode: str = "per-seed",
           tau: int = 200, cosine: str = "state") -> list[Path]:
    if figure_id not in FIGURE_IDS:
        raise FigureError(f"unknown figure id {figure_id!r}; expected one of {FIGURE_IDS}")
    if mode not in ("per-seed", "band"):
        raise FigureError(f"mode must be per-seed or band, got {mode!r}")
    df = load_rounds(rounds_path, figure_id)
    frame = select_runs(df, figure_id, treatments)

    fig, axes = plt.subplots(1, 2)
    if figure_id == "tracking":
        _plot_series(axes[0], frame, "tracking_error", mode)
        axes[0].set_title("tracking error, full timeline")
        zoom = frame[frame["t"] > tau]
        if zoom.empty:
            raise FigureError(f"no rounds after tau={tau} for the zoom panel")
        _plot_series(axes[1], zoom, "tracking_error", mode)
        axes[1].set_title(f"tracking error after deletion (t > {tau})")
        for ax in axes:
            ax.set_ylabel("distance to counterfactual")
    elif figure_id == "curvature":
        _plot_series(axes[0], frame, "tracking_error", mode)
        axes[0].set_title("tracking error")
        axes[0].set_ylabel("distance to counterfactual")
        _plot_series(axes[1], frame, "cond_A", mode)
        axes[1].set_title("condition number of the optimizer state")
        axes[1].set_ylabel("condition number")
    else:
        _plot_series(axes[0], frame, "cond_A", mode)
        axes[0].set_title("condition number of the optimizer state")
        axes[0].set_ylabel("condition number")
        column = "cos_state" if cosine == "state" else "cos_update"
        _plot_series(axes[1], frame, column, mode)
        axes[1].set_title(f"cosine alignment ({cosine}) vs counterfactual")
        axes[1].set_ylabel("cosine")
    for ax in axes:
        ax.set_xlabel("round")
        ax.axvline(tau, color="#aa0000", lw=0.8, ls="--", alpha=0.7)
        ax.legend(loc="best", fontsize=7)
    fig.tight_layout()

    base = Path(out_path)
    if base.suffix.lower() in (".png", ".svg"):
        base = base.with_suffix("")
    base.parent.mkdir(parents=True, exist_ok=True)
    png = base.with_suffix(".png")
    svg = base.with_suffix(".svg")
    fig.savefig(png)
    fig.savefig(svg, metadata={"Date": None})
    plt.close(fig)
    return [png, svg]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="figures",
                                     description="Render experiment diagnostics from rounds.csv")
    parser.add_argument("figure_id", choices=FIGURE_IDS)
    parser.add_argument("--rounds", required=True, help="path to rounds.csv")
    parser.add_argument("--out", required=True, help="output image path (extension ignored)")
    parser.add_argument("--treatments", nargs="*", default=None,
                        help="intervention labels to include (default: all present)")
    parser.add_argument("--mode", choices=["per-seed", "band"], default="per-seed")
    parser.add_argument("--tau", type=int, default=200, help="deletion round for markers and zoom")
    parser.add_argument("--cosine", choices=["state", "update"], default="state",
                        help="which cosine column the spectral figure shows")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        paths = render(args.figure_id, args.rounds, args.out,
                       treatments=args.treatments, mode=args.mode,
                       tau=args.tau, cosine=args.cosine)
    except FigureError as exc:
        print(f"figures error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(f"wrote {p}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
