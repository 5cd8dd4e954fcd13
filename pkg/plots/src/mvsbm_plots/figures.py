"""Render agreement-vs-parameter figures from sweep CSV files.

Consumes the CSV written by `mvsbm sweep` (one row per swept value and
method) and draws one error-bar line per method.  Runs headless; the
output is a function of the CSV alone.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SWEEP_COLUMNS = (
    "param",
    "value",
    "method",
    "mean_agreement",
    "std_agreement",
    "trials",
    "seed",
    "elapsed_ms",
)

# display names for the standard fusion methods; anything else is shown raw
_SERIES_LABELS = {
    "late": "late fusion (Alg. 1)",
    "early-louvain": "early fusion (union)",
    "early-spectral": "early fusion (union, spectral)",
}


class SchemaError(ValueError):
    """The CSV does not match the sweep schema."""


@dataclass(frozen=True)
class SweepSeries:
    """One method's curve: swept values with mean and spread per value."""

    method: str
    values: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    @property
    def label(self) -> str:
        return _SERIES_LABELS.get(self.method, self.method)


@dataclass(frozen=True)
class FigureSpec:
    """What to read, how to label it, and where to write the image."""

    input: Path
    output: Path
    xlabel: str | None = None
    title: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "input", Path(self.input))
        object.__setattr__(self, "output", Path(self.output))
        if not self.input.is_file():
            raise SchemaError(f"input CSV not found: {self.input}")


def _float_cell(row: dict, column: str, line: int) -> float:
    try:
        return float(row[column])
    except ValueError:
        raise SchemaError(
            f"column {column!r} has non-numeric value {row[column]!r} on line {line}"
        ) from None


def read_sweep_csv(path) -> tuple[str, list[SweepSeries]]:
    """Parse a sweep CSV into per-method series.

    Returns the swept parameter name and one series per method, each sorted
    by swept value.  The header must contain exactly the sweep columns;
    mismatches raise SchemaError naming the offending column.
    """
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        for column in SWEEP_COLUMNS:
            if column not in header:
                raise SchemaError(f"missing column {column!r}")
        for column in header:
            if column not in SWEEP_COLUMNS:
                raise SchemaError(f"unexpected column {column!r}")
        rows = list(reader)
    if not rows:
        raise SchemaError("CSV has a header but no rows")
    params = {row["param"] for row in rows}
    if len(params) > 1:
        raise SchemaError(
            "column 'param' mixes swept parameters: " + ", ".join(sorted(params))
        )
    by_method: dict[str, list[tuple[float, float, float]]] = {}
    for line, row in enumerate(rows, start=2):
        if None in row or None in row.values():
            raise SchemaError(f"wrong number of fields on line {line}")
        point = (
            _float_cell(row, "value", line),
            _float_cell(row, "mean_agreement", line),
            _float_cell(row, "std_agreement", line),
        )
        by_method.setdefault(row["method"], []).append(point)
    series = []
    for method in sorted(by_method):
        points = sorted(by_method[method])
        values, means, stds = (np.array(col) for col in zip(*points))
        series.append(SweepSeries(method, values, means, stds))
    return params.pop(), series


def build_sweep_figure(spec: FigureSpec):
    """Draw the figure for a spec and return it (without saving)."""
    param, series = read_sweep_csv(spec.input)
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for s in series:
        ax.errorbar(
            s.values,
            s.means,
            yerr=s.stds,
            marker="o",
            capsize=3,
            linewidth=1.5,
            label=s.label,
        )
    ax.set_ylim(0.0, 1.0)
    ax.set_xlabel(spec.xlabel or param)
    ax.set_ylabel("agreement")
    if spec.title:
        ax.set_title(spec.title)
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.text(
        0.99,
        0.01,
        "error bars: +/-1 sample std over trials",
        ha="right",
        va="bottom",
        fontsize=7,
        color="gray",
    )
    fig.tight_layout()
    return fig


def render_sweep_figure(spec: FigureSpec) -> Path:
    """Render the figure to spec.output and return that path."""
    fig = build_sweep_figure(spec)
    try:
        fig.savefig(spec.output, dpi=150)
    finally:
        plt.close(fig)
    return spec.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mvsbm-plot",
        description="Render an agreement chart from an mvsbm sweep CSV.",
    )
    parser.add_argument("--input", required=True, help="sweep CSV path")
    parser.add_argument("--output", required=True, help="image path (png, pdf, ...)")
    parser.add_argument(
        "--xlabel", default=None, help="x-axis label (default: the swept parameter)"
    )
    parser.add_argument("--title", default="", help="figure title")
    args = parser.parse_args(argv)
    try:
        spec = FigureSpec(
            input=args.input, output=args.output, xlabel=args.xlabel, title=args.title
        )
        path = render_sweep_figure(spec)
    except (SchemaError, OSError) as exc:
        print(f"mvsbm-plot: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
