"""Charts for mvsbm sweep results."""

from mvsbm_plots.figures import (
    FigureSpec,
    SchemaError,
    SweepSeries,
    build_sweep_figure,
    read_sweep_csv,
    render_sweep_figure,
)

__all__ = [
    "FigureSpec",
    "SchemaError",
    "SweepSeries",
    "build_sweep_figure",
    "read_sweep_csv",
    "render_sweep_figure",
]
