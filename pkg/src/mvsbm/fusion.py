"""Fusing per-view pairwise estimates into a k-way clustering.

Pipeline: sum the per-view estimate matrices, keep each vertex's top n/k
scoring partners as a binary neighborhood graph, then round neighborhoods to
labels by repeatedly picking a pivot and collecting all rows within Hamming
distance n/k of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from mvsbm.estimators import (
    EstimatorConfig,
    PairwiseEstimate,
    combined_pairwise_estimate,
    degree_product_estimate,
    louvain_pairwise_estimate,
    spectral_pairwise_estimate,
)
from mvsbm.graph_core import (
    Graph,
    InvalidParameterError,
    LabelVector,
    ViewParams,
    resolve_rng,
)
from mvsbm.metrics import community_matrix

_SCORE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class ScoreMatrix:
    """Sum of t pairwise estimates; entries lie in [-t, t]."""

    values: np.ndarray
    t: int

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidParameterError("values must be a square matrix")
        if self.t < 1:
            raise InvalidParameterError("t must be at least 1")
        if not np.isfinite(values).all():
            raise InvalidParameterError("values must be finite")
        if values.size and float(np.abs(values).max()) > self.t + _SCORE_TOL:
            raise InvalidParameterError(f"entries must lie in [-{self.t}, {self.t}]")

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True, eq=False)
class NeighborhoodMatrix:
    """Binary matrix whose row i marks i's selected partners; diagonal is
    all ones and every row has exactly out_degree off-diagonal ones."""

    rows: np.ndarray
    out_degree: int

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.uint8)
        object.__setattr__(self, "rows", rows)
        if rows.ndim != 2 or rows.shape[0] != rows.shape[1]:
            raise InvalidParameterError("rows must form a square matrix")
        if rows.size == 0:
            raise InvalidParameterError("empty neighborhood matrix")
        if not np.isin(rows, (0, 1)).all():
            raise InvalidParameterError("entries must be 0 or 1")
        if (np.diagonal(rows) != 1).any():
            raise InvalidParameterError("diagonal must be all ones")
        n = rows.shape[0]
        if not (0 <= self.out_degree <= n - 1):
            raise InvalidParameterError("out_degree out of range")
        if (rows.sum(axis=1) != self.out_degree + 1).any():
            raise InvalidParameterError(
                f"every row must have exactly {self.out_degree} off-diagonal ones"
            )

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True)
class FusionConfig:
    """Knobs for the rounding diagnostics.

    c_bar is the assumed per-view correlation scale, q the exponent in the
    representative-row radius.
    """

    c_bar: float = 1.0
    q: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.c_bar <= 2.0:
            raise InvalidParameterError("c_bar must lie in (0, 2]")
        if self.q <= 0.0:
            raise InvalidParameterError("q must be positive")


def accumulate_scores(estimates: Sequence[PairwiseEstimate]) -> ScoreMatrix:
    """Entrywise sum of per-view estimates."""
    if len(estimates) == 0:
        raise InvalidParameterError("need at least one estimate")
    n = estimates[0].n
    total = np.zeros((n, n), dtype=np.float64)
    for est in estimates:
        if est.n != n:
            raise InvalidParameterError("estimates disagree on vertex count")
        total += est.values
    return ScoreMatrix(total, len(estimates))


def _row_budget(n: int, k: int) -> int:
    return int(np.floor(n / k + 0.5))


def build_topk_graph(scores: ScoreMatrix, k: int) -> NeighborhoodMatrix:
    """Keep the round(n/k) largest off-diagonal scores per row (ties broken
    toward the smaller column index) and force the diagonal on."""
    n = scores.n
    if not 2 <= k <= n:
        raise InvalidParameterError("need 2 <= k <= n")
    budget = _row_budget(n, k)
    masked = scores.values.copy()
    np.fill_diagonal(masked, -np.inf)
    order = np.argsort(-masked, axis=1, kind="stable")
    rows = np.zeros((n, n), dtype=np.uint8)
    np.put_along_axis(rows, order[:, :budget], 1, axis=1)
    np.fill_diagonal(rows, 1)
    return NeighborhoodMatrix(rows, budget)


def _as_rows(a) -> np.ndarray:
    rows = getattr(a, "rows", a)
    rows = np.asarray(rows, dtype=np.uint8)
    if rows.ndim != 2 or rows.shape[0] != rows.shape[1] or rows.size == 0:
        raise InvalidParameterError("need a square binary matrix")
    return rows


def second_moment_rounding(
    a, k: int, rng, *, pivots: Sequence[int] | None = None
) -> LabelVector:
    """Round a binary neighborhood matrix to k labels.

    Pass p picks an unassigned pivot uniformly and labels p every unassigned
    row within Hamming distance n/k of the pivot's row.  Rows still
    unassigned after k passes get uniform labels.  ``pivots`` overrides the
    random pivot choices (used by the consistency tests); entries must be
    unassigned at their turn.
    """
    rows = _as_rows(a)
    n = rows.shape[0]
    if not 2 <= k <= n:
        raise InvalidParameterError("need 2 <= k <= n")
    gen = resolve_rng(rng)
    radius = n / k
    labels = np.zeros(n, dtype=np.int64)
    for p in range(1, k + 1):
        unassigned = np.flatnonzero(labels == 0)
        if pivots is not None and p - 1 < len(pivots):
            pivot = int(pivots[p - 1])
            if labels[pivot] != 0:
                raise InvalidParameterError(
                    f"supplied pivot {pivot} already assigned at pass {p}"
                )
        elif unassigned.size == 0:
            break
        else:
            pivot = int(unassigned[gen.integers(unassigned.size)])
        dist = np.count_nonzero(rows[unassigned] != rows[pivot], axis=1)
        labels[unassigned[dist <= radius]] = p
    unassigned = np.flatnonzero(labels == 0)
    if unassigned.size:
        labels[unassigned] = gen.integers(1, k + 1, size=unassigned.size)
    return LabelVector(labels, k)


def _single_view_estimate(
    graph: Graph,
    params: ViewParams,
    cfg: EstimatorConfig,
    gen: np.random.Generator,
) -> PairwiseEstimate:
    if cfg.method == "combined":
        return combined_pairwise_estimate(graph, params, cfg, gen)
    if cfg.method == "degree_product":
        return degree_product_estimate(graph, params, cfg)
    if cfg.method == "spectral":
        return spectral_pairwise_estimate(graph, params, cfg)
    if cfg.method == "louvain":
        return louvain_pairwise_estimate(graph, gen)
    raise InvalidParameterError(f"unknown estimator method {cfg.method!r}")


def late_fusion_cluster(
    graphs: Sequence[Graph],
    view_params: ViewParams | Sequence[ViewParams],
    k: int,
    cfg: EstimatorConfig | None = None,
    rng=None,
) -> LabelVector:
    """Estimate pairwise correlations per view, sum, threshold, round.

    view_params may be a single ViewParams shared by all views or one per
    graph.
    """
    cfg = cfg or EstimatorConfig()
    if len(graphs) == 0:
        raise InvalidParameterError("need at least one view")
    if isinstance(view_params, ViewParams):
        params_list = [view_params] * len(graphs)
    else:
        params_list = list(view_params)
        if len(params_list) != len(graphs):
            raise InvalidParameterError("one ViewParams per graph required")
    n = graphs[0].n
    if any(g.n != n for g in graphs):
        raise InvalidParameterError("graphs disagree on vertex count")
    gen = resolve_rng(rng)
    view_gens = gen.spawn(len(graphs))
    estimates = [
        _single_view_estimate(g, p, cfg, vg)
        for g, p, vg in zip(graphs, params_list, view_gens)
    ]
    scores = accumulate_scores(estimates)
    neighborhoods = build_topk_graph(scores, k)
    return second_moment_rounding(neighborhoods, k, gen)


def representative_rows(
    a, z: LabelVector, q: float, c_bar: float, t: int
) -> np.ndarray:
    """Indices whose neighborhood row sits within the concentration radius
    n * exp(-q * c_bar^2 * t) of the true co-membership row of z."""
    rows = _as_rows(a)
    n = len(z)
    if rows.shape[0] != n:
        raise InvalidParameterError("matrix size must match label count")
    if q <= 0.0 or not 0.0 < c_bar <= 2.0 or t < 1:
        raise InvalidParameterError("need q > 0, c_bar in (0, 2], t >= 1")
    target = community_matrix(z)
    sq_dist = np.count_nonzero(rows != target, axis=1)
    radius = n * np.exp(-q * c_bar * c_bar * t)
    return np.flatnonzero(sq_dist <= radius)
