"""Per-view pairwise sign-correlation estimators.

Each estimator consumes one observed graph and produces an n x n matrix whose
(i, j) entry estimates the correlation of the hidden binary signs at i and j.
The combined estimator routes between a degree-based and a spectral method
depending on a cheap balance probe of the sign split.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol

import numpy as np

from mvsbm._louvain import louvain_communities
from mvsbm.graph_core import (
    BelowThresholdError,
    Graph,
    InsufficientDataError,
    InvalidParameterError,
    ParseError,
    RngHandle,
    SignVector,
    ViewParams,
    resolve_rng,
    sample_label_vector,
    sample_sbm2_conditional,
    sample_sign_mapping,
)

_ESTIMATE_MAGIC = b"MVSB-EST"
_RANGE_TOL = 1e-9
# Fallback seed for louvain_pairwise_estimate when no generator is supplied.
_DEFAULT_LOUVAIN_SEED = 0x1B873593


@dataclass(frozen=True, eq=False)
class PairwiseEstimate:
    """Symmetric matrix of pairwise sign-correlation estimates in [-1, 1].

    ``degenerate`` marks outputs produced from inputs that carry no usable
    signal (e.g. an edgeless graph fed to the spectral method); the values
    are still well-formed but should not be trusted.
    """

    values: np.ndarray
    degenerate: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[0] != values.shape[1]:
            raise InvalidParameterError("values must be a square matrix")
        if not np.isfinite(values).all():
            raise InvalidParameterError("values must be finite")
        if values.size:
            if not np.allclose(values, values.T, atol=_RANGE_TOL, rtol=0.0):
                raise InvalidParameterError("values must be symmetric")
            amax = float(np.abs(values).max())
            if amax > 1.0 + _RANGE_TOL:
                raise InvalidParameterError("values must lie in [-1, 1]")

    @property
    def n(self) -> int:
        return int(self.values.shape[0])


@dataclass(frozen=True)
class EstimatorConfig:
    method: str = "combined"
    mu_prime: float = 0.05
    c_tilde: float = 10.0
    power_iters: int = 200

    _METHODS = ("combined", "degree_product", "spectral", "louvain")

    def __post_init__(self) -> None:
        if self.method not in self._METHODS:
            raise InvalidParameterError(f"unknown estimator method {self.method!r}")
        if not 0.0 < self.mu_prime < 0.5:
            raise InvalidParameterError("mu_prime must lie in (0, 0.5)")
        if self.c_tilde < 1.0:
            raise InvalidParameterError("c_tilde must be at least 1")
        if self.power_iters < 1:
            raise InvalidParameterError("power_iters must be positive")


@dataclass(frozen=True)
class CorrelationEstimate:
    """Monte Carlo estimate of E[X | same sign] - E[X | different sign]."""

    c_hat: float
    stderr: float
    trials: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.c_hat):
            raise InvalidParameterError("c_hat must be finite")
        if not (np.isfinite(self.stderr) and self.stderr >= 0.0):
            raise InvalidParameterError("stderr must be non-negative")
        if self.trials < 1:
            raise InvalidParameterError("trials must be at least 1")


class BalanceDecision(Enum):
    SUFFICIENTLY_BALANCED = "SufficientlyBalanced"
    SUFFICIENTLY_UNBALANCED = "SufficientlyUnbalanced"


class PairwiseEstimator(Protocol):
    """Trial-level estimator contract for estimate_pairwise_correlation."""

    def __call__(
        self,
        graph: Graph,
        signs: SignVector,
        params: ViewParams,
        rng: np.random.Generator,
    ) -> PairwiseEstimate: ...


def _truncation_scale(n: int, params: ViewParams, cfg: EstimatorConfig) -> float:
    return (
        cfg.c_tilde
        * (1.0 - 2.0 / n)
        * (params.d * params.eps + 1.0 / (params.eps * cfg.mu_prime))
    )


def degree_product_estimate(
    graph: Graph, params: ViewParams, cfg: EstimatorConfig | None = None
) -> PairwiseEstimate:
    """Estimate pairwise correlations from truncated, centered degrees.

    For each ordered pair (i, j) the degree of i with the potential edge to j
    removed is centered at its null mean d(1 - 2/n) and scaled by a
    truncation constant C; the (i, j) estimate is the product of the two
    single-vertex statistics.  Useful when the sign split is unbalanced, so
    degrees carry sign information.
    """
    cfg = cfg or EstimatorConfig()
    n = graph.n
    if n < 3:
        raise InvalidParameterError("need at least 3 vertices")
    if params.delta <= 0.0:
        raise BelowThresholdError(
            f"signal strength delta={params.delta:.6g} is not positive"
        )
    scale = _truncation_scale(n, params, cfg)
    deg = graph.degrees.astype(np.float64)
    dense = np.zeros((n, n), dtype=np.float64)
    indptr, indices = graph.adjacency_csr
    dense[np.repeat(np.arange(n), np.diff(indptr)), indices] = 1.0
    centered = (deg[:, None] - dense) - params.d * (1.0 - 2.0 / n)
    xh = np.where(np.abs(centered) <= scale, centered / scale, 0.0)
    return PairwiseEstimate(xh * xh.T)


def _probe_subset_size(n: int) -> int:
    return int(np.ceil(n**0.75))


def _balance_probe_with_subset(
    graph: Graph, params: ViewParams, cfg: EstimatorConfig, rng
) -> tuple[BalanceDecision, np.ndarray]:
    n = graph.n
    if n < 16:
        raise InvalidParameterError("balance probe needs n >= 16")
    gen = resolve_rng(rng)
    m = _probe_subset_size(n)
    subset = np.sort(gen.choice(n, size=m, replace=False))
    in_subset = np.zeros(n, dtype=bool)
    in_subset[subset] = True
    edges = graph.edges
    crossing = int(np.count_nonzero(in_subset[edges[:, 0]] ^ in_subset[edges[:, 1]]))
    threshold = (
        params.d * n**0.75 * (1.0 + 2.0 * params.eps * (3.0 * cfg.mu_prime / 4.0) ** 2)
    )
    if crossing >= threshold:
        return BalanceDecision.SUFFICIENTLY_UNBALANCED, subset
    return BalanceDecision.SUFFICIENTLY_BALANCED, subset


def balance_probe(
    graph: Graph, params: ViewParams, cfg: EstimatorConfig | None = None, rng=None
) -> BalanceDecision:
    """Decide whether the hidden sign split looks balanced.

    Counts edges crossing a random vertex subset of size ceil(n^(3/4)); an
    unbalanced split inflates the expected cut, so a cut at or above the
    threshold reports SufficientlyUnbalanced.
    """
    cfg = cfg or EstimatorConfig()
    decision, _ = _balance_probe_with_subset(graph, params, cfg, rng)
    return decision


def _power_iteration(
    matvec: Callable[[np.ndarray], np.ndarray],
    n: int,
    iters: int,
    start: np.ndarray,
) -> np.ndarray:
    v = start / np.linalg.norm(start)
    rayleigh = 0.0
    for _ in range(iters):
        w = matvec(v)
        w -= w.mean()
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return v
        v_new = w / norm
        r_new = float(v_new @ matvec(v_new))
        v = v_new
        if abs(r_new - rayleigh) < 1e-9:
            break
        rayleigh = r_new
    return v


def spectral_pairwise_estimate(
    graph: Graph, params: ViewParams, cfg: EstimatorConfig | None = None
) -> PairwiseEstimate:
    """Rank-one estimate from the leading eigenvector of the centered
    adjacency matrix (all-ones direction projected out).

    The start vector for the power iteration comes from a fixed internal
    seed, so the output is a deterministic function of the graph; randomize
    it at the call site when exchangeability matters.
    """
    cfg = cfg or EstimatorConfig()
    n = graph.n
    if n < 2:
        raise InvalidParameterError("need at least 2 vertices")
    if graph.num_edges == 0:
        return PairwiseEstimate(np.zeros((n, n)), degenerate=True)
    indptr, indices = graph.adjacency_csr
    src = np.repeat(np.arange(n), np.diff(indptr))
    rate = params.d / n

    def matvec(v: np.ndarray) -> np.ndarray:
        av = np.bincount(src, weights=v[indices], minlength=n)
        return av - rate * (v.sum() - v)

    start = np.random.Generator(np.random.Philox(0xC0FFEE)).standard_normal(n)
    start -= start.mean()
    v = _power_iteration(matvec, n, cfg.power_iters, start)
    values = np.clip(n * np.outer(v, v), -1.0, 1.0)
    values = (values + values.T) / 2.0
    return PairwiseEstimate(values)


def randomized_symmetrization(
    base_estimator: Callable[[Graph], PairwiseEstimate], graph: Graph, rng
) -> PairwiseEstimate:
    """Run an estimator on a uniformly relabeled copy of the graph and map
    the result back, making the composite exchangeable over vertex order."""
    gen = resolve_rng(rng)
    sigma = gen.permutation(graph.n)
    return _symmetrize_with(base_estimator, graph, sigma)


def _symmetrize_with(
    base_estimator: Callable[[Graph], PairwiseEstimate],
    graph: Graph,
    sigma: np.ndarray,
) -> PairwiseEstimate:
    relabeled = Graph(graph.n, sigma[graph.edges]) if graph.num_edges else graph
    base = base_estimator(relabeled)
    if base.n != graph.n:
        raise InvalidParameterError("base estimator changed the vertex count")
    values = base.values[np.ix_(sigma, sigma)]
    return PairwiseEstimate(values, degenerate=base.degenerate)


def combined_pairwise_estimate(
    graph: Graph, params: ViewParams, cfg: EstimatorConfig | None = None, rng=None
) -> PairwiseEstimate:
    """Probe the sign balance on a random subset, then estimate on the rest.

    The probe subset I is excluded from the estimate: the returned matrix is
    exactly zero on rows and columns of I.  An unbalanced verdict routes to
    the degree-product estimator, a balanced one to the randomized-
    symmetrized spectral estimator, both on the induced subgraph over
    [n] \\ I with the degree parameter rescaled to the surviving vertex
    count.
    """
    cfg = cfg or EstimatorConfig()
    if params.delta <= 0.0:
        raise BelowThresholdError(
            f"signal strength delta={params.delta:.6g} is not positive"
        )
    gen = resolve_rng(rng)
    n = graph.n
    decision, subset = _balance_probe_with_subset(graph, params, cfg, gen)
    keep = np.setdiff1d(np.arange(n), subset)
    sub, keep_sorted = graph.induced_subgraph(keep)
    sub_params = ViewParams(d=params.d * sub.n / n, eps=params.eps)
    if decision is BalanceDecision.SUFFICIENTLY_UNBALANCED:
        inner = degree_product_estimate(sub, sub_params, cfg)
    else:
        inner = randomized_symmetrization(
            lambda g: spectral_pairwise_estimate(g, sub_params, cfg), sub, gen
        )
    values = np.zeros((n, n), dtype=np.float64)
    values[np.ix_(keep_sorted, keep_sorted)] = inner.values
    return PairwiseEstimate(values, degenerate=inner.degenerate)


def louvain_pairwise_estimate(graph: Graph, rng=None) -> PairwiseEstimate:
    """+1 for vertex pairs placed in the same modularity community, -1
    otherwise.  With no generator supplied a fixed internal seed is used."""
    if rng is None:
        rng = RngHandle(_DEFAULT_LOUVAIN_SEED)
    labels = louvain_communities(graph, resolve_rng(rng))
    values = np.where(labels[:, None] == labels[None, :], 1.0, -1.0)
    return PairwiseEstimate(values)


def estimate_pairwise_correlation(
    estimator: PairwiseEstimator,
    n: int,
    k: int,
    params: ViewParams,
    trials: int,
    rng,
    *,
    pairs_per_trial: int = 2048,
) -> CorrelationEstimate:
    """Measure the same-sign minus different-sign mean of an estimator.

    Each trial draws a fresh instance (labels, sign mapping, graph), runs the
    estimator, and averages its values over sampled vertex pairs split by the
    realized signs.  Trials where a sign class is missing among the sampled
    pairs are dropped.  The standard error comes from the spread of the
    per-trial differences, which respects the correlation between pairs that
    share a vertex.
    """
    if trials < 2:
        raise InvalidParameterError("need at least 2 trials")
    if pairs_per_trial < 1:
        raise InvalidParameterError("pairs_per_trial must be positive")
    gen = resolve_rng(rng)
    diffs = []
    for _ in range(trials):
        z = sample_label_vector(n, k, gen)
        mapping = sample_sign_mapping(k, gen)
        x = mapping(z)
        graph = sample_sbm2_conditional(x, params, gen)
        est = estimator(graph, x, params, gen)
        i = gen.integers(0, n, size=pairs_per_trial)
        j = gen.integers(0, n - 1, size=pairs_per_trial)
        j += j >= i
        same = x.signs[i] == x.signs[j]
        if not same.any() or same.all():
            continue
        vals = est.values[i, j]
        diffs.append(float(vals[same].mean() - vals[~same].mean()))
    if len(diffs) < 2:
        raise InsufficientDataError(
            f"only {len(diffs)} of {trials} trials produced both sign classes"
        )
    arr = np.asarray(diffs)
    return CorrelationEstimate(
        c_hat=float(arr.mean()),
        stderr=float(arr.std(ddof=1) / np.sqrt(arr.size)),
        trials=arr.size,
    )


def dumps_estimate(est: PairwiseEstimate) -> bytes:
    """Binary form: magic, u64 little-endian n, n*n float64 row-major."""
    header = _ESTIMATE_MAGIC + struct.pack("<Q", est.n)
    return header + est.values.astype("<f8").tobytes(order="C")


def loads_estimate(blob: bytes) -> PairwiseEstimate:
    if len(blob) < len(_ESTIMATE_MAGIC) + 8:
        raise ParseError("estimate blob too short")
    if blob[: len(_ESTIMATE_MAGIC)] != _ESTIMATE_MAGIC:
        raise ParseError("bad magic in estimate blob")
    (n,) = struct.unpack_from("<Q", blob, len(_ESTIMATE_MAGIC))
    body = blob[len(_ESTIMATE_MAGIC) + 8 :]
    if len(body) != 8 * n * n:
        raise ParseError(f"estimate blob has {len(body)} payload bytes, want {8 * n * n}")
    values = np.frombuffer(body, dtype="<f8").reshape(n, n).copy()
    return PairwiseEstimate(values)


def save_estimate(est: PairwiseEstimate, path) -> None:
    Path(path).write_bytes(dumps_estimate(est))


def load_estimate(path) -> PairwiseEstimate:
    return loads_estimate(Path(path).read_bytes())
