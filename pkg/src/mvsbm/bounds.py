"""Information-theoretic bounds: how many views any black-box pairwise
estimator pipeline needs before partial recovery is possible, plus the
synthetic noisy-channel estimator used to probe those bounds empirically."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from mvsbm.graph_core import InvalidParameterError, SignVector, resolve_rng


@dataclass(frozen=True)
class BoundParams:
    """Inputs of the lower bound on the number of views.

    k: number of communities (>= 2).
    rho: target advantage over random guessing, agreement 1/k + rho.
    alpha_bar: per-view signal strength available to the estimator, in (0, 2].
    tau: fraction of views that carry signal, in (0, 1].
    C: absolute constant of the per-view information envelope.  The default 1
       states the bound in rate units; the conservative envelope (information
       per view at most 2 * alpha_bar) corresponds to C = 2.
    """

    k: int
    rho: float
    alpha_bar: float
    tau: float = 1.0
    C: float = 1.0

    def __post_init__(self) -> None:
        if self.k < 2:
            raise InvalidParameterError("k must be at least 2")
        if not (self.rho > 0):
            raise InvalidParameterError("rho must be positive")
        if 1 / self.k + self.rho > 1 + 1e-12:
            raise InvalidParameterError("1/k + rho must not exceed 1")
        if not (0 < self.alpha_bar <= 2):
            raise InvalidParameterError("alpha_bar must lie in (0, 2]")
        if not (0 < self.tau <= 1):
            raise InvalidParameterError("tau must lie in (0, 1]")
        if not (self.C > 0):
            raise InvalidParameterError("C must be positive")


def binary_entropy(p):
    """Binary entropy in bits; endpoints 0 and 1 map to 0 exactly.

    Accepts a scalar or array, preserving shape.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.size and (arr.min() < 0 or arr.max() > 1):
        raise InvalidParameterError("p must lie in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -arr * np.log2(arr) - (1 - arr) * np.log2(1 - arr)
    h = np.where((arr == 0) | (arr == 1), 0.0, h)
    return float(h) if np.isscalar(p) or arr.ndim == 0 else h


def excess_info(beta: float, k: int) -> float:
    """log2(k) - h2(beta) - (1 - beta) * log2(k - 1).

    Zero at beta = 1/k, strictly convex in beta, and the natural scale of
    how much information a guess with correct-rate beta reveals about a
    uniform k-ary label.
    """
    if k < 2:
        raise InvalidParameterError("k must be at least 2")
    if not (0 < beta <= 1):
        raise InvalidParameterError("beta must lie in (0, 1]")
    return float(math.log2(k) - binary_entropy(beta) - (1 - beta) * math.log2(k - 1))


def blackbox_lower_bound_t(params: BoundParams) -> float:
    """Minimum number of views before agreement 1/k + rho is attainable by
    any pipeline consuming only pairwise sign estimates:

        t_min = tau * excess_info(1/k + rho, k) / (2 * C * alpha_bar)
    """
    beta = 1 / params.k + params.rho
    return params.tau * excess_info(beta, params.k) / (2 * params.C * params.alpha_bar)


def bsc_flip_probability(alpha: float) -> float:
    """Flip rate 1/2 - sqrt(alpha/8) of the synthetic noisy channel."""
    if not (0 < alpha <= 2):
        raise InvalidParameterError("alpha must lie in (0, 2]")
    return 0.5 - math.sqrt(alpha / 8)


def bsc_alpha_estimate(x: SignVector, alpha: float, rng):
    """Synthetic pairwise estimate from an independent noisy copy of x.

    Each sign is flipped independently with probability 1/2 - sqrt(alpha/8)
    and the estimate is the outer product of the noisy signs, so the
    same-pair/different-pair conditional means differ by exactly alpha.
    Returns a PairwiseEstimate with entries in {-1, +1}.
    """
    from mvsbm.estimators import PairwiseEstimate

    flip = bsc_flip_probability(alpha)
    gen = resolve_rng(rng)
    noisy = x.signs * np.where(gen.random(len(x)) < flip, -1, 1).astype(np.int8)
    values = np.outer(noisy, noisy).astype(np.float64)
    return PairwiseEstimate(values)


def bsc_mutual_info_bound(alpha: float, n: int) -> float:
    """Upper bound n * (1 - h2(1/2 + sqrt(alpha/8))) on the information one
    noisy sign vector carries about the hidden signs; at most 2*alpha*n on
    alpha in (0, 1/2]."""
    if not (0 < alpha <= 2):
        raise InvalidParameterError("alpha must lie in (0, 2]")
    if n < 1:
        raise InvalidParameterError("n must be at least 1")
    return n * (1 - binary_entropy(0.5 + math.sqrt(alpha / 8)))
