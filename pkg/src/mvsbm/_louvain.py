"""Internal modularity clustering used by the per-view and union baselines.

Array-based Louvain: repeated local-move passes over a randomized vertex
order, then aggregation of communities into supernodes, until a full pass
yields no move.  Deterministic given the supplied generator.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix

from mvsbm.graph_core import Graph


def _local_move_level(
    indptr: np.ndarray,
    indices: np.ndarray,
    weights: np.ndarray,
    m2: float,
    rng: np.random.Generator,
    resolution: float,
    min_gain: float,
) -> tuple[np.ndarray, bool]:
    """One level of local moves.  Returns (community id per node, moved_any)."""
    n = indptr.shape[0] - 1
    comm = np.arange(n, dtype=np.int64)
    row_of = np.repeat(np.arange(n), np.diff(indptr))
    strength = np.bincount(row_of, weights=weights, minlength=n)
    sigma = strength.copy()
    # A move is accepted only if it raises modularity by more than min_gain;
    # gains below are tracked in reduced units (modularity * m2 / 2).
    thr = min_gain * m2 / 2.0
    moved_any = False
    while True:
        moves = 0
        for i in rng.permutation(n):
            s, e = indptr[i], indptr[i + 1]
            if s == e:
                continue
            nb = indices[s:e]
            wt = weights[s:e]
            keep = nb != i
            if not keep.all():
                nb = nb[keep]
                wt = wt[keep]
            if nb.size == 0:
                continue
            ki = strength[i]
            ci = comm[i]
            sigma[ci] -= ki
            ucomm, inv = np.unique(comm[nb], return_inverse=True)
            wsum = np.bincount(inv, weights=wt)
            gains = wsum - resolution * ki * sigma[ucomm] / m2
            pos = np.searchsorted(ucomm, ci)
            if pos < ucomm.size and ucomm[pos] == ci:
                stay = gains[pos]
            else:
                stay = -resolution * ki * sigma[ci] / m2
            best = int(np.argmax(gains))
            target = int(ucomm[best])
            if target != ci and gains[best] - stay > thr:
                comm[i] = target
                sigma[target] += ki
                moves += 1
                moved_any = True
            else:
                sigma[ci] += ki
        if moves == 0:
            break
    return comm, moved_any


def _aggregate(
    indptr: np.ndarray,
    indices: np.ndarray,
    weights: np.ndarray,
    comm_compact: np.ndarray,
    n_comm: int,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Merge nodes with equal community index into supernodes, summing edge
    weights; intra-community weight becomes a self-loop."""
    row = np.repeat(comm_compact, np.diff(indptr))
    col = comm_compact[indices]
    agg = csr_matrix((weights, (row, col)), shape=(n_comm, n_comm))
    agg.sum_duplicates()
    return agg.indptr.astype(np.int64), agg.indices.astype(np.int64), agg.data


def louvain_communities(
    graph: Graph,
    rng: np.random.Generator,
    *,
    resolution: float = 1.0,
    min_gain: float = 1e-12,
) -> np.ndarray:
    """Cluster a graph by modularity; returns compact 0-based labels."""
    n = graph.n
    if graph.num_edges == 0:
        return np.arange(n, dtype=np.int64)
    indptr, indices = graph.adjacency_csr
    indptr = indptr.astype(np.int64)
    indices = indices.astype(np.int64)
    weights = np.ones(indices.shape[0], dtype=np.float64)
    m2 = float(weights.sum())
    labels = np.arange(n, dtype=np.int64)
    while True:
        comm, moved = _local_move_level(
            indptr, indices, weights, m2, rng, resolution, min_gain
        )
        if not moved:
            break
        uc, inv = np.unique(comm, return_inverse=True)
        labels = inv[labels]
        if uc.size == indptr.shape[0] - 1:
            break
        indptr, indices, weights = _aggregate(indptr, indices, weights, inv, uc.size)
    _, labels = np.unique(labels, return_inverse=True)
    return labels.astype(np.int64)
