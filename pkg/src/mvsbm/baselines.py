"""Early-fusion baselines and union-graph diagnostics.

Early fusion collapses all views into one union graph before clustering,
discarding the per-view sign structure; these baselines exist to quantify
what that costs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, eigsh
from sklearn.cluster import KMeans

from mvsbm._louvain import louvain_communities
from mvsbm.graph_core import (
    DegenerateStatisticsError,
    Graph,
    InvalidParameterError,
    LabelVector,
    MVInstance,
    resolve_rng,
    union_graph,
)

_EIGSH_START_SEED = 0xE16E


@dataclass(frozen=True)
class UnionStats:
    """Edge statistics of the union graph read as a single k-community SBM.

    p_in_hat / p_out_hat are the empirical within / across edge rates given
    the true labels, (d_star_hat, eps_star_hat) the equivalent degree and
    affinity parameters, and ks_ratio the resulting signal strength
    d_star_hat * (eps_star_hat / k)^2 that a spectral method would see.
    """

    p_in_hat: float
    p_out_hat: float
    d_star_hat: float
    eps_star_hat: float
    ks_ratio: float


def union_edge_stats(instance: MVInstance) -> UnionStats:
    """Exact within/across edge counts of the union graph, inverted to the
    parameters of the single-graph SBM with the same rates."""
    z = instance.z
    n = len(z)
    k = z.k
    union = union_graph(instance)
    sizes = z.community_sizes().astype(np.int64)
    pairs_in = int((sizes * (sizes - 1) // 2).sum())
    pairs_total = n * (n - 1) // 2
    pairs_out = pairs_total - pairs_in
    if pairs_in == 0 or pairs_out == 0:
        raise DegenerateStatisticsError("label split has an empty pair class")
    lab = z.labels
    edges = union.edges
    if edges.shape[0]:
        edges_in = int(np.count_nonzero(lab[edges[:, 0]] == lab[edges[:, 1]]))
    else:
        edges_in = 0
    edges_out = union.num_edges - edges_in
    p_in_hat = edges_in / pairs_in
    p_out_hat = edges_out / pairs_out
    if p_out_hat == 0.0:
        raise DegenerateStatisticsError("no across-community edges in the union")
    ratio = p_in_hat / p_out_hat
    eps_star_hat = k * (ratio - 1.0) / (k - 1.0 + ratio)
    denom = 1.0 - eps_star_hat / k
    if denom <= 0.0:
        raise DegenerateStatisticsError("within-rate dominates; inversion undefined")
    d_star_hat = n * p_out_hat / denom
    ks_ratio = d_star_hat * (eps_star_hat / k) ** 2
    return UnionStats(
        p_in_hat=p_in_hat,
        p_out_hat=p_out_hat,
        d_star_hat=d_star_hat,
        eps_star_hat=eps_star_hat,
        ks_ratio=ks_ratio,
    )


def _spectral_embedding(union: Graph, dims: int) -> np.ndarray:
    n = union.n
    indptr, indices = union.adjacency_csr
    src = np.repeat(np.arange(n), np.diff(indptr))
    rate = 2.0 * union.num_edges / (n * (n - 1))

    def centered(v: np.ndarray) -> np.ndarray:
        av = np.bincount(src, weights=v[indices], minlength=n)
        return av - rate * (v.sum() - v)

    def matvec(v: np.ndarray) -> np.ndarray:
        v = v - v.mean()
        w = centered(v)
        return w - w.mean()

    op = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    v0 = np.random.Generator(np.random.Philox(_EIGSH_START_SEED)).standard_normal(n)
    _, vecs = eigsh(op, k=dims, which="LA", v0=v0)
    return vecs


def early_fusion_cluster(
    instance: MVInstance, k: int, method: str = "louvain", rng=None
) -> LabelVector:
    """Cluster the union of all views directly into k communities.

    method "louvain" keeps the k largest modularity communities and assigns
    leftover vertices uniformly; "spectral" runs k-means on the top k - 1
    eigenvectors of the centered union adjacency (all-ones direction
    projected out).
    """
    n = instance.n
    if not 2 <= k <= n:
        raise InvalidParameterError("need 2 <= k <= n")
    gen = resolve_rng(rng)
    union = union_graph(instance)
    if method == "louvain":
        raw = louvain_communities(union, gen)
        sizes = np.bincount(raw)
        top = np.argsort(-sizes, kind="stable")[:k]
        labels = np.zeros(n, dtype=np.int64)
        for new, community in enumerate(top, start=1):
            labels[raw == community] = new
        leftover = np.flatnonzero(labels == 0)
        if leftover.size:
            labels[leftover] = gen.integers(1, k + 1, size=leftover.size)
        return LabelVector(labels, k)
    if method == "spectral":
        if union.num_edges == 0:
            raise DegenerateStatisticsError("union graph has no edges")
        vecs = _spectral_embedding(union, k - 1)
        seed = int(gen.integers(2**31))
        km = KMeans(n_clusters=k, n_init=10, random_state=seed)
        labels = km.fit_predict(vecs).astype(np.int64) + 1
        return LabelVector(labels, k)
    raise InvalidParameterError(f"unknown early-fusion method {method!r}")
