"""Core types, samplers, and serialization for multi-view block-model instances.

A hidden label vector z over k communities is shared by t views.  Each view
draws a uniform random sign mapping f: {1..k} -> {-1,+1} and an independent
two-community graph conditioned on the realized signs f(z): pairs with equal
signs connect with probability (1 + eps/2) * d / n, unequal signs with
probability (1 - eps/2) * d / n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np


class MvsbmError(Exception):
    """Base class for package errors."""


class InvalidParameterError(MvsbmError, ValueError):
    """A parameter or input value violates its contract."""


class BelowThresholdError(MvsbmError):
    """Signal strength is at or below the threshold an estimator requires."""


class InsufficientDataError(MvsbmError):
    """Not enough usable samples to form the requested statistic."""


class DegenerateStatisticsError(MvsbmError):
    """A computation collapsed to a degenerate value (no usable signal)."""


class ParseError(MvsbmError):
    """Serialized input does not match the expected format."""


_STREAM_MIX = 0x9E3779B97F4A7C15
_STREAM_MOD = 1 << 63


@dataclass(frozen=True)
class RngHandle:
    """Counter-based seeded RNG handle with derivable substreams.

    Identical (seed, stream) pairs always produce identical draw sequences;
    distinct streams are statistically independent.  Substream indices are
    mixed into the stream counter with a splitmix-style multiplier so nested
    derivations stay collision-free in practice.
    """

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed < 2**64):
            raise InvalidParameterError("seed must fit in 64 bits")
        if self.stream < 0:
            raise InvalidParameterError("stream must be non-negative")

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.Philox(ss))

    def substream(self, index: int) -> "RngHandle":
        if index < 0:
            raise InvalidParameterError("substream index must be non-negative")
        child = (self.stream * _STREAM_MIX + index + 1) % _STREAM_MOD
        return RngHandle(self.seed, child)


RngLike = "RngHandle | np.random.Generator | int"


def resolve_rng(rng) -> np.random.Generator:
    """Accept an RngHandle, a raw numpy Generator, or a plain integer seed."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngHandle):
        return rng.generator()
    if isinstance(rng, (int, np.integer)):
        return RngHandle(int(rng)).generator()
    raise InvalidParameterError(f"cannot interpret {rng!r} as an RNG")


@dataclass(frozen=True, eq=False)
class LabelVector:
    """Community labels in {1..k} for n vertices."""

    labels: np.ndarray
    k: int

    def __post_init__(self) -> None:
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if labels.ndim != 1:
            raise InvalidParameterError("labels must be one-dimensional")
        if self.k < 1:
            raise InvalidParameterError("k must be at least 1")
        if labels.size and (labels.min() < 1 or labels.max() > self.k):
            raise InvalidParameterError("labels must lie in {1..k}")

    def __len__(self) -> int:
        return int(self.labels.size)

    def indicator(self, p: int) -> np.ndarray:
        """0/1 membership vector of community p."""
        if not 1 <= p <= self.k:
            raise InvalidParameterError(f"community {p} outside 1..{self.k}")
        return (self.labels == p).astype(np.uint8)

    def community_sizes(self) -> np.ndarray:
        """Sizes of communities 1..k (zeros allowed)."""
        return np.bincount(self.labels, minlength=self.k + 1)[1:]


@dataclass(frozen=True, eq=False)
class SignVector:
    """Per-vertex signs in {-1,+1}."""

    signs: np.ndarray

    def __post_init__(self) -> None:
        signs = np.asarray(self.signs, dtype=np.int8)
        object.__setattr__(self, "signs", signs)
        if signs.ndim != 1:
            raise InvalidParameterError("signs must be one-dimensional")
        if signs.size and not np.isin(signs, (-1, 1)).all():
            raise InvalidParameterError("signs must be -1 or +1")

    def __len__(self) -> int:
        return int(self.signs.size)


@dataclass(frozen=True, eq=False)
class SignMapping:
    """A map from community labels {1..k} to signs {-1,+1}."""

    table: np.ndarray

    def __post_init__(self) -> None:
        table = np.asarray(self.table, dtype=np.int8)
        object.__setattr__(self, "table", table)
        if table.ndim != 1 or table.size < 1:
            raise InvalidParameterError("table must be a non-empty vector")
        if not np.isin(table, (-1, 1)).all():
            raise InvalidParameterError("table entries must be -1 or +1")

    @property
    def k(self) -> int:
        return int(self.table.size)

    def __call__(self, z: LabelVector) -> SignVector:
        if z.k > self.k:
            raise InvalidParameterError("label range exceeds mapping table")
        return SignVector(self.table[z.labels - 1])


@dataclass(frozen=True)
class ViewParams:
    """Degree and signal-strength parameters of one view.

    eps may be 0 (pure noise) and runs up to 2, the largest value keeping
    both conditional edge rates non-negative.
    """

    d: float
    eps: float

    def __post_init__(self) -> None:
        if not (self.d > 0):
            raise InvalidParameterError("d must be positive")
        if not (0 <= self.eps <= 2):
            raise InvalidParameterError("eps must lie in [0, 2]")

    @property
    def delta(self) -> float:
        """Signal margin d*eps^2/4 - 1; estimators require this positive."""
        return self.d * self.eps**2 / 4 - 1


@dataclass(frozen=True, eq=False)
class Graph:
    """Undirected simple graph on vertices 0..n-1.

    Edges are stored once, canonically (i < j, lexicographically sorted).
    Construction normalizes edge order and rejects self-loops/duplicates.
    """

    n: int
    edges: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 0:
            raise InvalidParameterError("n must be non-negative")
        edges = np.asarray(self.edges, dtype=np.int64)
        if edges.size == 0:
            edges = edges.reshape(0, 2)
        if edges.ndim != 2 or edges.shape[1] != 2:
            raise InvalidParameterError("edges must have shape (m, 2)")
        if edges.shape[0]:
            if edges.min() < 0 or edges.max() >= self.n:
                raise InvalidParameterError("edge endpoint outside 0..n-1")
            if (edges[:, 0] == edges[:, 1]).any():
                raise InvalidParameterError("self-loops are not allowed")
            edges = np.sort(edges, axis=1)
            order = np.lexsort((edges[:, 1], edges[:, 0]))
            edges = edges[order]
            dup = (np.diff(edges[:, 0]) == 0) & (np.diff(edges[:, 1]) == 0)
            if dup.any():
                raise InvalidParameterError("duplicate edges are not allowed")
        object.__setattr__(self, "edges", edges)

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @cached_property
    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=np.int64)
        if self.num_edges:
            deg += np.bincount(self.edges[:, 0], minlength=self.n)
            deg += np.bincount(self.edges[:, 1], minlength=self.n)
        return deg

    @cached_property
    def adjacency_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) with each neighbor list sorted ascending."""
        src = np.concatenate([self.edges[:, 0], self.edges[:, 1]])
        dst = np.concatenate([self.edges[:, 1], self.edges[:, 0]])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.add.at(indptr, src + 1, 1)
        return np.cumsum(indptr), dst

    def neighbors(self, i: int) -> np.ndarray:
        indptr, indices = self.adjacency_csr
        return indices[indptr[i]:indptr[i + 1]]

    def validate(self) -> None:
        """Re-check structural invariants; raises on violation."""
        e = self.edges
        if e.shape[0]:
            if (e[:, 0] >= e[:, 1]).any():
                raise InvalidParameterError("edges must satisfy i < j")
            order = np.lexsort((e[:, 1], e[:, 0]))
            if not (order == np.arange(e.shape[0])).all():
                raise InvalidParameterError("edges must be lexsorted")
        if self.degrees.sum() != 2 * self.num_edges:
            raise InvalidParameterError("degree sum does not match edge count")

    def induced_subgraph(self, keep: np.ndarray) -> tuple["Graph", np.ndarray]:
        """Subgraph on the sorted vertex subset `keep`; returns (graph, keep).

        Vertices are relabeled by rank inside `keep`; the returned index array
        (sorted copy of `keep`) maps new labels back to original ones.
        """
        keep = np.unique(np.asarray(keep, dtype=np.int64))
        if keep.size and (keep[0] < 0 or keep[-1] >= self.n):
            raise InvalidParameterError("subset outside vertex range")
        inside = np.zeros(self.n, dtype=bool)
        inside[keep] = True
        e = self.edges
        sel = inside[e[:, 0]] & inside[e[:, 1]] if e.shape[0] else np.zeros(0, bool)
        sub = e[sel]
        relabel = np.searchsorted(keep, sub)
        return Graph(keep.size, relabel), keep


@dataclass(frozen=True, eq=False)
class View:
    """One view: its sign mapping, parameters, and realized graph."""

    mapping: SignMapping
    params: ViewParams
    graph: Graph


@dataclass(frozen=True, eq=False)
class MVInstance:
    """A multi-view instance: shared labels plus per-view data."""

    z: LabelVector
    views: tuple[View, ...]
    seed: int

    def __post_init__(self) -> None:
        n = len(self.z)
        for v in self.views:
            if v.graph.n != n:
                raise InvalidParameterError("view graph size differs from labels")

    @property
    def n(self) -> int:
        return len(self.z)

    @property
    def t(self) -> int:
        return len(self.views)

    def signs(self, view_index: int) -> SignVector:
        """Realized per-vertex signs f(z) of one view."""
        return self.views[view_index].mapping(self.z)


def sample_label_vector(n: int, k: int, rng) -> LabelVector:
    """Uniform labels over {1..k} for n vertices."""
    if n < 0 or k < 1:
        raise InvalidParameterError("need n >= 0 and k >= 1")
    gen = resolve_rng(rng)
    return LabelVector(gen.integers(1, k + 1, size=n), k)


def sample_sign_mapping(k: int, rng) -> SignMapping:
    """Uniform random map {1..k} -> {-1,+1}."""
    if k < 1:
        raise InvalidParameterError("k must be at least 1")
    gen = resolve_rng(rng)
    return SignMapping(gen.integers(0, 2, size=k).astype(np.int8) * 2 - 1)


def _check_probability(p: float, what: str) -> None:
    if not (0.0 <= p <= 1.0):
        raise InvalidParameterError(f"{what} = {p:.6g} outside [0, 1]")


def _decode_triangular(idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Inverse of the row-major enumeration of pairs (a, b) with a < b:
    # idx = b*(b-1)/2 + a.
    b = np.floor((1.0 + np.sqrt(1.0 + 8.0 * idx.astype(np.float64))) / 2.0)
    b = b.astype(np.int64)
    # Guard against float rounding at block boundaries.
    b -= idx < b * (b - 1) // 2
    a = idx - b * (b - 1) // 2
    return a, b


def _sample_pairs_within(members: np.ndarray, p: float, gen) -> np.ndarray:
    """Uniform Bernoulli(p) edges among one vertex group, drawn exactly.

    A Binomial count plus a uniform distinct-pair subset is distributed
    identically to independent per-pair coin flips, at O(edges) cost.
    """
    g = members.size
    total = g * (g - 1) // 2
    if total == 0 or p == 0.0:
        return np.empty((0, 2), dtype=np.int64)
    m = int(gen.binomial(total, p))
    idx = gen.choice(total, size=m, replace=False)
    a, b = _decode_triangular(idx)
    return np.stack([members[a], members[b]], axis=1)


def _sample_pairs_between(left: np.ndarray, right: np.ndarray, p: float, gen) -> np.ndarray:
    g1, g2 = left.size, right.size
    total = g1 * g2
    if total == 0 or p == 0.0:
        return np.empty((0, 2), dtype=np.int64)
    m = int(gen.binomial(total, p))
    idx = gen.choice(total, size=m, replace=False)
    return np.stack([left[idx // g2], right[idx % g2]], axis=1)


def sample_sbm2_conditional(x: SignVector, params: ViewParams, rng) -> Graph:
    """Two-community graph conditioned on realized signs.

    Pairs with equal signs connect with probability (1 + eps/2) * d / n and
    pairs with opposite signs with probability (1 - eps/2) * d / n, all
    independently.
    """
    n = len(x)
    gen = resolve_rng(rng)
    p_same = (1 + params.eps / 2) * params.d / max(n, 1)
    p_diff = (1 - params.eps / 2) * params.d / max(n, 1)
    _check_probability(p_same, "same-sign edge probability")
    _check_probability(p_diff, "cross-sign edge probability")
    plus = np.where(x.signs == 1)[0]
    minus = np.where(x.signs == -1)[0]
    blocks = [
        _sample_pairs_within(plus, p_same, gen),
        _sample_pairs_within(minus, p_same, gen),
        _sample_pairs_between(plus, minus, p_diff, gen),
    ]
    return Graph(n, np.concatenate(blocks))


def sample_sbm_k(n: int, k: int, d: float, eps: float, rng) -> tuple[LabelVector, Graph]:
    """k-community graph: in-community rate (1 + (1-1/k)*eps) * d / n,
    cross-community rate (1 - eps/k) * d / n.  Returns (labels, graph)."""
    if n < 0 or k < 1:
        raise InvalidParameterError("need n >= 0 and k >= 1")
    if d <= 0:
        raise InvalidParameterError("d must be positive")
    if eps < 0:
        raise InvalidParameterError("eps must be non-negative")
    gen = resolve_rng(rng)
    p_in = (1 + (1 - 1 / k) * eps) * d / max(n, 1)
    p_out = (1 - eps / k) * d / max(n, 1)
    _check_probability(p_in, "in-community edge probability")
    _check_probability(p_out, "cross-community edge probability")
    z = sample_label_vector(n, k, gen)
    groups = [np.where(z.labels == p)[0] for p in range(1, k + 1)]
    blocks = [_sample_pairs_within(g, p_in, gen) for g in groups]
    for a in range(k):
        for b in range(a + 1, k):
            blocks.append(_sample_pairs_between(groups[a], groups[b], p_out, gen))
    return z, Graph(n, np.concatenate(blocks))


def sample_mv_instance(
    n: int, k: int, view_params: Sequence[ViewParams], rng: "RngHandle | int"
) -> MVInstance:
    """Draw a full multi-view instance.

    The label vector uses substream 0 of the handle and view l uses substream
    l+1 (for both its sign mapping and its graph), so views are independent
    and any one of them can be regenerated without the others.
    """
    if isinstance(rng, (int, np.integer)):
        rng = RngHandle(int(rng))
    if not isinstance(rng, RngHandle):
        raise InvalidParameterError("sample_mv_instance needs an RngHandle or seed")
    z = sample_label_vector(n, k, rng.substream(0).generator())
    views = []
    for l, params in enumerate(view_params):
        gen = rng.substream(l + 1).generator()
        f = sample_sign_mapping(k, gen)
        g = sample_sbm2_conditional(f(z), params, gen)
        views.append(View(f, params, g))
    return MVInstance(z, tuple(views), rng.seed)


def union_of_graphs(graphs: Sequence[Graph]) -> Graph:
    """Edge-set union of graphs on a common vertex set."""
    if not graphs:
        raise InvalidParameterError("need at least one graph")
    n = graphs[0].n
    for g in graphs:
        if g.n != n:
            raise InvalidParameterError("graphs must share a vertex set")
    stacked = np.concatenate([g.edges for g in graphs])
    if stacked.shape[0] == 0:
        return Graph(n, stacked)
    keys = stacked[:, 0] * n + stacked[:, 1]
    uniq = np.unique(keys)
    return Graph(n, np.stack([uniq // n, uniq % n], axis=1))


def union_graph(instance: MVInstance) -> Graph:
    """Union of all view graphs of an instance."""
    return union_of_graphs([v.graph for v in instance.views])


def is_balanced(z: LabelVector, slack_exponent: float = 0.25) -> bool:
    """True iff every community size is within n^(-a) relative slack of n/k."""
    if not (0 < slack_exponent < 1):
        raise InvalidParameterError("slack_exponent must lie in (0, 1)")
    n = len(z)
    if n == 0:
        raise InvalidParameterError("empty label vector")
    slack = n ** (-slack_exponent)
    target = n / z.k
    sizes = z.community_sizes()
    return bool(
        (sizes >= (1 - slack) * target).all() and (sizes <= (1 + slack) * target).all()
    )


# -- serialization ----------------------------------------------------------


def dumps_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.num_edges}"]
    lines.extend(f"{i} {j}" for i, j in g.edges)
    return "\n".join(lines) + "\n"


def _parse_ints(line: str, count: int, what: str) -> list[int]:
    parts = line.split()
    if len(parts) != count:
        raise ParseError(f"expected {count} fields in {what}, got {len(parts)}")
    try:
        return [int(p) for p in parts]
    except ValueError as exc:
        raise ParseError(f"non-integer field in {what}") from exc


def _read_graph_lines(lines: list[str], pos: int) -> tuple[Graph, int]:
    if pos >= len(lines):
        raise ParseError("missing graph header line")
    n, m = _parse_ints(lines[pos], 2, "graph header")
    pos += 1
    if pos + m > len(lines):
        raise ParseError("truncated edge list")
    edges = np.empty((m, 2), dtype=np.int64)
    for r in range(m):
        edges[r] = _parse_ints(lines[pos + r], 2, "edge line")
    return Graph(n, edges), pos + m


def loads_graph(text: str) -> Graph:
    lines = text.splitlines()
    g, pos = _read_graph_lines(lines, 0)
    if any(line.strip() for line in lines[pos:]):
        raise ParseError("trailing content after edge list")
    return g


def dumps_instance(inst: MVInstance) -> str:
    out = [f"{inst.n} {inst.z.k} {inst.t} {inst.seed}"]
    for l, view in enumerate(inst.views):
        out.append(f"{view.params.d:.17g} {view.params.eps:.17g}")
        out.append(" ".join(str(int(s)) for s in inst.signs(l).signs))
        out.append(dumps_graph(view.graph).rstrip("\n"))
    out.append(" ".join(str(int(v)) for v in inst.z.labels))
    return "\n".join(out) + "\n"


def loads_instance(text: str) -> MVInstance:
    lines = text.splitlines()
    if not lines:
        raise ParseError("empty instance file")
    n, k, t, seed = _parse_ints(lines[0], 4, "instance header")
    if n < 0 or k < 1 or t < 0:
        raise ParseError("invalid instance header values")
    pos = 1
    sign_vectors: list[np.ndarray] = []
    params_list: list[ViewParams] = []
    graphs: list[Graph] = []
    for _ in range(t):
        if pos >= len(lines):
            raise ParseError("missing view parameter line")
        parts = lines[pos].split()
        if len(parts) != 2:
            raise ParseError("view parameter line must hold d and eps")
        try:
            d, eps = float(parts[0]), float(parts[1])
        except ValueError as exc:
            raise ParseError("non-numeric view parameters") from exc
        params_list.append(ViewParams(d, eps))
        pos += 1
        if pos >= len(lines):
            raise ParseError("missing sign line")
        signs = np.array(_parse_ints(lines[pos], n, "sign line"), dtype=np.int8)
        sign_vectors.append(signs)
        pos += 1
        g, pos = _read_graph_lines(lines, pos)
        if g.n != n:
            raise ParseError("view graph size differs from header")
        graphs.append(g)
    if pos >= len(lines):
        raise ParseError("missing label line")
    labels = np.array(_parse_ints(lines[pos], n, "label line"), dtype=np.int64)
    if any(line.strip() for line in lines[pos + 1 :]):
        raise ParseError("trailing content after label line")
    z = LabelVector(labels, k)
    views = []
    for l in range(t):
        x = SignVector(sign_vectors[l])
        # Rebuild the mapping table from (z, f(z)); labels absent from z keep
        # the +1 default since the file does not constrain them.
        table = np.ones(k, dtype=np.int8)
        present = np.unique(z.labels)
        for p in present:
            sel = x.signs[z.labels == p]
            if not (sel == sel[0]).all():
                raise ParseError(f"view {l} signs are inconsistent with labels")
            table[p - 1] = sel[0]
        views.append(View(SignMapping(table), params_list[l], graphs[l]))
    return MVInstance(z, tuple(views), seed)


def save_graph(g: Graph, path: "str | Path") -> None:
    Path(path).write_text(dumps_graph(g))


def load_graph(path: "str | Path") -> Graph:
    return loads_graph(Path(path).read_text())


def save_instance(inst: MVInstance, path: "str | Path") -> None:
    Path(path).write_text(dumps_instance(inst))


def load_instance(path: "str | Path") -> MVInstance:
    return loads_instance(Path(path).read_text())
