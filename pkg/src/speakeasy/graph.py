"""Graph, partition and cover containers plus their TSV readers and writers.

Node ids are dense 0-based integers. Names read from a dense-matrix header
are kept on the graph as an optional lookup table; every algorithm works on
the integer ids only.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Graph",
    "Partition",
    "Cover",
    "GraphFormatError",
    "load_edge_list",
    "from_dense_matrix",
    "read_dense_matrix",
    "write_dense_matrix",
    "graph_from_array",
    "induced_subgraph",
    "write_partition",
    "read_partition",
    "write_cover",
    "read_cover",
]


class GraphFormatError(ValueError):
    """Raised when an input file or array violates the graph invariants."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable weighted graph over nodes ``0 .. n-1``.

    Parameters
    ----------
    n : int
        Number of nodes.
    src, dst : array_like of int
        Edge endpoints. For undirected graphs each unordered pair may appear
        once, in either orientation.
    weight : array_like of float, optional
        Finite edge weights, negative values allowed. Defaults to 1.0.
    directed : bool
        If True an edge ``(u, v)`` carries labels from ``u`` to ``v``.
    names : sequence of str, optional
        External node names, index-aligned with node ids.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray = None
    directed: bool = False
    names: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        n = int(self.n)
        if n < 0:
            raise GraphFormatError(f"node count must be non-negative, got {n}")
        src = np.asarray(self.src, dtype=np.int64).ravel()
        dst = np.asarray(self.dst, dtype=np.int64).ravel()
        if src.shape != dst.shape:
            raise GraphFormatError("src and dst must have the same length")
        if self.weight is None:
            weight = np.ones(src.shape[0], dtype=np.float64)
        else:
            weight = np.asarray(self.weight, dtype=np.float64).ravel()
        if weight.shape != src.shape:
            raise GraphFormatError("weight must have one entry per edge")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise GraphFormatError(f"edge endpoint outside [0, {n})")
            loops = np.flatnonzero(src == dst)
            if loops.size:
                raise GraphFormatError(f"self-loop on node {src[loops[0]]}")
            if not np.all(np.isfinite(weight)):
                raise GraphFormatError("edge weights must be finite")
            if self.directed:
                key = src * n + dst
            else:
                key = np.minimum(src, dst) * n + np.maximum(src, dst)
            uniq, counts = np.unique(key, return_counts=True)
            if np.any(counts > 1):
                dup = uniq[np.argmax(counts > 1)]
                raise GraphFormatError(
                    f"duplicate edge between {dup // n} and {dup % n}"
                )
        if self.names is not None:
            names = tuple(str(s) for s in self.names)
            if len(names) != n:
                raise GraphFormatError("names must have one entry per node")
            object.__setattr__(self, "names", names)
        for arr in (src, dst, weight):
            arr.setflags(write=False)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "directed", bool(self.directed))

    @property
    def num_edges(self) -> int:
        return int(self.src.shape[0])

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return [
            (int(u), int(v), float(w))
            for u, v, w in zip(self.src, self.dst, self.weight)
        ]

    @cached_property
    def in_csr(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Incoming adjacency as ``(indptr, neighbors, weights)``.

        Row ``v`` lists every node whose label reaches ``v``: in-neighbors for
        directed graphs, all neighbors otherwise. Rows are sorted by neighbor id.
        """
        if self.directed:
            heads, tails, w = self.dst, self.src, self.weight
        else:
            heads = np.concatenate([self.dst, self.src])
            tails = np.concatenate([self.src, self.dst])
            w = np.concatenate([self.weight, self.weight])
        order = np.lexsort((tails, heads))
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(heads, minlength=self.n), out=indptr[1:])
        out = (
            indptr,
            np.ascontiguousarray(tails[order]),
            np.ascontiguousarray(w[order]),
        )
        for arr in out:
            arr.setflags(write=False)
        return out

    def in_degree(self) -> np.ndarray:
        indptr = self.in_csr[0]
        return np.diff(indptr)

    def to_dense(self) -> np.ndarray:
        """Dense weight matrix; symmetric unless the graph is directed."""
        mat = np.zeros((self.n, self.n))
        mat[self.src, self.dst] = self.weight
        if not self.directed:
            mat[self.dst, self.src] = self.weight
        return mat

    def __repr__(self):
        kind = "directed" if self.directed else "undirected"
        return f"Graph(n={self.n}, edges={self.num_edges}, {kind})"


def _dense_labels(labels: np.ndarray) -> np.ndarray:
    """Relabel to ``0..k-1`` in order of first appearance."""
    labels = np.asarray(labels).ravel()
    if labels.size == 0:
        return np.zeros(0, dtype=np.int64)
    _, first, inverse = np.unique(labels, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.ravel()]


class Partition:
    """Disjoint assignment of nodes ``0..n-1`` to communities ``0..k-1``.

    Any array of hashable-by-value labels is accepted; it is relabeled so that
    community ids are dense and ordered by first appearance.
    """

    __slots__ = ("_labels", "_k")

    def __init__(self, labels: Sequence[int] | np.ndarray):
        dense = _dense_labels(np.asarray(labels))
        dense.setflags(write=False)
        self._labels = dense
        self._k = int(dense.max()) + 1 if dense.size else 0

    @property
    def labels(self) -> np.ndarray:
        return self._labels

    @property
    def n(self) -> int:
        return int(self._labels.size)

    @property
    def num_communities(self) -> int:
        return self._k

    @property
    def assignment(self) -> dict[int, int]:
        return {i: int(c) for i, c in enumerate(self._labels)}

    def communities(self) -> list[np.ndarray]:
        if self._k == 0:
            return []
        order = np.argsort(self._labels, kind="stable")
        bounds = np.cumsum(np.bincount(self._labels, minlength=self._k))[:-1]
        return np.split(order, bounds)

    def sizes(self) -> np.ndarray:
        return np.bincount(self._labels, minlength=self._k)

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return np.array_equal(self._labels, other._labels)

    def __hash__(self):
        return hash(self._labels.tobytes())

    def __repr__(self):
        return f"Partition(n={self.n}, communities={self._k})"


class Cover:
    """Assignment of every node to one or more communities."""

    __slots__ = ("_members",)

    def __init__(self, memberships: Sequence[Iterable[int]]):
        members = tuple(frozenset(int(c) for c in m) for m in memberships)
        for v, m in enumerate(members):
            if not m:
                raise GraphFormatError(f"node {v} has no community")
            if min(m) < 0:
                raise GraphFormatError(f"negative community id on node {v}")
        self._members = members

    @classmethod
    def from_partition(cls, partition: Partition) -> "Cover":
        return cls([(int(c),) for c in partition.labels])

    @classmethod
    def from_communities(cls, communities: Iterable[Iterable[int]], n: int) -> "Cover":
        members = [set() for _ in range(n)]
        for cid, nodes in enumerate(communities):
            for v in nodes:
                members[int(v)].add(cid)
        return cls(members)

    @property
    def memberships(self) -> tuple[frozenset[int], ...]:
        return self._members

    @property
    def n(self) -> int:
        return len(self._members)

    @property
    def num_communities(self) -> int:
        return 1 + max((max(m) for m in self._members), default=-1)

    def communities(self) -> list[set[int]]:
        """Node sets indexed by community id; unused ids give empty sets."""
        comms = [set() for _ in range(self.num_communities)]
        for v, m in enumerate(self._members):
            for c in m:
                comms[c].add(v)
        return comms

    def membership_matrix(self) -> np.ndarray:
        mat = np.zeros((self.n, self.num_communities), dtype=np.int64)
        for v, m in enumerate(self._members):
            mat[v, list(m)] = 1
        return mat

    def multi_nodes(self) -> list[int]:
        return [v for v, m in enumerate(self._members) if len(m) >= 2]

    def is_disjoint(self) -> bool:
        return all(len(m) == 1 for m in self._members)

    def to_partition(self) -> Partition:
        if not self.is_disjoint():
            raise ValueError("cover has multi-community nodes")
        return Partition([next(iter(m)) for m in self._members])

    def __len__(self):
        return self.n

    def __eq__(self, other):
        if not isinstance(other, Cover):
            return NotImplemented
        return self._members == other._members

    def __hash__(self):
        return hash(self._members)

    def __repr__(self):
        return (
            f"Cover(n={self.n}, communities={self.num_communities}, "
            f"multi={len(self.multi_nodes())})"
        )


# ---------------------------------------------------------------------------
# readers
# ---------------------------------------------------------------------------


def _data_lines(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield lineno, line


def load_edge_list(path: str | os.PathLike, directed: bool = False) -> Graph:
    """Read a ``src<TAB>dst[<TAB>weight]`` edge list.

    ``n`` is one more than the largest node id seen. Self-loops, duplicate
    pairs and non-finite weights are rejected with the offending line number.
    """
    src, dst, weight = [], [], []
    seen = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) not in (2, 3):
            raise GraphFormatError(f"{path}:{lineno}: expected 2 or 3 columns")
        try:
            u, v = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: malformed line {line!r}") from None
        if u < 0 or v < 0:
            raise GraphFormatError(f"{path}:{lineno}: negative node id")
        if u == v:
            raise GraphFormatError(f"{path}:{lineno}: self-loop on node {u}")
        if not math.isfinite(w):
            raise GraphFormatError(f"{path}:{lineno}: non-finite weight {parts[2]!r}")
        key = (u, v) if directed else (min(u, v), max(u, v))
        if key in seen:
            raise GraphFormatError(
                f"{path}:{lineno}: duplicate edge {u}-{v} (first on line {seen[key]})"
            )
        seen[key] = lineno
        src.append(u)
        dst.append(v)
        weight.append(w)
    n = 1 + max(max(src, default=-1), max(dst, default=-1))
    return Graph(n, src, dst, weight, directed=directed)


def graph_from_array(
    matrix,
    directed: bool = False,
    zero_diagonal: bool = True,
    names: Sequence[str] | None = None,
    atol: float = 1e-9,
) -> Graph:
    """Build a graph from a square weight matrix, dropping zero entries.

    For undirected graphs the matrix must be symmetric within ``atol`` and
    the upper triangle is used.
    """
    mat = np.asarray(matrix, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise GraphFormatError(f"matrix must be square, got shape {mat.shape}")
    if not np.all(np.isfinite(mat)):
        raise GraphFormatError("matrix contains non-finite values")
    n = mat.shape[0]
    diag = np.diagonal(mat)
    if not zero_diagonal and np.any(diag != 0):
        raise GraphFormatError("non-zero diagonal entries would be self-loops")
    if not directed:
        gap = np.abs(mat - mat.T)
        if gap.size and gap.max() > atol:
            i, j = np.unravel_index(np.argmax(gap), gap.shape)
            raise GraphFormatError(
                f"matrix is asymmetric at ({i}, {j}): {mat[i, j]!r} vs {mat[j, i]!r}"
            )
        src, dst = np.triu_indices(n, k=1)
    else:
        src, dst = np.nonzero(~np.eye(n, dtype=bool))
    w = mat[src, dst]
    keep = w != 0
    return Graph(n, src[keep], dst[keep], w[keep], directed=directed, names=names)


def read_dense_matrix(path: str | os.PathLike) -> tuple[np.ndarray, list[str] | None]:
    """Read a square TSV matrix and its optional header row of node names."""
    rows = []
    names = None
    for lineno, line in _data_lines(path):
        cells = line.split("\t")
        try:
            rows.append([float(x) for x in cells])
        except ValueError:
            if names is None and not rows:
                names = [c.strip() for c in cells]
                continue
            raise GraphFormatError(f"{path}:{lineno}: non-numeric entry") from None
    widths = {len(r) for r in rows}
    if len(widths) > 1 or (rows and widths.pop() != len(rows)):
        raise GraphFormatError(f"{path}: matrix is not square")
    if names is not None and len(names) != len(rows):
        raise GraphFormatError(f"{path}: header has {len(names)} names for {len(rows)} rows")
    return np.array(rows, dtype=np.float64).reshape(len(rows), len(rows)), names


def from_dense_matrix(
    path: str | os.PathLike, zero_diagonal: bool = True, directed: bool = False
) -> Graph:
    """Read a TSV weight matrix, optionally preceded by a header of node names."""
    mat, names = read_dense_matrix(path)
    return graph_from_array(mat, directed=directed, zero_diagonal=zero_diagonal, names=names)


def write_dense_matrix(matrix, path: str | os.PathLike, names: Sequence[str] | None = None) -> None:
    mat = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if names is not None:
            fh.write("\t".join(names) + "\n")
        for row in mat:
            fh.write("\t".join(repr(float(x)) for x in row) + "\n")


def induced_subgraph(g: Graph, nodes: Iterable[int]) -> tuple[Graph, dict[int, int]]:
    """Subgraph on ``nodes`` with ids remapped densely in ascending old-id order."""
    keep = np.unique(np.fromiter((int(v) for v in nodes), dtype=np.int64))
    if keep.size and (keep[0] < 0 or keep[-1] >= g.n):
        raise GraphFormatError(f"node id outside [0, {g.n})")
    remap = np.full(g.n, -1, dtype=np.int64)
    remap[keep] = np.arange(keep.size)
    mask = (remap[g.src] >= 0) & (remap[g.dst] >= 0)
    names = None if g.names is None else [g.names[v] for v in keep]
    sub = Graph(
        int(keep.size),
        remap[g.src[mask]],
        remap[g.dst[mask]],
        g.weight[mask],
        directed=g.directed,
        names=names,
    )
    return sub, {int(old): i for i, old in enumerate(keep)}


# ---------------------------------------------------------------------------
# partition / cover files
# ---------------------------------------------------------------------------


def write_partition(partition: Partition, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v, c in enumerate(partition.labels):
            fh.write(f"{v}\t{c}\n")


def write_cover(cover: Cover, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for v, m in enumerate(cover.memberships):
            fh.write(f"{v}\t{','.join(str(c) for c in sorted(m))}\n")


def _read_rows(path) -> dict[int, list[int]]:
    rows: dict[int, list[int]] = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise GraphFormatError(f"{path}:{lineno}: expected node<TAB>communities")
        try:
            v = int(parts[0])
            comms = [int(c) for c in parts[1].split(",")]
        except ValueError:
            raise GraphFormatError(f"{path}:{lineno}: malformed row {line!r}") from None
        if v < 0 or min(comms) < 0:
            raise GraphFormatError(f"{path}:{lineno}: negative id")
        if v in rows:
            raise GraphFormatError(f"{path}:{lineno}: node {v} listed twice")
        rows[v] = comms
    if rows and sorted(rows) != list(range(len(rows))):
        missing = sorted(set(range(max(rows) + 1)) - set(rows))
        raise GraphFormatError(f"{path}: node ids not contiguous, missing {missing[:5]}")
    return rows


def read_partition(path: str | os.PathLike) -> Partition:
    rows = _read_rows(path)
    labels = []
    for v in range(len(rows)):
        if len(rows[v]) != 1:
            raise GraphFormatError(f"{path}: node {v} has several communities")
        labels.append(rows[v][0])
    return Partition(np.array(labels, dtype=np.int64))


def read_cover(path: str | os.PathLike) -> Cover:
    rows = _read_rows(path)
    return Cover([rows[v] for v in range(len(rows))])

