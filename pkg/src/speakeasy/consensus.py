"""Replicate runs and the summaries built from them.

A fixed master seed expands into one seed per replicate, so an ensemble is
reproducible regardless of how its runs are scheduled. From an ensemble we
take the representative partition (highest mean ARI to the other members),
the node co-occurrence matrix, and an overlapping cover that adds a node to
every representative community it co-occurs with often enough.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .graph import Cover, Graph, GraphFormatError, Partition, induced_subgraph
from .labelprop import EngineParams, run_many
from .metrics import ari

__all__ = [
    "PartitionEnsemble",
    "CoOccurrenceMatrix",
    "derive_seed",
    "replicate_seeds",
    "replicate",
    "representative_partition",
    "co_occurrence",
    "multi_community_nodes",
    "consensus",
    "co_occurrence_labels",
    "community_affinity",
    "pairwise_ari",
    "subcluster",
    "write_cooccurrence",
    "read_cooccurrence",
]

DEFAULT_REPLICATES = 100
DEFAULT_MAX_COMMUNITIES = 5


def derive_seed(master: int, *path: int) -> int:
    """Deterministic child seed for ``master`` at spawn position ``path``."""
    ss = np.random.SeedSequence(entropy=int(master) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(path))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def replicate_seeds(master: int, R: int) -> list[int]:
    return [derive_seed(master, i) for i in range(R)]


@dataclass(frozen=True, eq=False)
class PartitionEnsemble:
    partitions: tuple[Partition, ...]
    seeds: tuple[int, ...]

    def __post_init__(self):
        if not self.partitions:
            raise ValueError("an ensemble needs at least one partition")
        n = self.partitions[0].n
        if any(p.n != n for p in self.partitions):
            raise ValueError("ensemble partitions cover different node sets")

    @property
    def R(self) -> int:
        return len(self.partitions)

    @property
    def n(self) -> int:
        return self.partitions[0].n

    def label_matrix(self) -> np.ndarray:
        return np.stack([p.labels for p in self.partitions])


@dataclass(frozen=True, eq=False)
class CoOccurrenceMatrix:
    """``counts[i, j]`` replicates in which nodes ``i`` and ``j`` shared a community."""

    counts: np.ndarray
    R: int

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    def fraction(self) -> np.ndarray:
        return self.counts / float(self.R)


def replicate(g: Graph, p: EngineParams, R: int, jobs: int = 1) -> PartitionEnsemble:
    """``R`` independent runs seeded from ``p.seed``; order follows replicate index."""
    if R < 1:
        raise ValueError("R must be >= 1")
    seeds = replicate_seeds(p.seed, R)
    labels = run_many(g, p, seeds, jobs=jobs)
    return PartitionEnsemble(tuple(Partition(row) for row in labels), tuple(seeds))


def pairwise_ari(e: PartitionEnsemble) -> np.ndarray:
    R = e.R
    mat = np.ones((R, R))
    for i in range(R):
        for j in range(i + 1, R):
            mat[i, j] = mat[j, i] = ari(e.partitions[i], e.partitions[j])
    return mat


def representative_partition(e: PartitionEnsemble) -> Partition:
    """Member with the highest mean ARI to all other members (lowest index on ties)."""
    if e.R == 1:
        return e.partitions[0]
    mat = pairwise_ari(e)
    np.fill_diagonal(mat, 0.0)
    score = mat.sum(axis=1)
    # summation order differs per row; treat ulp-level gaps as ties
    best = np.flatnonzero(score >= score.max() - 1e-9)[0]
    return e.partitions[int(best)]


def co_occurrence_labels(labels: np.ndarray) -> np.ndarray:
    """Co-occurrence counts from an ``(R, n)`` label array."""
    labels = np.asarray(labels)
    n = labels.shape[1]
    counts = np.zeros((n, n), dtype=np.int64)
    for row in labels:
        counts += row[:, None] == row[None, :]
    return counts


def co_occurrence(e: PartitionEnsemble) -> CoOccurrenceMatrix:
    return CoOccurrenceMatrix(co_occurrence_labels(e.label_matrix()), e.R)


def community_affinity(c: CoOccurrenceMatrix, rep: Partition) -> np.ndarray:
    """``(n, k)`` mean co-occurrence fraction of each node with each community.

    The node itself is left out of its own community's average; a node alone
    in its community gets affinity 0 there.
    """
    if c.n != rep.n:
        raise ValueError("co-occurrence matrix and partition cover different nodes")
    k = rep.num_communities
    frac = c.fraction()
    Z = np.zeros((rep.n, k))
    Z[np.arange(rep.n), rep.labels] = 1.0
    sums = frac @ Z
    sizes = np.tile(rep.sizes().astype(np.float64), (rep.n, 1))
    own = (np.arange(rep.n), rep.labels)
    sums[own] -= np.diagonal(frac)
    sizes[own] -= 1.0
    return np.divide(sums, sizes, out=np.zeros_like(sums), where=sizes > 0)


def multi_community_nodes(c: CoOccurrenceMatrix, rep: Partition,
                          max_communities: int = DEFAULT_MAX_COMMUNITIES) -> Cover:
    """Cover with each node in its own community plus every community whose
    mean co-occurrence with it reaches ``1 / max_communities``."""
    if max_communities < 1:
        raise ValueError("max_communities must be >= 1")
    threshold = 1.0 / max_communities
    aff = community_affinity(c, rep)
    # float slack so that e.g. 20/100 counts as reaching 0.2
    member = aff >= threshold - 1e-12
    member[np.arange(rep.n), rep.labels] = True
    return Cover([np.flatnonzero(row).tolist() for row in member])


def consensus(g: Graph, p: EngineParams, R: int = DEFAULT_REPLICATES, jobs: int = 1):
    """Representative partition, co-occurrence matrix and ensemble in one call."""
    e = replicate(g, p, R, jobs=jobs)
    return representative_partition(e), co_occurrence(e), e


def subcluster(g: Graph, p: EngineParams, depth: int, R: int = DEFAULT_REPLICATES,
               jobs: int = 1) -> list[Partition]:
    """Partitions from repeated consensus clustering of each community.

    Level 1 clusters the whole graph. Each later level re-clusters every
    community of two or more nodes on its induced subgraph and replaces it by
    the sub-communities found.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    levels = [representative_partition(replicate(g, p, R, jobs=jobs))]
    for level in range(1, depth):
        parent = levels[-1]
        labels = np.empty(g.n, dtype=np.int64)
        next_id = 0
        for cid, nodes in enumerate(parent.communities()):
            if nodes.size < 2:
                labels[nodes] = next_id
                next_id += 1
                continue
            sub, remap = induced_subgraph(g, nodes)
            sub_p = p.with_seed(derive_seed(p.seed, level, cid))
            rep = representative_partition(replicate(sub, sub_p, R, jobs=jobs))
            local = np.array([remap[int(v)] for v in nodes])
            labels[nodes] = next_id + rep.labels[local]
            next_id += rep.num_communities
        levels.append(Partition(labels))
    return levels


def write_cooccurrence(c: CoOccurrenceMatrix, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# R={c.R}\n")
        for row in c.counts:
            fh.write("\t".join(str(int(x)) for x in row) + "\n")


def read_cooccurrence(path: str | os.PathLike) -> CoOccurrenceMatrix:
    R = None
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\r\n")
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                if key.strip() == "R":
                    R = int(val)
                continue
            if not line.strip():
                continue
            try:
                rows.append([int(x) for x in line.split("\t")])
            except ValueError:
                raise GraphFormatError(f"{path}:{lineno}: non-integer count") from None
    if R is None:
        raise GraphFormatError(f"{path}: missing '# R=<replicates>' header")
    counts = np.array(rows, dtype=np.int64).reshape(len(rows), -1)
    if counts.shape[0] != counts.shape[1]:
        raise GraphFormatError(f"{path}: co-occurrence matrix is not square")
    return CoOccurrenceMatrix(counts, R)
