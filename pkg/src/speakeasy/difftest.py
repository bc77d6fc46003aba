"""Permutation test for changes in community stability between two cohorts.

Each cohort is a set of per-subject connectivity matrices. A cohort is
clustered by averaging its matrices and running replicate label propagation
on the result. Clusters of the first cohort's representative partition serve
as the reference frame. For each of them we compare mean within-cluster
co-occurrence between the cohorts against a null built by reshuffling
subjects between pseudo-cohorts of the original sizes.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import jsonschema
import numpy as np

from .consensus import (
    CoOccurrenceMatrix,
    co_occurrence_labels,
    derive_seed,
    replicate_seeds,
    representative_partition,
    PartitionEnsemble,
)
from .graph import Partition, graph_from_array, read_dense_matrix
from .labelprop import EngineParams, run_many
from .metrics import nmi

__all__ = [
    "CohortData",
    "ClusterChange",
    "DiffReport",
    "ManifestError",
    "cohort_cooccurrence",
    "cluster_stat",
    "permutation_test",
    "load_manifest",
    "default_null_replicates",
]

DEFAULT_PERMUTATIONS = 1000
MIN_NULL_REPLICATES = 20

MANIFEST_SCHEMA = {
    "type": "object",
    "required": ["cohorts"],
    "properties": {
        "cohorts": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "items": {
                "type": "object",
                "required": ["name", "subjects"],
                "properties": {
                    "name": {"type": "string", "minLength": 1},
                    "subjects": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "string", "minLength": 1},
                    },
                },
            },
        }
    },
}


class ManifestError(ValueError):
    """Manifest JSON does not match the expected schema."""


@dataclass(frozen=True, eq=False)
class CohortData:
    subjects: tuple[np.ndarray, ...]
    label: str = "cohort"
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        subjects = tuple(np.asarray(s, dtype=np.float64) for s in self.subjects)
        if not subjects:
            raise ValueError(f"cohort {self.label!r} has no subjects")
        shape = subjects[0].shape
        if len(shape) != 2 or shape[0] != shape[1]:
            raise ValueError(f"cohort {self.label!r}: subject matrices must be square")
        for i, s in enumerate(subjects):
            if s.shape != shape:
                raise ValueError(
                    f"cohort {self.label!r}: subject {i} has shape {s.shape}, expected {shape}"
                )
        object.__setattr__(self, "subjects", subjects)

    @property
    def n(self) -> int:
        return self.subjects[0].shape[0]

    def __len__(self):
        return len(self.subjects)

    def mean_matrix(self) -> np.ndarray:
        return np.mean(np.stack(self.subjects), axis=0)


def _mean_graph(mats: Sequence[np.ndarray]):
    mean = np.mean(np.stack(mats), axis=0)
    # averaging keeps symmetry only up to rounding of asymmetric inputs
    return graph_from_array((mean + mean.T) / 2.0, zero_diagonal=True)


def _ensemble_labels(mats, p: EngineParams, R: int, jobs: int) -> np.ndarray:
    return run_many(_mean_graph(mats), p, replicate_seeds(p.seed, R), jobs=jobs)


def cohort_cooccurrence(c: CohortData, p: EngineParams, R: int,
                        jobs: int = 1) -> tuple[Partition, CoOccurrenceMatrix]:
    """Cluster the cohort-average matrix ``R`` times."""
    labels = _ensemble_labels(c.subjects, p, R, jobs)
    parts = tuple(Partition(row) for row in labels)
    rep = representative_partition(PartitionEnsemble(parts, tuple(replicate_seeds(p.seed, R))))
    return rep, CoOccurrenceMatrix(co_occurrence_labels(labels), R)


def _block_means(counts: np.ndarray, R: int, ref: Partition) -> np.ndarray:
    """Mean co-occurrence fraction within (diagonal) and between reference clusters."""
    k = ref.num_communities
    Z = np.zeros((ref.n, k))
    Z[np.arange(ref.n), ref.labels] = 1.0
    sums = Z.T @ (counts / float(R)) @ Z
    size = ref.sizes().astype(np.float64)
    pairs = np.outer(size, size)
    np.fill_diagonal(pairs, size * (size - 1.0))
    within = sums.diagonal() - size  # drop the self pairs (fraction 1 each)
    np.fill_diagonal(sums, within)
    out = np.divide(sums, pairs, out=np.ones_like(sums), where=pairs > 0)
    return out


def cluster_stat(ref: Partition, co: CoOccurrenceMatrix) -> dict[int, float]:
    """Mean co-occurrence fraction over unordered node pairs of each reference cluster.

    Singleton clusters score 1.0.
    """
    if ref.n != co.n:
        raise ValueError("partition and co-occurrence matrix cover different nodes")
    diag = _block_means(co.counts, co.R, ref).diagonal()
    return {c: float(diag[c]) for c in range(ref.num_communities)}


@dataclass
class ClusterChange:
    cluster: int
    size: int
    stat_a: float
    stat_b: float
    delta: float
    null_mean: float
    null_sd: float
    p_value: float


@dataclass
class DiffReport:
    labels: tuple[str, str]
    reference: Partition
    partition_b: Partition
    clusters: list[ClusterChange]
    inter_cluster_change: np.ndarray
    partition_nmi: float
    n_permutations: int
    replicates: int
    null_replicates: int
    cooccurrence_a: CoOccurrenceMatrix = field(repr=False)
    cooccurrence_b: CoOccurrenceMatrix = field(repr=False)
    null_deltas: np.ndarray = field(repr=False)

    @property
    def p_values(self) -> np.ndarray:
        return np.array([c.p_value for c in self.clusters])

    @property
    def deltas(self) -> np.ndarray:
        return np.array([c.delta for c in self.clusters])

    def to_dict(self) -> dict:
        return {
            "cohorts": list(self.labels),
            "n_permutations": self.n_permutations,
            "replicates": self.replicates,
            "null_replicates": self.null_replicates,
            "partition_nmi": self.partition_nmi,
            "reference_partition": self.reference.labels.tolist(),
            "partition_b": self.partition_b.labels.tolist(),
            "clusters": [vars(c) for c in self.clusters],
            "inter_cluster_change": self.inter_cluster_change.tolist(),
        }


def _best_match(ref: Partition, other: Partition) -> np.ndarray:
    """For each ``ref`` community, the ``other`` community of highest Jaccard overlap."""
    inter = np.zeros((ref.num_communities, other.num_communities))
    np.add.at(inter, (ref.labels, other.labels), 1.0)
    union = ref.sizes()[:, None] + other.sizes()[None, :] - inter
    return np.argmax(inter / union, axis=1)


def default_null_replicates(R: int) -> int:
    return max(MIN_NULL_REPLICATES, R // 2)


def permutation_test(a: CohortData, b: CohortData, p: EngineParams, R: int = 100,
                     n_perm: int = DEFAULT_PERMUTATIONS, null_replicates: int | None = None,
                     jobs: int = 1) -> DiffReport:
    """Test every reference cluster for a change in within-cluster co-occurrence.

    The observed change is ``stat_b - stat_a`` on cohort ``a``'s clusters. In
    each permutation the pooled subjects are shuffled into pseudo-cohorts of
    sizes ``len(a)`` and ``len(b)``. Like cohort ``a``, pseudo-cohort ``a``
    supplies its own representative partition as the frame; the change on
    each frame cluster is credited to the reference cluster it overlaps best
    (Jaccard). Each pseudo-cohort gets ``null_replicates`` runs. Two-sided p-values use the
    add-one estimator ``(1 + #{|null| >= |observed|}) / (1 + n_perm)``.
    """
    if n_perm < 1:
        raise ValueError("n_perm must be >= 1")
    if a.n != b.n:
        raise ValueError(f"cohorts have different matrix sizes: {a.n} vs {b.n}")
    R_null = default_null_replicates(R) if null_replicates is None else int(null_replicates)
    if R_null < 1:
        raise ValueError("null_replicates must be >= 1")

    ref, co_a = cohort_cooccurrence(a, p, R, jobs)
    rep_b, co_b = cohort_cooccurrence(b, p, R, jobs)
    blocks_a = _block_means(co_a.counts, R, ref)
    blocks_b = _block_means(co_b.counts, R, ref)
    observed = blocks_b.diagonal() - blocks_a.diagonal()

    pooled = a.subjects + b.subjects
    na = len(a)
    null = np.empty((n_perm, ref.num_communities))
    for i in range(n_perm):
        order = np.random.default_rng(derive_seed(p.seed, 1, i)).permutation(len(pooled))
        round_p = p.with_seed(derive_seed(p.seed, 2, i))
        la = _ensemble_labels([pooled[j] for j in order[:na]], round_p, R_null, jobs)
        lb = _ensemble_labels([pooled[j] for j in order[na:]], round_p, R_null, jobs)
        # the pseudo-cohort a picks its own frame, as cohort a did for the observed change
        frame = representative_partition(
            PartitionEnsemble(tuple(Partition(row) for row in la), tuple(range(R_null)))
        )
        delta = (_block_means(co_occurrence_labels(lb), R_null, frame).diagonal()
                 - _block_means(co_occurrence_labels(la), R_null, frame).diagonal())
        null[i] = delta[_best_match(ref, frame)]

    exceed = np.abs(null) >= np.abs(observed)[None, :] - 1e-12
    p_values = (1.0 + exceed.sum(axis=0)) / (1.0 + n_perm)
    sizes = ref.sizes()
    clusters = [
        ClusterChange(
            cluster=c,
            size=int(sizes[c]),
            stat_a=float(blocks_a[c, c]),
            stat_b=float(blocks_b[c, c]),
            delta=float(observed[c]),
            null_mean=float(null[:, c].mean()),
            null_sd=float(null[:, c].std(ddof=1)) if n_perm > 1 else 0.0,
            p_value=float(p_values[c]),
        )
        for c in range(ref.num_communities)
    ]
    return DiffReport(
        labels=(a.label, b.label),
        reference=ref,
        partition_b=rep_b,
        clusters=clusters,
        inter_cluster_change=blocks_b - blocks_a,
        partition_nmi=nmi(ref, rep_b),
        n_permutations=n_perm,
        replicates=R,
        null_replicates=R_null,
        cooccurrence_a=co_a,
        cooccurrence_b=co_b,
        null_deltas=null,
    )


def load_manifest(path: str | os.PathLike) -> tuple[CohortData, CohortData]:
    """Read a two-cohort manifest; subject paths resolve relative to the manifest."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON: {exc}") from None
    err = jsonschema.exceptions.best_match(
        jsonschema.Draft202012Validator(MANIFEST_SCHEMA).iter_errors(doc)
    )
    if err is not None:
        raise ManifestError(f"{path}: {err.json_path}: {err.message}")
    cohorts = []
    for entry in doc["cohorts"]:
        mats, names = [], None
        for rel in entry["subjects"]:
            sub = Path(rel)
            if not sub.is_absolute():
                sub = path.parent / sub
            mat, names = read_dense_matrix(sub)
            mats.append(mat)
        cohorts.append(CohortData(tuple(mats), label=entry["name"],
                                  names=None if names is None else tuple(names)))
    return cohorts[0], cohorts[1]
