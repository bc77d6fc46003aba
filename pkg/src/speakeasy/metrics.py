"""Partition and cover comparison scores, and community quality scores.

Pair-counting and information-theoretic partition metrics share one sparse
contingency table. Quality scores (modularity and modularity density) score
the positive-weight part of an undirected graph.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .graph import Cover, Graph, Partition

__all__ = [
    "NodeSetMismatch",
    "ContingencyTable",
    "contingency",
    "nmi",
    "ari",
    "rand_index",
    "jaccard_index",
    "f_measure",
    "nvd",
    "modularity_q",
    "modularity_density_qds",
    "overlapping_nmi",
    "omega_index",
    "f_multi",
    "partition_report",
    "cover_report",
]


class NodeSetMismatch(ValueError):
    pass


def _check_sizes(a, b):
    if a.n != b.n:
        raise NodeSetMismatch(f"node sets differ: {a.n} vs {b.n} nodes")


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Non-zero cells of the overlap matrix between two partitions."""

    rows: np.ndarray
    cols: np.ndarray
    cells: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    n: int

    @cached_property
    def counts(self) -> np.ndarray:
        mat = np.zeros((self.row_sums.size, self.col_sums.size), dtype=np.int64)
        mat[self.rows, self.cols] = self.cells
        return mat


def contingency(P: Partition, Q: Partition) -> ContingencyTable:
    _check_sizes(P, Q)
    a, b = P.labels, Q.labels
    kb = max(Q.num_communities, 1)
    keys, cells = np.unique(a * kb + b, return_counts=True)
    return ContingencyTable(
        rows=keys // kb,
        cols=keys % kb,
        cells=cells,
        row_sums=P.sizes(),
        col_sums=Q.sizes(),
        n=P.n,
    )


def _comb2(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(x * (x - 1.0) / 2.0))


def _pair_counts(t: ContingencyTable):
    both = _comb2(t.cells)
    in_p = _comb2(t.row_sums)
    in_q = _comb2(t.col_sums)
    total = t.n * (t.n - 1) / 2.0
    return both, in_p, in_q, total


def _entropy(sizes, n):
    p = sizes[sizes > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(P: Partition, Q: Partition) -> float:
    """Mutual information normalized by the arithmetic mean of the entropies."""
    t = contingency(P, Q)
    n = t.n
    if n == 0:
        raise ValueError("partitions are empty")
    h_p = _entropy(t.row_sums, n)
    h_q = _entropy(t.col_sums, n)
    if h_p + h_q == 0.0:
        return 1.0
    if t.cells.size == t.row_sums.size == t.col_sums.size:
        # one-to-one community correspondence; avoid rounding below 1
        return 1.0
    c = t.cells.astype(np.float64)
    mi = np.sum(c / n * np.log(n * c / (t.row_sums[t.rows] * t.col_sums[t.cols])))
    return float(min(max(2.0 * mi / (h_p + h_q), 0.0), 1.0))


def ari(P: Partition, Q: Partition) -> float:
    """Hubert-Arabie adjusted Rand index; can be slightly negative."""
    both, in_p, in_q, total = _pair_counts(contingency(P, Q))
    if total == 0:
        return 1.0
    expected = in_p * in_q / total
    ceiling = (in_p + in_q) / 2.0
    if ceiling == expected:
        return 1.0
    return float((both - expected) / (ceiling - expected))


def rand_index(P: Partition, Q: Partition) -> float:
    both, in_p, in_q, total = _pair_counts(contingency(P, Q))
    if total == 0:
        return 1.0
    return float((total + 2.0 * both - in_p - in_q) / total)


def jaccard_index(P: Partition, Q: Partition) -> float:
    """Pairs co-clustered in both, over pairs co-clustered in either."""
    both, in_p, in_q, _ = _pair_counts(contingency(P, Q))
    union = in_p + in_q - both
    return 1.0 if union == 0 else float(both / union)


def _best_match_f(rows, cols, cells, row_sums, col_sums, n):
    f = 2.0 * cells / (row_sums[rows] + col_sums[cols])
    best = np.zeros(row_sums.size)
    np.maximum.at(best, rows, f)
    return float(np.dot(row_sums, best) / n)


def f_measure(P: Partition, Q: Partition) -> float:
    """Best-match F-measure, averaged over both directions.

    Each community is scored by its best F1 against the other partition and
    weighted by its share of the nodes.
    """
    t = contingency(P, Q)
    if t.n == 0:
        raise ValueError("partitions are empty")
    fwd = _best_match_f(t.rows, t.cols, t.cells, t.row_sums, t.col_sums, t.n)
    back = _best_match_f(t.cols, t.rows, t.cells, t.col_sums, t.row_sums, t.n)
    return 0.5 * (fwd + back)


def nvd(P: Partition, Q: Partition) -> float:
    """Normalized van Dongen distance; 0 for identical partitions."""
    t = contingency(P, Q)
    if t.n == 0:
        raise ValueError("partitions are empty")
    row_max = np.zeros(t.row_sums.size, dtype=np.int64)
    col_max = np.zeros(t.col_sums.size, dtype=np.int64)
    np.maximum.at(row_max, t.rows, t.cells)
    np.maximum.at(col_max, t.cols, t.cells)
    return float(1.0 - (row_max.sum() + col_max.sum()) / (2.0 * t.n))


# ---------------------------------------------------------------------------
# quality scores
# ---------------------------------------------------------------------------


def _positive_edges(g: Graph, P: Partition):
    if g.directed:
        raise ValueError("quality scores need an undirected graph")
    _check_sizes(g, P)
    keep = g.weight > 0
    src, dst, w = g.src[keep], g.dst[keep], g.weight[keep]
    m = float(w.sum())
    if m <= 0:
        raise ValueError("modularity undefined: graph has no positive edge weight")
    return P.labels[src], P.labels[dst], w, m


def modularity_q(g: Graph, P: Partition) -> float:
    """Newman modularity of ``P`` on the positive-weight part of ``g``."""
    cu, cv, w, m = _positive_edges(g, P)
    k = P.num_communities
    intra = np.bincount(cu[cu == cv], weights=w[cu == cv], minlength=k)
    degree = np.bincount(cu, weights=w, minlength=k) + np.bincount(cv, weights=w, minlength=k)
    return float(np.sum(intra / m - (degree / (2.0 * m)) ** 2))


def modularity_density_qds(g: Graph, P: Partition) -> float:
    """Modularity density with the split penalty.

    For community ``c`` with ``n_c`` nodes, internal weight ``e_c``, boundary
    weight ``o_c`` and density ``d_c = 2 e_c / (n_c (n_c - 1))``::

        e_c/m * d_c - ((2 e_c + o_c) / 2m * d_c)**2
            - sum_{c' != c} e_cc' / 2m * e_cc' / (n_c n_c')

    Singletons have density 0.
    """
    cu, cv, w, m = _positive_edges(g, P)
    k = P.num_communities
    size = P.sizes().astype(np.float64)
    inside = cu == cv
    e_in = np.bincount(cu[inside], weights=w[inside], minlength=k)
    cross = ~inside
    e_out = np.bincount(cu[cross], weights=w[cross], minlength=k) + np.bincount(
        cv[cross], weights=w[cross], minlength=k
    )
    pairs = size * (size - 1.0)
    density = np.divide(2.0 * e_in, pairs, out=np.zeros(k), where=pairs > 0)
    # between-community weights, both orientations
    between = sp.coo_matrix(
        (np.concatenate([w[cross], w[cross]]),
         (np.concatenate([cu[cross], cv[cross]]), np.concatenate([cv[cross], cu[cross]]))),
        shape=(k, k),
    ).tocsr()
    between.sum_duplicates()
    bc = between.tocoo()
    split = np.bincount(
        bc.row,
        weights=bc.data / (2.0 * m) * bc.data / (size[bc.row] * size[bc.col]),
        minlength=k,
    )
    terms = e_in / m * density - ((2.0 * e_in + e_out) / (2.0 * m) * density) ** 2 - split
    return float(terms.sum())


# ---------------------------------------------------------------------------
# cover metrics
# ---------------------------------------------------------------------------


def _h(p):
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = -p[pos] * np.log2(p[pos])
    return out


def _nonempty_matrix(c: Cover) -> np.ndarray:
    mat = c.membership_matrix()
    return mat[:, mat.sum(axis=0) > 0]


def _conditional_norm(X: np.ndarray, Y: np.ndarray, n: int) -> float:
    """Normalized H(X|Y) averaged over the communities of X."""
    sx = X.sum(axis=0).astype(np.float64)
    sy = Y.sum(axis=0).astype(np.float64)
    inter = (X.T @ Y).astype(np.float64)
    p11 = inter / n
    p10 = (sx[:, None] - inter) / n
    p01 = (sy[None, :] - inter) / n
    p00 = 1.0 - p11 - p10 - p01
    h11, h10, h01, h00 = _h(p11), _h(p10), _h(p01), _h(np.clip(p00, 0.0, 1.0))
    hy = _h(sy / n) + _h(1.0 - sy / n)
    hx = _h(sx / n) + _h(1.0 - sx / n)
    cond = h11 + h10 + h01 + h00 - hy[None, :]
    admissible = h11 + h00 > h01 + h10
    cond = np.where(admissible, cond, np.inf).min(axis=1, initial=np.inf)
    cond = np.where(np.isfinite(cond), cond, hx)
    norm = np.divide(cond, hx, out=np.zeros_like(hx), where=hx > 0)
    return float(norm.mean()) if norm.size else 0.0


def overlapping_nmi(C1: Cover, C2: Cover) -> float:
    """Overlapping NMI of Lancichinetti, Fortunato and Kertesz.

    Does not reduce to :func:`nmi` on disjoint covers.
    """
    _check_sizes(C1, C2)
    n = C1.n
    if n == 0:
        raise ValueError("covers are empty")
    X, Y = _nonempty_matrix(C1), _nonempty_matrix(C2)
    value = 1.0 - 0.5 * (_conditional_norm(X, Y, n) + _conditional_norm(Y, X, n))
    return float(min(max(value, 0.0), 1.0))


def _shared_counts(c: Cover):
    """Upper-triangle node pairs sharing >= 1 community, with the shared count."""
    B = sp.csr_matrix(c.membership_matrix())
    S = sp.triu(B @ B.T, k=1).tocoo()
    keep = S.data > 0
    keys = S.row[keep].astype(np.int64) * c.n + S.col[keep]
    order = np.argsort(keys)
    return keys[order], S.data[keep][order].astype(np.int64)


def omega_index(C1: Cover, C2: Cover) -> float:
    """Omega index: chance-corrected agreement on per-pair shared-community counts.

    Equals the adjusted Rand index when both covers are disjoint.
    """
    _check_sizes(C1, C2)
    n = C1.n
    M = n * (n - 1) // 2
    if M == 0:
        return 1.0
    k1, v1 = _shared_counts(C1)
    k2, v2 = _shared_counts(C2)
    common, i1, i2 = np.intersect1d(k1, k2, assume_unique=True, return_indices=True)
    union = k1.size + k2.size - common.size
    agree = (M - union) + int(np.sum(v1[i1] == v2[i2]))
    t = max(int(v1.max(initial=0)), int(v2.max(initial=0))) + 1
    n1 = np.bincount(v1, minlength=t).astype(np.float64)
    n2 = np.bincount(v2, minlength=t).astype(np.float64)
    n1[0] = M - k1.size
    n2[0] = M - k2.size
    observed = agree / M
    expected = float(np.dot(n1, n2)) / (float(M) * float(M))
    if expected == 1.0:
        return 1.0
    return float((observed - expected) / (1.0 - expected))


def _best_jaccard_match(pred: Cover, truth: Cover) -> dict[int, int]:
    """Map each predicted community to the true community of highest Jaccard overlap."""
    P = pred.membership_matrix()
    T = truth.membership_matrix()
    inter = P.T @ T
    union = P.sum(axis=0)[:, None] + T.sum(axis=0)[None, :] - inter
    jac = np.divide(inter, union, out=np.zeros(inter.shape), where=union > 0)
    # argmax returns the lowest id among ties
    return {c: int(np.argmax(jac[c])) for c in range(P.shape[1]) if P[:, c].any()}


def f_multi(pred: Cover, truth: Cover) -> float:
    """F-score restricted to multi-community nodes.

    A node counts as correct when it is multi-community in both covers and
    its predicted communities, mapped through the best-Jaccard matching, are
    exactly its true communities. Precision divides by predicted
    multi-community nodes, recall by true ones. Two covers without any
    multi-community node score 1.
    """
    _check_sizes(pred, truth)
    pm, tm = pred.multi_nodes(), truth.multi_nodes()
    if not pm and not tm:
        return 1.0
    if not pm or not tm:
        return 0.0
    match = _best_jaccard_match(pred, truth)
    true_sets = truth.memberships
    correct = sum(
        1 for v in pm
        if len(true_sets[v]) >= 2
        and {match[c] for c in pred.memberships[v]} == true_sets[v]
    )
    if correct == 0:
        return 0.0
    precision = correct / len(pm)
    recall = correct / len(tm)
    return 2.0 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


def partition_report(pred: Partition, truth: Partition, graph: Graph | None = None) -> dict:
    """Flat metric dictionary for two partitions; ``q``/``qds`` need ``graph``."""
    report = {
        "nmi": nmi(pred, truth),
        "ari": ari(pred, truth),
        "ri": rand_index(pred, truth),
        "ji": jaccard_index(pred, truth),
        "f": f_measure(pred, truth),
        "nvd": nvd(pred, truth),
    }
    if graph is not None:
        report["q"] = modularity_q(graph, pred)
        report["qds"] = modularity_density_qds(graph, pred)
    return report


def cover_report(pred: Cover, truth: Cover) -> dict:
    return {
        "onmi": overlapping_nmi(pred, truth),
        "omega": omega_index(pred, truth),
        "fmulti": f_multi(pred, truth),
    }
