import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import clique_edges
from speakeasy.graph import Cover, Graph, Partition
from speakeasy.metrics import (
    NodeSetMismatch,
    ari,
    contingency,
    cover_report,
    f_measure,
    f_multi,
    jaccard_index,
    modularity_density_qds,
    modularity_q,
    nmi,
    nvd,
    omega_index,
    overlapping_nmi,
    partition_report,
    rand_index,
)
from strategies import cover_pairs, label_lists, partition_pairs, small_graphs, to_arrays

PAIR_METRICS = [
    (nmi, oracles.nmi),
    (ari, oracles.ari),
    (rand_index, oracles.rand_index),
    (jaccard_index, oracles.jaccard),
    (f_measure, oracles.f_measure),
    (nvd, oracles.nvd),
]


def _set_partitions(n):
    """Every partition of ``range(n)`` as a restricted growth string."""
    def grow(prefix, k):
        if len(prefix) == n:
            yield list(prefix)
            return
        for c in range(k + 1):
            yield from grow(prefix + [c], max(k, c + 1))
    yield from grow([0], 1)


# ---------------------------------------------------------------------------
# contingency
# ---------------------------------------------------------------------------


def test_contingency_identical_is_diagonal():
    p = Partition([0, 0, 1, 2, 2])
    assert np.array_equal(contingency(p, p).counts, np.diag([2, 1, 2]))


def test_contingency_singletons_vs_one():
    t = contingency(Partition(range(4)), Partition([0] * 4))
    assert t.counts.tolist() == [[1], [1], [1], [1]]


@given(partition_pairs(max_n=12))
def test_contingency_matches_recount(pair):
    a, b = pair
    P, Q = Partition(a), Partition(b)
    t = contingency(P, Q)
    naive = oracles.contingency(P.labels.tolist(), Q.labels.tolist())
    assert {(int(r), int(c)): int(k) for r, c, k in zip(t.rows, t.cols, t.cells)} == naive
    assert t.cells.sum() == t.n == len(a)
    assert t.row_sums.tolist() == t.counts.sum(axis=1).tolist()


def test_mismatched_sizes():
    with pytest.raises(NodeSetMismatch):
        nmi(Partition([0, 1]), Partition([0, 0, 1]))


# ---------------------------------------------------------------------------
# partition metrics
# ---------------------------------------------------------------------------


def test_identical_partitions():
    p = Partition([0, 0, 1, 1, 2])
    assert partition_report(p, p) == {"nmi": 1.0, "ari": 1.0, "ri": 1.0, "ji": 1.0, "f": 1.0, "nvd": 0.0}


def test_nmi_against_single_community_is_zero():
    assert nmi(Partition([0, 1, 1, 2]), Partition([0, 0, 0, 0])) == 0.0


@pytest.mark.parametrize("n", range(1, 7))
def test_metrics_exhaustive_against_oracle(n):
    parts = list(_set_partitions(n))
    for a, b in itertools.product(parts, repeat=2):
        P, Q = Partition(a), Partition(b)
        for fn, ref in PAIR_METRICS:
            assert fn(P, Q) == pytest.approx(ref(a, b), abs=1e-12), (fn.__name__, a, b)


@given(partition_pairs(min_n=7, max_n=10, max_k=6))
def test_metrics_random_against_oracle(pair):
    a, b = pair
    for fn, ref in PAIR_METRICS:
        assert fn(Partition(a), Partition(b)) == pytest.approx(ref(a, b), abs=1e-12)


@given(partition_pairs(max_n=12), st.randoms(use_true_random=False))
def test_metric_invariances(pair, rnd):
    a, b = pair
    n = len(a)
    perm = list(range(n))
    rnd.shuffle(perm)
    relabel = {c: c + 17 for c in set(a)}
    P, Q = Partition(a), Partition(b)
    P2 = Partition([relabel[c] for c in a])
    Pp, Qp = Partition([a[i] for i in perm]), Partition([b[i] for i in perm])
    for fn, _ in PAIR_METRICS:
        v = fn(P, Q)
        assert fn(P2, Q) == pytest.approx(v, abs=1e-12)
        assert fn(Pp, Qp) == pytest.approx(v, abs=1e-12)
        if fn is not f_measure:
            assert fn(Q, P) == pytest.approx(v, abs=1e-12)


@given(label_lists(max_n=15))
def test_self_comparison(a):
    P = Partition(a)
    assert ari(P, P) == 1.0 and nmi(P, P) == 1.0 and nvd(P, P) == 0.0


@given(partition_pairs(max_n=12))
def test_ranges(pair):
    P, Q = Partition(pair[0]), Partition(pair[1])
    for fn in (nmi, rand_index, jaccard_index, f_measure, nvd):
        assert -1e-12 <= fn(P, Q) <= 1.0 + 1e-12
    assert ari(P, Q) <= 1.0 + 1e-12


# ---------------------------------------------------------------------------
# modularity
# ---------------------------------------------------------------------------


def _two_cliques(k=4):
    return Graph(2 * k, *zip(*(clique_edges(range(k)) + clique_edges(range(k, 2 * k)))))


def test_q_single_community_zero():
    g = _two_cliques()
    assert modularity_q(g, Partition([0] * 8)) == pytest.approx(0.0, abs=1e-15)


def test_q_two_disconnected_cliques_half():
    assert modularity_q(_two_cliques(), Partition([0] * 4 + [1] * 4)) == pytest.approx(0.5, abs=1e-15)


def test_q_singletons_negative():
    g = _two_cliques()
    # every node has degree 3, 2m = 24
    assert modularity_q(g, Partition(range(8))) == pytest.approx(-8 * (3 / 24) ** 2, abs=1e-15)


def test_qds_two_disconnected_cliques():
    # per clique: e/m * 1 - (2e/2m)**2 = 1/2 - 1/4
    assert modularity_density_qds(_two_cliques(), Partition([0] * 4 + [1] * 4)) == pytest.approx(0.5, abs=1e-15)


def test_qds_clique_single_community_zero():
    g = Graph(5, *zip(*clique_edges(range(5))))
    assert modularity_density_qds(g, Partition([0] * 5)) == pytest.approx(0.0, abs=1e-15)


def test_qds_singletons_non_positive():
    g = _two_cliques()
    assert modularity_density_qds(g, Partition(range(8))) <= 0.0


def test_quality_errors():
    with pytest.raises(ValueError, match="modularity undefined"):
        modularity_q(Graph(3, [], []), Partition([0, 0, 1]))
    with pytest.raises(ValueError, match="modularity undefined"):
        modularity_q(Graph(2, [0], [1], [-1.0]), Partition([0, 1]))
    with pytest.raises(ValueError):
        modularity_q(Graph(2, [0], [1], directed=True), Partition([0, 1]))


@given(small_graphs(signed=True), st.data())
def test_quality_against_oracle(graph, data):
    n, edges = graph
    if not any(w > 0 for _, _, w in edges):
        return
    labels = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    g = Graph(n, *to_arrays(edges))
    P = Partition(labels)
    dense = P.labels.tolist()
    assert modularity_q(g, P) == pytest.approx(oracles.modularity(n, edges, dense), abs=1e-12)
    assert modularity_density_qds(g, P) == pytest.approx(oracles.modularity_density(n, edges, dense), abs=1e-12)
    assert modularity_q(g, P) <= 1.0 and modularity_density_qds(g, P) <= 1.0


@given(small_graphs(), st.data(), st.floats(0.01, 100.0))
def test_q_scale_invariant(graph, data, c):
    n, edges = graph
    labels = data.draw(st.lists(st.integers(0, 3), min_size=n, max_size=n))
    src, dst, w = to_arrays(edges)
    P = Partition(labels)
    assert modularity_q(Graph(n, src, dst, c * w), P) == pytest.approx(modularity_q(Graph(n, src, dst, w), P), abs=1e-12)


# ---------------------------------------------------------------------------
# covers
# ---------------------------------------------------------------------------


def test_identical_covers():
    c = Cover([{0}, {0, 1}, {1}, {1, 2}, {2}])
    assert cover_report(c, c) == {"onmi": 1.0, "omega": 1.0, "fmulti": 1.0}


@given(cover_pairs())
def test_onmi_against_oracle(pair):
    m1, m2 = pair
    assert overlapping_nmi(Cover(m1), Cover(m2)) == pytest.approx(oracles.onmi(m1, m2), abs=1e-12)


@given(cover_pairs(max_n=10))
def test_omega_against_oracle(pair):
    m1, m2 = pair
    assert omega_index(Cover(m1), Cover(m2)) == pytest.approx(oracles.omega(m1, m2), abs=1e-12)


@settings(max_examples=1000)
@given(partition_pairs(min_n=2, max_n=15, max_k=5))
def test_omega_equals_ari_on_disjoint_covers(pair):
    P, Q = Partition(pair[0]), Partition(pair[1])
    assert omega_index(Cover.from_partition(P), Cover.from_partition(Q)) == pytest.approx(ari(P, Q), abs=1e-12)


def test_onmi_differs_from_disjoint_nmi():
    P, Q = Partition([0, 0, 0, 1, 1, 1]), Partition([0, 0, 1, 1, 1, 1])
    assert overlapping_nmi(Cover.from_partition(P), Cover.from_partition(Q)) != pytest.approx(nmi(P, Q), abs=1e-6)


def test_f_multi_no_predicted_multi_nodes():
    truth = Cover([{0}, {0, 1}, {1}])
    assert f_multi(Cover([{0}, {0}, {1}]), truth) == 0.0


def test_f_multi_hand_example():
    # communities A = 0..4, B = 5..9; truth bridges 4 and 5 (A and B), 10 and 11 sit in C
    truth = [{0}] * 4 + [{0, 1}, {0, 1}] + [{1}] * 4 + [{2}, {2}]
    # prediction: node 4 correct, node 10 wrongly bridged, node 5 missed
    pred = [{0}] * 4 + [{0, 1}, {1}] + [{1}] * 4 + [{2, 1}, {2}]
    precision, recall = 1 / 2, 1 / 2
    assert f_multi(Cover(pred), Cover(truth)) == pytest.approx(2 * precision * recall / (precision + recall))


def test_f_multi_uses_matching_not_raw_ids():
    truth = Cover([{0}, {0, 1}, {1}])
    pred = Cover([{5}, {5, 7}, {7}])
    assert f_multi(pred, truth) == 1.0
