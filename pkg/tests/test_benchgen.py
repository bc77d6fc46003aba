import numpy as np
import pytest
from scipy.integrate import quad

from speakeasy.benchgen import (
    BenchmarkSpec,
    InfeasibleSpecError,
    generate,
    realized_mixing,
    solve_min_degree,
    summary,
)
from speakeasy.consensus import consensus
from speakeasy.graph import Cover, Graph
from speakeasy.labelprop import EngineParams
from speakeasy.metrics import nmi


def _degrees(g):
    return np.bincount(np.concatenate([g.src, g.dst]), minlength=g.n)


# ---------------------------------------------------------------------------
# spec validation and power laws
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kw", [{"mu": -0.1}, {"mu": 1.5}, {"om": 0}, {"n": 1},
                                {"overlap_fraction": 2.0},
                                {"min_community_size": 50, "max_community_size": 20}])
def test_spec_rejects_bad_values(kw):
    with pytest.raises(ValueError):
        BenchmarkSpec(**kw)


def test_spec_rejects_max_degree_at_n():
    with pytest.raises(InfeasibleSpecError):
        BenchmarkSpec(n=50, max_degree=50)


@pytest.mark.parametrize("avg, kmax, gamma", [(15, 50, 2.0), (20, 50, 2.5), (10, 100, 3.0), (30, 60, 1.0)])
def test_min_degree_gives_requested_mean(avg, kmax, gamma):
    kmin = solve_min_degree(avg, kmax, gamma)
    num, _ = quad(lambda x: x ** (1 - gamma), kmin, kmax)
    den, _ = quad(lambda x: x ** -gamma, kmin, kmax)
    assert num / den == pytest.approx(avg, rel=1e-7)
    assert 1.0 <= kmin < kmax


def test_min_degree_unreachable_mean():
    with pytest.raises(InfeasibleSpecError):
        solve_min_degree(1.5, 1000, 2.0)


# ---------------------------------------------------------------------------
# generated graphs
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def default_instances():
    return [generate(BenchmarkSpec(mu=0.3, seed=s)) for s in range(3)]


def test_realized_mixing_and_degree(default_instances):
    for g, truth in default_instances:
        assert abs(realized_mixing(g, truth) - 0.3) <= 0.02
        assert abs(_degrees(g).mean() - 15.0) <= 1.5
        assert _degrees(g).max() <= 50


def test_simple_graph(default_instances):
    for g, _ in default_instances:
        assert np.all(g.src != g.dst)
        keys = set(zip(np.minimum(g.src, g.dst).tolist(), np.maximum(g.src, g.dst).tolist()))
        assert len(keys) == g.num_edges


def test_community_sizes_within_bounds(default_instances):
    for _, truth in default_instances:
        sizes = np.bincount([c for m in truth.memberships for c in m])
        assert sizes.sum() == 1000
        assert sizes.min() >= 10 and sizes.max() <= 100
        assert truth.is_disjoint()


def test_zero_mixing_has_no_external_edges():
    g, truth = generate(BenchmarkSpec(mu=0.0, seed=4))
    assert realized_mixing(g, truth) == 0.0


def test_overlap_counts():
    spec = BenchmarkSpec(mu=0.1, avg_degree=20, overlap_fraction=0.1, om=3, seed=1)
    g, truth = generate(spec)
    counts = np.array([len(m) for m in truth.memberships])
    assert (counts == 3).sum() == 100
    assert set(np.unique(counts).tolist()) == {1, 3}
    assert summary(g, truth)["num_overlapping"] == 100


def test_generation_deterministic():
    spec = BenchmarkSpec(n=300, mu=0.2, seed=11)
    g1, t1 = generate(spec)
    g2, t2 = generate(spec)
    assert g1.edges == g2.edges and t1 == t2
    g3, _ = generate(BenchmarkSpec(n=300, mu=0.2, seed=12))
    assert g3.edges != g1.edges


def test_too_small_communities_infeasible():
    with pytest.raises(InfeasibleSpecError):
        generate(BenchmarkSpec(mu=0.0, max_degree=50, min_community_size=10, max_community_size=20))


def test_realized_mixing_trivial():
    truth = Cover([{0}, {0}, {1}, {1}])
    assert realized_mixing(Graph(4, [], []), truth) == 0.0
    assert realized_mixing(Graph(4, [0, 2], [1, 3]), truth) == 0.0
    assert realized_mixing(Graph(4, [0, 1], [2, 3]), truth) == 1.0
    assert realized_mixing(Graph(4, [0, 0], [1, 2]), truth) == 0.5
    # a shared membership of an overlapping node counts as internal
    assert realized_mixing(Graph(3, [0], [1]), Cover([{0}, {0, 1}, {1}])) == 0.0


def test_summary_fields():
    g, truth = generate(BenchmarkSpec(n=200, mu=0.2, seed=0))
    s = summary(g, truth)
    assert s["num_edges"] == g.num_edges
    assert s["mean_degree"] == pytest.approx(2 * g.num_edges / 200)
    assert s["num_communities"] == truth.num_communities


@pytest.mark.slow
def test_zero_mixing_recovered_exactly():
    hits = []
    for s in range(20):
        g, truth = generate(BenchmarkSpec(mu=0.0, seed=s))
        rep, _, _ = consensus(g, EngineParams(seed=s), R=5)
        hits.append(nmi(rep, truth.to_partition()) == pytest.approx(1.0, abs=1e-12))
    assert np.mean(hits) >= 0.95
