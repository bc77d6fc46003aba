"""Replicate runs, pick a representative partition and find bridge nodes.

A node tied equally to two cliques lands in one of them in any single run.
Across replicates it co-occurs with both, so the cover lists it twice.
"""

import itertools

import numpy as np

from speakeasy import EngineParams, Graph, co_occurrence, multi_community_nodes, replicate, representative_partition
from speakeasy.consensus import subcluster

k = 8
pairs = list(itertools.combinations(range(k), 2)) + list(itertools.combinations(range(k, 2 * k), 2))
bridge = 2 * k
pairs += [(bridge, v) for v in range(2 * k)]
g = Graph(2 * k + 1, [u for u, _ in pairs], [v for _, v in pairs])

ens = replicate(g, EngineParams(seed=1), R=100)
rep = representative_partition(ens)
co = co_occurrence(ens)
print("representative:", rep.labels.tolist())
print("bridge co-occurs with clique A", co.counts[bridge, :k].mean() / co.R,
      "and clique B", co.counts[bridge, k:2 * k].mean() / co.R)

cover = multi_community_nodes(co, rep, max_communities=5)
print("multi-community nodes:", cover.multi_nodes(), "->", sorted(cover.memberships[bridge]))

# two levels of structure: pairs of dense cliques
rng = np.random.default_rng(0)
blocks = [range(c * 20, (c + 1) * 20) for c in range(4)]
pairs = [p for b in blocks for p in itertools.combinations(b, 2)]
for a, b in ((0, 1), (2, 3)):
    pairs += [(u, v) for u in blocks[a] for v in blocks[b] if rng.random() < 0.7]
g = Graph(80, [u for u, _ in pairs], [v for _, v in pairs])
levels = subcluster(g, EngineParams(seed=0), depth=2, R=20)
print("level sizes:", [lv.sizes().tolist() for lv in levels])
