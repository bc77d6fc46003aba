"""Generate planted-community graphs and check how well clustering recovers them.

Raising the mixing parameter mu sends more of each node's edges outside its
community; recovery stays near perfect at low mu and degrades as it grows.
"""

from speakeasy import BenchmarkSpec, EngineParams, generate
from speakeasy.benchgen import summary
from speakeasy.consensus import consensus
from speakeasy.metrics import nmi, overlapping_nmi
from speakeasy.consensus import multi_community_nodes

for mu in (0.1, 0.3, 0.5, 0.7):
    g, truth = generate(BenchmarkSpec(n=1000, mu=mu, seed=0))
    rep, _, _ = consensus(g, EngineParams(seed=0), R=10)
    s = summary(g, truth)
    print(f"mu={mu}: realized {s['realized_mu']:.3f}, {s['num_communities']} communities, "
          f"NMI {nmi(rep, truth.to_partition()):.3f}")

# overlapping nodes: 10% of nodes sit in two communities
g, truth = generate(BenchmarkSpec(n=1000, avg_degree=20, mu=0.1, overlap_fraction=0.1, om=2, seed=0))
rep, co, _ = consensus(g, EngineParams(seed=0), R=50)
cover = multi_community_nodes(co, rep)
print(f"overlap: {len(truth.multi_nodes())} planted bridges, {len(cover.multi_nodes())} detected, "
      f"oNMI {overlapping_nmi(cover, truth):.3f}")
