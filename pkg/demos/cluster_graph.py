"""Cluster a small graph with one label-propagation run.

Two 6-cliques share a single edge. One run with the default engine settings
recovers them, and a second run with the same seed repeats it exactly.
"""

import itertools

from speakeasy import EngineParams, Graph, run, run_labels

pairs = list(itertools.combinations(range(6), 2)) + list(itertools.combinations(range(6, 12), 2))
pairs.append((5, 6))
g = Graph(12, [u for u, _ in pairs], [v for _, v in pairs])

p = EngineParams(seed=7)
part = run(g, p)
print("communities:", [c.tolist() for c in part.communities()])

labels, rounds = run_labels(g, p)
print(f"raw labels {labels.tolist()} after {rounds} rounds")
assert run(g, p) == part  # same seed, same answer

# negative edges push labels apart; here they replace the bridge
signed = Graph(12, [u for u, _ in pairs], [v for _, v in pairs], [1.0] * (len(pairs) - 1) + [-1.0])
print("with a negative bridge:", run(signed, p).labels.tolist())
