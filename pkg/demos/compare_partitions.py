"""Score predicted communities against a reference.

Partition scores need only labels; Q and Qds also need the graph. Covers
use overlapping NMI, the Omega index and the F-score on bridge nodes.
"""

import itertools

from speakeasy import Cover, Graph, Partition
from speakeasy.metrics import cover_report, partition_report

pairs = list(itertools.combinations(range(5), 2)) + list(itertools.combinations(range(5, 10), 2))
pairs.append((4, 5))
g = Graph(10, [u for u, _ in pairs], [v for _, v in pairs])

truth = Partition([0] * 5 + [1] * 5)
pred = Partition([0] * 4 + [1] * 6)  # node 4 misplaced
for name, val in partition_report(pred, truth, g).items():
    print(f"{name:>4} {val: .4f}")

true_cover = Cover([{0}] * 4 + [{0, 1}] + [{1}] * 5)
pred_cover = Cover([{0}] * 4 + [{0, 1}] + [{1}] * 4 + [{1, 0}])
print(cover_report(pred_cover, true_cover))
