"""Test two cohorts of correlation matrices for a change in cluster cohesion.

Cohort b loses most of the correlation inside the first block of nodes. The
permutation test shuffles subjects between cohorts to build a null for each
reference cluster.
"""

import numpy as np

from speakeasy import CohortData, EngineParams, permutation_test


def subject(rng, within, sizes=(10, 10, 10, 10), background=0.3, samples=15):
    common = rng.standard_normal(samples)
    rows = []
    for size, r in zip(sizes, within):
        block = rng.standard_normal(samples)
        rows.append(np.sqrt(background) * common + np.sqrt(r - background) * block
                    + np.sqrt(1 - r) * rng.standard_normal((size, samples)))
    return np.corrcoef(np.vstack(rows))


rng = np.random.default_rng(0)
a = CohortData([subject(rng, [0.8] * 4) for _ in range(12)], label="control")
b = CohortData([subject(rng, [0.3, 0.8, 0.8, 0.8]) for _ in range(12)], label="case")

report = permutation_test(a, b, EngineParams(seed=0), R=20, n_perm=200)
print("reference clusters:", [c.tolist() for c in report.reference.communities()])
for c in report.clusters:
    print(f"cluster {c.cluster} (n={c.size}): {c.stat_a:.3f} -> {c.stat_b:.3f}, "
          f"delta {c.delta:+.3f}, p = {c.p_value:.4f}")
