"""Slow, independent reference implementations used as test oracles.

Everything here is written from the definitions with plain loops and the
standard library, sharing no code with the package.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import Counter, defaultdict


# ---------------------------------------------------------------------------
# partitions
# ---------------------------------------------------------------------------


def contingency(p, q):
    table = defaultdict(int)
    for a, b in zip(p, q):
        table[(a, b)] += 1
    return dict(table)


def pair_table(p, q):
    """(both, only_p, only_q, neither) over unordered node pairs."""
    a = b = c = d = 0
    for i, j in itertools.combinations(range(len(p)), 2):
        sp, sq = p[i] == p[j], q[i] == q[j]
        if sp and sq:
            a += 1
        elif sp:
            b += 1
        elif sq:
            c += 1
        else:
            d += 1
    return a, b, c, d


def rand_index(p, q):
    a, b, c, d = pair_table(p, q)
    total = a + b + c + d
    return 1.0 if total == 0 else (a + d) / total


def ari(p, q):
    a, b, c, d = pair_table(p, q)
    num = 2.0 * (a * d - b * c)
    den = (a + b) * (b + d) + (a + c) * (c + d)
    return 1.0 if den == 0 else num / den


def jaccard(p, q):
    a, b, c, _ = pair_table(p, q)
    return 1.0 if a + b + c == 0 else a / (a + b + c)


def _entropy(labels):
    n = len(labels)
    return -sum(k / n * math.log(k / n) for k in Counter(labels).values())


def nmi(p, q):
    n = len(p)
    hp, hq = _entropy(p), _entropy(q)
    if hp + hq == 0:
        return 1.0
    cp, cq = Counter(p), Counter(q)
    mi = 0.0
    for (a, b), k in contingency(p, q).items():
        mi += k / n * math.log(k * n / (cp[a] * cq[b]))
    return 2.0 * mi / (hp + hq)


def _groups(labels):
    g = defaultdict(set)
    for v, c in enumerate(labels):
        g[c].add(v)
    return list(g.values())


def f_measure(p, q):
    n = len(p)

    def one_way(x, y):
        total = 0.0
        for cx in _groups(x):
            best = 0.0
            for cy in _groups(y):
                inter = len(cx & cy)
                best = max(best, 2.0 * inter / (len(cx) + len(cy)))
            total += len(cx) / n * best
        return total

    return 0.5 * (one_way(p, q) + one_way(q, p))


def nvd(p, q):
    n = len(p)
    gp, gq = _groups(p), _groups(q)
    s1 = sum(max(len(a & b) for b in gq) for a in gp)
    s2 = sum(max(len(a & b) for a in gp) for b in gq)
    return 1.0 - (s1 + s2) / (2.0 * n)


# ---------------------------------------------------------------------------
# quality scores (edges as (u, v, w) triples, undirected)
# ---------------------------------------------------------------------------


def modularity(n, edges, labels):
    A = [[0.0] * n for _ in range(n)]
    for u, v, w in edges:
        if w > 0:
            A[u][v] += w
            A[v][u] += w
    k = [sum(row) for row in A]
    two_m = sum(k)
    q = 0.0
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                q += A[i][j] - k[i] * k[j] / two_m
    return q / two_m


def modularity_density(n, edges, labels):
    pos = [(u, v, w) for u, v, w in edges if w > 0]
    m = sum(w for _, _, w in pos)
    comms = sorted(set(labels))
    size = {c: labels.count(c) for c in comms}
    e_in = {c: 0.0 for c in comms}
    e_out = {c: 0.0 for c in comms}
    e_pair = defaultdict(float)
    for u, v, w in pos:
        a, b = labels[u], labels[v]
        if a == b:
            e_in[a] += w
        else:
            e_out[a] += w
            e_out[b] += w
            e_pair[(a, b)] += w
            e_pair[(b, a)] += w
    total = 0.0
    for c in comms:
        nc = size[c]
        d = 2.0 * e_in[c] / (nc * (nc - 1)) if nc > 1 else 0.0
        total += e_in[c] / m * d - ((2.0 * e_in[c] + e_out[c]) / (2.0 * m) * d) ** 2
        for c2 in comms:
            if c2 != c:
                ecc = e_pair[(c, c2)]
                total -= ecc / (2.0 * m) * ecc / (nc * size[c2])
    return total


# ---------------------------------------------------------------------------
# covers (memberships: list of sets, one per node)
# ---------------------------------------------------------------------------


def omega(m1, m2):
    n = len(m1)
    pairs = list(itertools.combinations(range(n), 2))
    M = len(pairs)
    if M == 0:
        return 1.0
    t1 = [len(m1[i] & m1[j]) for i, j in pairs]
    t2 = [len(m2[i] & m2[j]) for i, j in pairs]
    observed = sum(a == b for a, b in zip(t1, t2)) / M
    c1, c2 = Counter(t1), Counter(t2)
    expected = sum(c1[t] * c2[t] for t in set(c1) | set(c2)) / (M * M)
    if expected == 1.0:
        return 1.0
    return (observed - expected) / (1.0 - expected)


def _communities(memberships):
    comm = defaultdict(set)
    for v, cs in enumerate(memberships):
        for c in cs:
            comm[c].add(v)
    return [comm[c] for c in sorted(comm)]


def _h(x):
    return 0.0 if x <= 0 else -x * math.log(x)


def _cond_entropy_norm(X, Y, n):
    """Mean over communities of X of H(X_k | Y) / H(X_k) with the LFK admissibility rule."""
    vals = []
    for xk in X:
        px = len(xk) / n
        hx = _h(px) + _h(1 - px)
        best = None
        for yl in Y:
            p11 = len(xk & yl) / n
            p10 = len(xk - yl) / n
            p01 = len(yl - xk) / n
            p00 = 1.0 - p11 - p10 - p01
            if _h(p11) + _h(p00) <= _h(p01) + _h(p10):
                continue
            py = len(yl) / n
            hy = _h(py) + _h(1 - py)
            cond = _h(p11) + _h(p10) + _h(p01) + _h(p00) - hy
            best = cond if best is None else min(best, cond)
        if best is None:
            best = hx
        vals.append(0.0 if hx == 0 else best / hx)
    return sum(vals) / len(vals) if vals else 0.0


def onmi(m1, m2):
    n = len(m1)
    X, Y = _communities(m1), _communities(m2)
    v = 1.0 - 0.5 * (_cond_entropy_norm(X, Y, n) + _cond_entropy_norm(Y, X, n))
    return min(max(v, 0.0), 1.0)


# ---------------------------------------------------------------------------
# consensus
# ---------------------------------------------------------------------------


def co_occurrence(ensemble):
    n = len(ensemble[0])
    counts = [[0] * n for _ in range(n)]
    for part in ensemble:
        for i in range(n):
            for j in range(n):
                if part[i] == part[j]:
                    counts[i][j] += 1
    return counts


def representative_index(ensemble):
    R = len(ensemble)
    if R == 1:
        return 0
    means = []
    for i in range(R):
        means.append(sum(ari(ensemble[i], ensemble[j]) for j in range(R) if j != i) / (R - 1))
    best = max(means)
    return next(i for i, m in enumerate(means) if m >= best - 1e-9)


# ---------------------------------------------------------------------------
# label propagation
# ---------------------------------------------------------------------------


def in_neighbors(n, edges, directed=False):
    nb = [[] for _ in range(n)]
    for u, v, w in edges:
        nb[v].append((u, w))
        if not directed:
            nb[u].append((v, w))
    return nb


def frequencies(buffers):
    total = sum(len(b) for b in buffers)
    return {lab: c / total for lab, c in Counter(x for b in buffers for x in b).items()}


def scores(v, buffers, nb, freq, expectation="weight"):
    """Actual minus expected count for every candidate label of ``v``."""
    H = len(buffers[v])
    actual = defaultdict(float)
    for u, w in nb[v]:
        for lab in buffers[u]:
            actual[lab] += w
    scale = sum(abs(w) for _, w in nb[v]) if expectation == "weight" else len(nb[v])
    return {lab: a - freq[lab] * scale * H for lab, a in actual.items()}


def best_labels(v, buffers, nb, freq, expectation="weight", rtol=1e-12):
    if not nb[v]:
        return {v}
    sc = scores(v, buffers, nb, freq, expectation)
    top = max(sc.values())
    return {lab for lab, s in sc.items() if s >= top - rtol * (1.0 + abs(top))}


def simulate(n, edges, H, T=50, patience=5, rng=None, expectation="weight"):
    """Pure-Python label propagation with its own RNG; returns final labels."""
    rng = rng or random.Random(0)
    nb = in_neighbors(n, edges)
    buffers = []
    for v in range(n):
        buf = [v]
        for _ in range(H - 1):
            buf.append(rng.choice(nb[v])[0] if nb[v] else v)
        buffers.append(buf)
    quiet = 0
    for _ in range(T):
        freq = frequencies(buffers)
        new = [rng.choice(sorted(best_labels(v, buffers, nb, freq, expectation)))
               for v in range(n)]
        changed = sum(new[v] != buffers[v][-1] for v in range(n))
        buffers = [b[1:] + [x] for b, x in zip(buffers, new)]
        quiet = quiet + 1 if changed == 0 else 0
        if quiet >= patience:
            break
    return [b[-1] for b in buffers]


def same_partition(a, b):
    """True when two label lists induce the same grouping."""
    fwd, back = {}, {}
    for x, y in zip(a, b):
        if fwd.setdefault(x, y) != y or back.setdefault(y, x) != x:
            return False
    return True
