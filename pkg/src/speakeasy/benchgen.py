"""Planted-community benchmark graphs in the style of LFR.

Degrees and community sizes follow truncated power laws. Each node sends a
fraction ``1 - mu`` of its edges inside its community (split evenly across
communities for overlapping nodes) and the rest to nodes sharing none of its
communities. Stubs are paired by random matching with a bounded number of
degree-preserving repair sweeps.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .graph import Cover, Graph

__all__ = [
    "BenchmarkSpec",
    "InfeasibleSpecError",
    "generate",
    "realized_mixing",
    "summary",
]

REPAIR_SWEEPS = 100
REPAIR_TRIES = 20
# stubs that may be dropped after repair, as a fraction of all stubs
MAX_DROPPED_FRACTION = 0.01


class InfeasibleSpecError(ValueError):
    """The benchmark parameters cannot be realized."""


@dataclass(frozen=True)
class BenchmarkSpec:
    n: int = 1000
    avg_degree: float = 15.0
    max_degree: int = 50
    gamma: float = 2.0
    beta: float = 1.0
    mu: float = 0.1
    overlap_fraction: float = 0.0
    om: int = 1
    min_community_size: int = 10
    max_community_size: int = 100
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mu <= 1.0:
            raise ValueError("mu must lie in [0, 1]")
        if not 0.0 <= self.overlap_fraction <= 1.0:
            raise ValueError("overlap_fraction must lie in [0, 1]")
        if self.om < 1:
            raise ValueError("om must be >= 1")
        if self.n < 2:
            raise ValueError("n must be >= 2")
        if self.min_community_size < 2 or self.min_community_size > self.max_community_size:
            raise ValueError("need 2 <= min_community_size <= max_community_size")
        if self.max_degree >= self.n:
            raise InfeasibleSpecError("max_degree must be smaller than n")
        if not 1.0 <= self.avg_degree <= self.max_degree:
            raise InfeasibleSpecError("avg_degree must lie in [1, max_degree]")

    @property
    def num_overlapping(self) -> int:
        return int(round(self.overlap_fraction * self.n)) if self.om >= 2 else 0

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# power laws
# ---------------------------------------------------------------------------


def _moment(a: float, b: float, p: float) -> float:
    """Integral of x**p over [a, b]."""
    if abs(p + 1.0) < 1e-12:
        return math.log(b / a)
    return (b ** (p + 1.0) - a ** (p + 1.0)) / (p + 1.0)


def _power_law_mean(a: float, b: float, exponent: float) -> float:
    return _moment(a, b, 1.0 - exponent) / _moment(a, b, -exponent)


def _sample_power_law(rng, a: float, b: float, exponent: float, size: int) -> np.ndarray:
    """Inverse-CDF draws from density proportional to x**-exponent on [a, b]."""
    u = rng.random(size)
    if abs(exponent - 1.0) < 1e-12:
        return a * (b / a) ** u
    e = 1.0 - exponent
    return (a**e + u * (b**e - a**e)) ** (1.0 / e)


def solve_min_degree(avg_degree: float, max_degree: float, gamma: float) -> float:
    """Lower cutoff giving a power law on [kmin, max_degree] the requested mean."""
    if avg_degree >= max_degree:
        return float(max_degree)
    lo = 1.0
    if _power_law_mean(lo, max_degree, gamma) > avg_degree:
        raise InfeasibleSpecError(
            f"avg_degree {avg_degree} is below the mean attainable with kmin=1"
        )
    return brentq(
        lambda k: _power_law_mean(k, max_degree, gamma) - avg_degree,
        lo, max_degree - 1e-9, xtol=1e-10,
    )


def _degrees(spec: BenchmarkSpec, rng) -> np.ndarray:
    kmin = solve_min_degree(spec.avg_degree, spec.max_degree, spec.gamma)
    raw = _sample_power_law(rng, kmin, spec.max_degree, spec.gamma, spec.n)
    return np.clip(np.rint(raw), 1, spec.max_degree).astype(np.int64)


def _community_sizes(spec: BenchmarkSpec, total: int, rng) -> list[int]:
    lo, hi = spec.min_community_size, spec.max_community_size
    if total < lo:
        raise InfeasibleSpecError(
            f"{total} memberships cannot fill one community of min size {lo}"
        )
    sizes: list[int] = []
    while sum(sizes) < total:
        s = int(np.rint(_sample_power_law(rng, lo, hi, spec.beta, 1)[0]))
        sizes.append(min(max(s, lo), hi))
    excess = sum(sizes) - total
    # trim from the most recently drawn communities without crossing the lower bound
    for i in range(len(sizes) - 1, -1, -1):
        if excess == 0:
            break
        cut = min(excess, sizes[i] - lo)
        sizes[i] -= cut
        excess -= cut
    if excess:
        raise InfeasibleSpecError(
            "community size bounds cannot tile the required number of memberships"
        )
    return sizes


# ---------------------------------------------------------------------------
# membership assignment
# ---------------------------------------------------------------------------


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _assign(spec, sizes, internal, overlapping, rng):
    """Place every (node, share) token in a community large enough to host it."""
    n_comm = len(sizes)
    tokens = []  # (internal degree required, node)
    for v in range(spec.n):
        m = spec.om if overlapping[v] else 1
        for d in _split(int(internal[v]), m):
            tokens.append((d, v))
    sizes_arr = np.asarray(sizes)
    for attempt in range(20):
        order = rng.permutation(len(tokens))
        order = sorted(order, key=lambda i: -tokens[i][0])
        free = sizes_arr.copy()
        members: list[list[int]] = [[] for _ in range(n_comm)]
        homes: list[set[int]] = [set() for _ in range(spec.n)]
        shares: dict[tuple[int, int], int] = {}
        ok = True
        for i in order:
            d, v = tokens[i]
            eligible = [
                c for c in range(n_comm)
                if free[c] > 0 and sizes_arr[c] - 1 >= d and c not in homes[v]
            ]
            if not eligible:
                ok = False
                break
            weights = free[eligible].astype(float)
            c = eligible[rng.choice(len(eligible), p=weights / weights.sum())]
            free[c] -= 1
            members[c].append(v)
            homes[v].add(c)
            shares[(v, c)] = d
        if ok:
            return members, homes, shares
    raise InfeasibleSpecError(
        "no community is large enough to host the internal degree of some node "
        f"(max_community_size={spec.max_community_size}, mu={spec.mu})"
    )


# ---------------------------------------------------------------------------
# stub matching
# ---------------------------------------------------------------------------


def _key(u, v):
    return (u, v) if u < v else (v, u)


def _match(stubs, allowed, existing, rng):
    """Pair stubs into new edges; returns (edges, unplaced stub count)."""
    stubs = list(stubs)
    rng.shuffle(stubs)
    made: list[tuple[int, int]] = []
    pending: list[int] = []

    def ok(a, b):
        return a != b and _key(a, b) not in existing and allowed(a, b)

    def add(a, b):
        existing.add(_key(a, b))
        made.append((a, b))

    for i in range(0, len(stubs) - 1, 2):
        a, b = stubs[i], stubs[i + 1]
        if ok(a, b):
            add(a, b)
        else:
            pending.extend((a, b))
    if len(stubs) % 2:
        pending.append(stubs[-1])

    for _ in range(REPAIR_SWEEPS):
        if len(pending) < 2:
            break
        rng.shuffle(pending)
        still: list[int] = []
        for i in range(0, len(pending) - 1, 2):
            a, b = pending[i], pending[i + 1]
            if ok(a, b):
                add(a, b)
                continue
            placed = False
            for _ in range(REPAIR_TRIES if made else 0):
                j = int(rng.integers(len(made)))
                c, d = made[j]
                if rng.random() < 0.5:
                    c, d = d, c
                if a != c and b != d and ok(a, c) and ok(b, d) and _key(a, c) != _key(b, d):
                    existing.discard(_key(c, d))
                    made[j] = (a, c)
                    existing.add(_key(a, c))
                    add(b, d)
                    placed = True
                    break
            if not placed:
                still.extend((a, b))
        if len(pending) % 2:
            still.append(pending[-1])
        pending = still
    return made, len(pending)


def generate(spec: BenchmarkSpec) -> tuple[Graph, Cover]:
    """Build a benchmark graph and its planted cover.

    Raises
    ------
    InfeasibleSpecError
        If community sizes cannot host the internal degrees, or if more than
        1% of stubs remain unplaced after the repair sweeps.
    """
    rng = np.random.default_rng(spec.seed)
    degree = _degrees(spec, rng)
    overlapping = np.zeros(spec.n, dtype=bool)
    n_ov = spec.num_overlapping
    if n_ov:
        overlapping[rng.choice(spec.n, size=n_ov, replace=False)] = True
    internal = np.rint((1.0 - spec.mu) * degree).astype(np.int64)
    if n_ov:
        # overlapping nodes split internal edges exactly evenly; the remainder goes outside
        internal[overlapping] -= internal[overlapping] % spec.om
    memberships_total = spec.n + n_ov * (spec.om - 1)
    sizes = _community_sizes(spec, memberships_total, rng)
    if n_ov and len(sizes) < spec.om:
        raise InfeasibleSpecError(f"om={spec.om} exceeds the number of communities")
    members, homes, shares = _assign(spec, sizes, internal, overlapping, rng)

    external = degree - internal
    existing: set[tuple[int, int]] = set()
    edges: list[tuple[int, int]] = []
    dropped = 0
    total_stubs = int(degree.sum())
    for c, nodes in enumerate(members):
        stubs = [v for v in nodes for _ in range(shares[(v, c)])]
        if len(stubs) % 2:
            # move one stub outside from a member that already links out;
            # with no such member, add an internal stub instead so mu=0 stays exact
            cand = [v for v in nodes if shares[(v, c)] > 0 and external[v] > 0]
            if cand:
                v = cand[int(rng.integers(len(cand)))]
                stubs.remove(v)
                external[v] += 1
            else:
                cand = [v for v in nodes if shares[(v, c)] < len(nodes) - 1]
                v = cand[int(rng.integers(len(cand)))]
                stubs.append(v)
        made, left = _match(stubs, lambda a, b: True, existing, rng)
        edges.extend(made)
        dropped += left

    ext_stubs = [v for v in range(spec.n) for _ in range(int(external[v]))]
    made, left = _match(
        ext_stubs, lambda a, b: not (homes[a] & homes[b]), existing, rng
    )
    edges.extend(made)
    dropped += left
    if dropped > MAX_DROPPED_FRACTION * max(total_stubs, 1):
        raise InfeasibleSpecError(
            f"{dropped} of {total_stubs} stubs could not be placed without "
            "self-loops, multi-edges or intra-community external links"
        )

    edges.sort()
    src = np.array([e[0] for e in edges], dtype=np.int64)
    dst = np.array([e[1] for e in edges], dtype=np.int64)
    graph = Graph(spec.n, src, dst)
    cover = Cover([sorted(h) for h in homes])
    return graph, cover


def realized_mixing(g: Graph, truth: Cover) -> float:
    """Fraction of edges whose endpoints share no planted community."""
    if g.num_edges == 0:
        return 0.0
    memb = truth.membership_matrix()
    shared = np.einsum("ij,ij->i", memb[g.src], memb[g.dst])
    return float(np.mean(shared == 0))


def summary(g: Graph, truth: Cover) -> dict:
    """Realized statistics written next to generated instances."""
    deg = np.bincount(np.concatenate([g.src, g.dst]), minlength=g.n)
    return {
        "realized_mu": realized_mixing(g, truth),
        "mean_degree": float(deg.mean()) if g.n else 0.0,
        "max_degree": int(deg.max()) if g.n else 0,
        "num_edges": g.num_edges,
        "num_communities": truth.num_communities,
        "num_overlapping": len(truth.multi_nodes()),
    }
