"""History-buffered label propagation (the SpeakEasy update rule).

Every node keeps a buffer of its ``H`` most recent labels. In each iteration,
all nodes simultaneously adopt the label whose weighted count in their
neighbors' buffers most exceeds the count expected from that label's global
frequency. Labels are node ids, so a label can only ever be copied, never
created.

Randomness comes from a counter-based hash keyed on
``(seed, stream, iteration, node, draw)`` rather than from a sequential
generator. Draws for different nodes are therefore independent of evaluation
order, which keeps replicate runs reproducible under any thread schedule.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Sequence

import numba
import numpy as np

from .graph import Graph, Partition

__all__ = [
    "EngineParams",
    "EngineState",
    "init_state",
    "global_label_frequencies",
    "select_label",
    "step",
    "run",
    "run_labels",
    "run_many",
]

EXPECTATION_MODES = ("neighbors", "weight")

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_TO_UNIT = 1.0 / 9007199254740992.0  # 2**-53

_STREAM_INIT = 1
_STREAM_TIE = 2

# relative slack when comparing label scores for ties
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class EngineParams:
    """Parameters of a single propagation run.

    Parameters
    ----------
    num_history_labels : int
        Buffer length ``H``.
    max_iterations : int
        Hard cap ``T`` on the number of update rounds.
    patience : int
        Stop after this many consecutive rounds in which no node's newest
        label changed.
    seed : int
        64-bit seed; the whole trajectory is a function of it.
    expectation : {"weight", "neighbors"}
        Scale of the expected label count at a node. ``"neighbors"`` uses the
        plain neighbor count, ``"weight"`` the sum of absolute incoming edge
        weights. Both agree on unit-weight graphs.
    """

    num_history_labels: int = 5
    max_iterations: int = 50
    patience: int = 5
    seed: int = 0
    expectation: str = "weight"

    def __post_init__(self):
        if self.num_history_labels < 1:
            raise ValueError("num_history_labels must be >= 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.expectation not in EXPECTATION_MODES:
            raise ValueError(f"expectation must be one of {EXPECTATION_MODES}")
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)

    def with_seed(self, seed: int) -> "EngineParams":
        return replace(self, seed=seed)


@dataclass(frozen=True, eq=False)
class EngineState:
    """Label buffers after ``iteration`` update rounds.

    ``buffers[v]`` is ordered oldest to newest, so ``buffers[:, -1]`` holds
    each node's current label.
    """

    buffers: np.ndarray
    iteration: int
    params: EngineParams

    @property
    def current_labels(self) -> np.ndarray:
        return self.buffers[:, -1]


# ---------------------------------------------------------------------------
# kernels
# ---------------------------------------------------------------------------


@numba.njit(cache=True, inline="always")
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


@numba.njit(cache=True)
def _uniform(seed, stream, a, b, c):
    h = _mix64(seed + _GOLDEN * np.uint64(stream))
    h = _mix64(h ^ (np.uint64(a) + _GOLDEN))
    h = _mix64(h ^ (np.uint64(b) + _GOLDEN))
    h = _mix64(h ^ (np.uint64(c) + _GOLDEN))
    return np.float64(h >> np.uint64(11)) * _TO_UNIT


@numba.njit(cache=True, nogil=True)
def _init_buffers(indptr, indices, n, H, seed):
    buf = np.empty((n, H), dtype=indices.dtype)
    for v in range(n):
        buf[v, 0] = v
        start = indptr[v]
        deg = indptr[v + 1] - start
        for j in range(1, H):
            if deg == 0:
                buf[v, j] = v
            else:
                k = np.int64(_uniform(seed, _STREAM_INIT, 0, v, j) * deg)
                if k >= deg:
                    k = deg - 1
                buf[v, j] = indices[start + k]
    return buf


@numba.njit(cache=True)
def _select(v, indptr, indices, weights, buf, head, work, norm_v, seed,
            iteration, touched):
    # work[:, 0] accumulates weighted counts (NaN marks an unseen label),
    # work[:, 1] holds global frequencies; one row per label keeps both in one cache line
    start = indptr[v]
    end = indptr[v + 1]
    if start == end:
        return v
    H = buf.shape[1]
    unit = weights.shape[0] == 0
    nt = 0
    for e in range(start, end):
        u = indices[e]
        w = 1.0 if unit else weights[e]
        # oldest to newest without a modulo per entry
        for j in range(head, head + H):
            lab = buf[u, j - H if j >= H else j]
            a = work[lab, 0]
            if a != a:
                work[lab, 0] = w
                touched[nt] = lab
                nt += 1
            else:
                work[lab, 0] = a + w
    scale = norm_v * H
    best_lab = -1
    best = 0.0
    ties = 0
    for t in range(nt):
        lab = touched[t]
        score = work[lab, 0] - work[lab, 1] * scale
        work[lab, 0] = np.nan
        if best_lab < 0:
            best_lab = lab
            best = score
            ties = 1
            continue
        tol = _TIE_RTOL * (1.0 + abs(best))
        if score > best + tol:
            best_lab = lab
            best = score
            ties = 1
        elif score >= best - tol:
            ties += 1
            if _uniform(seed, _STREAM_TIE, iteration, v, ties) * ties < 1.0:
                best_lab = lab
    return best_lab


@numba.njit(cache=True, nogil=True)
def _label_freq(buf, work):
    n, H = buf.shape
    work[:, 1] = 0.0
    for v in range(n):
        for j in range(H):
            work[buf[v, j], 1] += 1.0
    total = np.float64(n * H)
    for i in range(work.shape[0]):
        work[i, 1] /= total


@numba.njit(cache=True, nogil=True)
def _step(indptr, indices, weights, norm, buf, head, seed, iteration,
          work, touched, new):
    n, H = buf.shape
    _label_freq(buf, work)
    for v in range(n):
        new[v] = _select(v, indptr, indices, weights, buf, head, work, norm[v],
                         seed, iteration, touched)
    last = (head + H - 1) % H
    changed = 0
    for v in range(n):
        if new[v] != buf[v, last]:
            changed += 1
        buf[v, head] = new[v]
    return changed


@numba.njit(cache=True)
def _work(n):
    work = np.empty((n, 2), dtype=np.float64)
    work[:, 0] = np.nan
    work[:, 1] = 0.0
    return work


@numba.njit(cache=True, nogil=True)
def _run(indptr, indices, weights, norm, n, H, max_iter, patience, seed):
    buf = _init_buffers(indptr, indices, n, H, seed)
    work = _work(n)
    touched = np.zeros(n, dtype=np.int64)
    new = np.zeros(n, dtype=np.int64)
    head = 0
    quiet = 0
    it = 0
    while it < max_iter:
        it += 1
        changed = _step(indptr, indices, weights, norm, buf, head, seed, it,
                        work, touched, new)
        head = (head + 1) % H
        if changed == 0:
            quiet += 1
            if quiet >= patience:
                break
        else:
            quiet = 0
    out = np.empty(n, dtype=np.int64)
    last = (head + H - 1) % H
    for v in range(n):
        out[v] = buf[v, last]
    return out, it


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------


def _norm(g: Graph, mode: str) -> np.ndarray:
    indptr, _, weights = g.in_csr
    if mode == "neighbors":
        return np.diff(indptr).astype(np.float64)
    rows = np.repeat(np.arange(g.n), np.diff(indptr))
    return np.bincount(rows, weights=np.abs(weights), minlength=g.n).astype(np.float64)


def _kernel_args(g: Graph, p: EngineParams, compact: bool = False):
    indptr, indices, weights = g.in_csr
    if compact and g.n < 2**31:
        # int32 ids halve the randomly accessed buffer memory during runs
        indices = indices.astype(np.int32)
        if np.all(weights == 1.0):
            # an empty weight array tells the kernel every weight is one
            weights = weights[:0]
    return indptr, indices, weights, _norm(g, p.expectation)


def init_state(g: Graph, p: EngineParams) -> EngineState:
    """Fill each buffer with the node's own id plus ``H - 1`` random neighbor ids."""
    indptr, indices, _ = g.in_csr
    buf = _init_buffers(indptr, indices, g.n, p.num_history_labels, np.uint64(p.seed))
    return EngineState(buffers=buf, iteration=0, params=p)


def global_label_frequencies(s: EngineState) -> dict[int, float]:
    """Share of each label among all ``n * H`` buffer slots (unweighted)."""
    buf = s.buffers
    if buf.size == 0:
        return {}
    labels, counts = np.unique(buf, return_counts=True)
    total = float(buf.size)
    return {int(l): c / total for l, c in zip(labels, counts)}


def _work_array(freq: dict[int, float], n: int) -> np.ndarray:
    work = _work(n)
    for lab, f in freq.items():
        work[lab, 1] = f
    return work


def select_label(v: int, s: EngineState, f: dict[int, float], g: Graph) -> int:
    """Label that node ``v`` adopts in the next round.

    Scores every label found in the neighbors' buffers by its weighted count
    minus its expected count ``f[label] * norm(v) * H`` and returns the
    maximum, breaking exact ties at random. Nodes without neighbors keep
    their own id.
    """
    indptr, indices, weights, norm = _kernel_args(g, s.params)
    n = g.n
    return int(
        _select(
            v, indptr, indices, weights, s.buffers, 0, _work_array(f, n),
            norm[v], np.uint64(s.params.seed), s.iteration + 1,
            np.zeros(n, dtype=np.int64),
        )
    )


def step(s: EngineState, g: Graph) -> tuple[EngineState, int]:
    """One synchronous round. Returns the new state and how many nodes changed label."""
    indptr, indices, weights, norm = _kernel_args(g, s.params)
    n = g.n
    buf = np.ascontiguousarray(s.buffers).copy()
    changed = _step(
        indptr, indices, weights, norm, buf, 0, np.uint64(s.params.seed),
        s.iteration + 1, _work(n), np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64),
    )
    # the kernel overwrote the oldest column in place
    buf = np.roll(buf, -1, axis=1)
    return EngineState(buffers=buf, iteration=s.iteration + 1, params=s.params), int(changed)


def run_labels(g: Graph, p: EngineParams) -> tuple[np.ndarray, int]:
    """Raw final labels (node ids) and the number of rounds executed."""
    indptr, indices, weights, norm = _kernel_args(g, p, compact=True)
    labels, iterations = _run(
        indptr, indices, weights, norm, g.n, p.num_history_labels,
        p.max_iterations, p.patience, np.uint64(p.seed),
    )
    return labels, int(iterations)


def run(g: Graph, p: EngineParams) -> Partition:
    """Cluster ``g`` once; each node's community is its newest label."""
    labels, _ = run_labels(g, p)
    return Partition(labels)


def run_many(g: Graph, p: EngineParams, seeds: Sequence[int], jobs: int = 1) -> np.ndarray:
    """Final labels for one run per seed, stacked as an ``(R, n)`` array.

    Runs release the GIL, so ``jobs > 1`` executes them on a thread pool. Row
    ``i`` always corresponds to ``seeds[i]``.
    """
    indptr, indices, weights, norm = _kernel_args(g, p, compact=True)
    H, T, pat = p.num_history_labels, p.max_iterations, p.patience

    def one(seed):
        labels, _ = _run(indptr, indices, weights, norm, g.n, H, T, pat,
                         np.uint64(int(seed) & 0xFFFFFFFFFFFFFFFF))
        return labels

    out = np.empty((len(seeds), g.n), dtype=np.int64)
    if jobs <= 1 or len(seeds) <= 1:
        for i, seed in enumerate(seeds):
            out[i] = one(seed)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for i, labels in enumerate(pool.map(one, seeds)):
                out[i] = labels
    return out
