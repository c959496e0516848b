"""Stochastic maximization of the profile block likelihood over Z_k.

Greedy local search over pair swaps and 3-cycle rotations, with random
restarts and perturb-and-reoptimize refinement of the incumbent.  The inner
loop is numba-compiled; restarts can run in parallel worker processes.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from numba import njit

from .graph import Graph
from .histogram import (
    Bandwidth,
    NetworkHistogram,
    bernoulli_block_ll,
    bin_heights,
    canonical_assignment,
    edge_count_matrix,
    pair_counts,
    validate_assignment,
)


@dataclass(frozen=True)
class SearchConfig:
    restarts: int = 300
    stall_limit: int | None = None      # None -> 5 * n
    perturb_rounds: int = 20
    perturb_pairs_max: int = 100
    triple_proportion: float = 0.2
    top_fraction_inspected: float = 0.05
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.restarts < 1 or self.perturb_rounds < 0:
            raise ValueError("counts must be positive")
        if not 0.0 <= self.triple_proportion <= 1.0:
            raise ValueError("triple_proportion must lie in [0, 1]")
        if not 0.0 <= self.top_fraction_inspected <= 1.0:
            raise ValueError("top_fraction_inspected must lie in [0, 1]")

    def stall_for(self, n: int) -> int:
        return self.stall_limit if self.stall_limit is not None else 5 * n


@dataclass(frozen=True)
class FitResult:
    best: NetworkHistogram
    history: np.ndarray             # final log-likelihood of each restart
    proposals_evaluated: int
    seed: int
    log_likelihood: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "log_likelihood",
                           bernoulli_block_ll(self.best.edge_counts,
                                              self.best.pair_counts))


def random_assignment(n: int, h: int, seed) -> np.ndarray:
    """Uniform member of Z_k: a random permutation of the canonical labels."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.permutation(canonical_assignment(Bandwidth(n, h)))


# ---------------------------------------------------------------------------
# numba kernels; z is 0-based inside the kernels, e/npairs are dense k x k


@njit(cache=True, inline="always")
def _term(e, m):
    if e <= 0.0 or e >= m:
        return 0.0
    p = e / m
    return e * math.log(p) + (m - e) * math.log(1.0 - p)


@njit(cache=True)
def _rows_ll(e, npairs, groups, ngroups, k):
    """Likelihood contribution of every bin touching any group in ``groups``,
    each unordered bin counted once."""
    total = 0.0
    for gi in range(ngroups):
        a = groups[gi]
        for c in range(k):
            total += _term(e[a, c], npairs[a, c])
    # bins between two listed groups were counted twice; diagonal bins once
    for gi in range(ngroups):
        for gj in range(gi + 1, ngroups):
            a, b = groups[gi], groups[gj]
            total -= _term(e[a, b], npairs[a, b])
    return total


@njit(cache=True)
def _apply_swap(indptr, indices, z, e, i, j):
    """Exchange the labels of i and j, updating edge counts in place."""
    a, b = z[i], z[j]
    for t in range(indptr[i], indptr[i + 1]):
        u = indices[t]
        if u == j:
            continue
        c = z[u]
        e[a, c] -= 1.0
        e[c, a] = e[a, c] if c != a else e[a, c]
        e[b, c] += 1.0
        e[c, b] = e[b, c] if c != b else e[b, c]
    for t in range(indptr[j], indptr[j + 1]):
        u = indices[t]
        if u == i:
            continue
        c = z[u]
        e[b, c] -= 1.0
        e[c, b] = e[b, c] if c != b else e[b, c]
        e[a, c] += 1.0
        e[c, a] = e[a, c] if c != a else e[a, c]
    z[i] = b
    z[j] = a


@njit(cache=True)
def _try_swap(indptr, indices, z, e, npairs, k, i, j, groups2):
    """Apply swap (i, j) if it improves the likelihood; returns the delta
    (the swap is reverted when not improving)."""
    groups2[0], groups2[1] = z[i], z[j]
    before = _rows_ll(e, npairs, groups2, 2, k)
    _apply_swap(indptr, indices, z, e, i, j)
    delta = _rows_ll(e, npairs, groups2, 2, k) - before
    if delta <= 1e-12:
        _apply_swap(indptr, indices, z, e, i, j)
        return delta, False
    return delta, True


@njit(cache=True)
def _try_triple(indptr, indices, z, e, npairs, k, i, j, l, groups3):
    """3-cycle rotation i->group(j), j->group(l), l->group(i), applied only
    when improving."""
    groups3[0], groups3[1], groups3[2] = z[i], z[j], z[l]
    before = _rows_ll(e, npairs, groups3, 3, k)
    _apply_swap(indptr, indices, z, e, i, j)
    _apply_swap(indptr, indices, z, e, j, l)
    delta = _rows_ll(e, npairs, groups3, 3, k) - before
    if delta <= 1e-12:
        _apply_swap(indptr, indices, z, e, j, l)
        _apply_swap(indptr, indices, z, e, i, j)
        return delta, False
    return delta, True


@njit(cache=True)
def _greedy(indptr, indices, z, e, npairs, k, stall_limit, triple_prop, seed):
    """Strictly-improving local search until stall_limit consecutive
    non-improving proposals; returns the number of proposals evaluated."""
    np.random.seed(seed)
    n = z.shape[0]
    groups2 = np.empty(2, dtype=np.int64)
    groups3 = np.empty(3, dtype=np.int64)
    stall = 0
    proposals = 0
    while stall < stall_limit:
        proposals += 1
        use_triple = k >= 3 and np.random.random() < triple_prop
        if use_triple:
            i = np.random.randint(n)
            j = np.random.randint(n)
            while z[j] == z[i]:
                j = np.random.randint(n)
            l = np.random.randint(n)
            while z[l] == z[i] or z[l] == z[j]:
                l = np.random.randint(n)
            delta, improved = _try_triple(indptr, indices, z, e, npairs, k,
                                          i, j, l, groups3)
        else:
            i = np.random.randint(n)
            j = np.random.randint(n)
            while z[j] == z[i]:
                j = np.random.randint(n)
            delta, improved = _try_swap(indptr, indices, z, e, npairs, k,
                                        i, j, groups2)
        if improved:
            stall = 0
        else:
            stall += 1
    return proposals


@njit(cache=True)
def _perturb(indptr, indices, z, e, n_swaps, seed):
    """Unconditionally swap n_swaps random cross-group pairs."""
    np.random.seed(seed)
    n = z.shape[0]
    for _ in range(n_swaps):
        i = np.random.randint(n)
        j = np.random.randint(n)
        tries = 0
        while z[j] == z[i] and tries < 64:
            j = np.random.randint(n)
            tries += 1
        if z[j] != z[i]:
            _apply_swap(indptr, indices, z, e, i, j)


# ---------------------------------------------------------------------------


def _csr(g: Graph) -> tuple[np.ndarray, np.ndarray]:
    adj = g.adjacency
    indptr = np.zeros(g.n + 1, dtype=np.int64)
    counts = adj.sum(axis=1)
    np.cumsum(counts, out=indptr[1:])
    indices = np.flatnonzero(adj.ravel()) % g.n
    return indptr, indices.astype(np.int64)


def _state(g: Graph, z: np.ndarray, bw: Bandwidth):
    e = edge_count_matrix(g, z, bw.k)
    return z.astype(np.int64) - 1, e, pair_counts(bw)


def swap_delta(g: Graph, hist: NetworkHistogram, i: int, j: int) -> float:
    """Log-likelihood change from exchanging the labels of nodes i and j,
    computed incrementally from the affected bins only."""
    z = hist.z
    if z[i] == z[j]:
        raise ValueError("swap requires nodes in different groups")
    bw = hist.bandwidth
    indptr, indices = _csr(g)
    z0, e, npairs = _state(g, z, bw)
    groups2 = np.empty(2, dtype=np.int64)
    groups2[0], groups2[1] = z0[i], z0[j]
    before = _rows_ll(e, npairs, groups2, 2, bw.k)
    _apply_swap(indptr, indices, z0, e, i, j)
    return float(_rows_ll(e, npairs, groups2, 2, bw.k) - before)


def _run_restarts(indptr, indices, n, h, k, npairs, stall_limit,
                  triple_prop, seeds, adjacency):
    """Run one greedy restart per seed; returns (lls, zs, proposals)."""
    g = Graph(np.asarray(adjacency))
    bw = Bandwidth(n, h)
    lls = np.empty(len(seeds))
    zs = np.empty((len(seeds), n), dtype=np.int64)
    proposals = 0
    for idx, s in enumerate(seeds):
        z = random_assignment(n, h, int(s))
        z0, e, _ = _state(g, z, bw)
        proposals += _greedy(indptr, indices, z0, e, npairs, k,
                             stall_limit, triple_prop, int(s))
        lls[idx] = bernoulli_block_ll(e, npairs)
        zs[idx] = z0 + 1
    return lls, zs, proposals


def fit(g: Graph, h: int, cfg: SearchConfig | None = None) -> FitResult:
    """Restarted greedy search for the maximum profile-likelihood assignment,
    followed by perturb-and-reoptimize refinement of the best solution."""
    cfg = cfg or SearchConfig()
    bw = Bandwidth(g.n, h)
    indptr, indices = _csr(g)
    npairs = pair_counts(bw)
    stall = cfg.stall_for(g.n)
    seeds = np.random.SeedSequence(cfg.seed).generate_state(
        cfg.restarts + cfg.perturb_rounds + 1, dtype=np.uint32
    ).astype(np.int64)
    restart_seeds = seeds[: cfg.restarts]

    if cfg.threads > 1:
        chunks = np.array_split(restart_seeds, cfg.threads)
        chunks = [c for c in chunks if c.size]
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(
                pool.map(
                    _run_restarts_star,
                    [(indptr, indices, g.n, h, bw.k, npairs, stall,
                      cfg.triple_proportion, c, np.asarray(g.adjacency))
                     for c in chunks],
                )
            )
        lls = np.concatenate([p[0] for p in parts])
        zs = np.concatenate([p[1] for p in parts])
        proposals = sum(p[2] for p in parts)
    else:
        lls, zs, proposals = _run_restarts(
            indptr, indices, g.n, h, bw.k, npairs, stall,
            cfg.triple_proportion, restart_seeds, np.asarray(g.adjacency)
        )

    best_idx = int(np.argmax(lls))
    incumbent = zs[best_idx].copy()
    best_ll = float(lls[best_idx])

    rng = np.random.default_rng(seeds[-1])
    for round_idx in range(cfg.perturb_rounds):
        z0, e, _ = _state(g, incumbent, bw)
        n_swaps = int(rng.integers(1, cfg.perturb_pairs_max + 1))
        pseed = int(seeds[cfg.restarts + round_idx])
        _perturb(indptr, indices, z0, e, n_swaps, pseed)
        proposals += _greedy(indptr, indices, z0, e, npairs, bw.k,
                             stall, cfg.triple_proportion, pseed + 1)
        ll = bernoulli_block_ll(e, npairs)
        if ll > best_ll:
            best_ll = ll
            incumbent = (z0 + 1).copy()

    hist = bin_heights(g, incumbent, h)
    return FitResult(hist, lls, proposals, cfg.seed)


def _run_restarts_star(args):
    return _run_restarts(*args)


# ---------------------------------------------------------------------------
# exhaustive oracle


def _partitions(nodes: tuple, sizes: list[int]):
    """Unordered partitions of ``nodes`` into blocks of the given sizes.
    Equal-size blocks are deduplicated by anchoring each on its minimum."""
    if not sizes:
        yield ()
        return
    size = sizes[0]
    rest_sizes = sizes[1:]
    anchor = nodes[0]
    for companions in combinations(nodes[1:], size - 1):
        block = (anchor,) + companions
        remaining = tuple(x for x in nodes if x not in block)
        for tail in _partitions(remaining, rest_sizes):
            yield (block,) + tail


def partition_space_size(n: int, h: int) -> int:
    """Number of distinct assignments in Z_k up to group relabeling."""
    bw = Bandwidth(n, h)
    total = math.factorial(n)
    for _ in range(bw.k - 1):
        total //= math.factorial(h)
    total //= math.factorial(h + bw.r)
    if bw.r == 0:
        total //= math.factorial(bw.k)
    else:
        total //= math.factorial(bw.k - 1)
    return total


def brute_force_fit(g: Graph, h: int, limit: int = 10 ** 6) -> np.ndarray:
    """Exact maximizer of the profile likelihood by enumerating Z_k (up to
    relabeling).  Errors when the space exceeds ``limit``."""
    bw = Bandwidth(g.n, h)
    space = partition_space_size(g.n, h)
    if space > limit:
        raise ValueError(f"partition space {space} exceeds limit {limit}")
    npairs = pair_counts(bw)
    nodes = tuple(range(g.n))
    best_ll = -np.inf
    best_z = None
    if bw.r == 0:
        sizes = [bw.h] * bw.k
        remainder_block = None
        candidates = _partitions(nodes, sizes)
    else:
        # the size-(h+r) block is a different size, enumerate it separately
        sizes = [bw.h] * (bw.k - 1)
        candidates = (
            tuple(p) + (big,)
            for big in combinations(nodes, bw.h + bw.r)
            for p in _partitions(tuple(x for x in nodes if x not in set(big)),
                                 sizes)
        )
        remainder_block = True
    for blocks in candidates:
        z = np.empty(g.n, dtype=np.int64)
        if remainder_block is None:
            ordered = blocks
        else:
            ordered = blocks[:-1] + (blocks[-1],)
        for label, block in enumerate(ordered, start=1):
            for node in block:
                z[node] = label
        # remainder group must carry label k
        if remainder_block is not None:
            pass  # already last
        e = edge_count_matrix(g, z, bw.k)
        ll = bernoulli_block_ll(e, npairs)
        if ll > best_ll:
            best_ll = ll
            best_z = z
    return validate_assignment(best_z, bw)
