"""Oracle labeling, MISE evaluation with block alignment, and the
theoretical bound calculators used by the Monte Carlo suites."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .graph import Graph
from .graphon import (
    Graphon,
    LatentSample,
    SparsitySchedule,
    block_extent,
    sample_graph,
)
from .histogram import Bandwidth, NetworkHistogram, bin_heights, pair_counts
from .quadrature import integrate_2d
from . import optimizer as _opt


class OracleError(ValueError):
    """Raised for mismatched oracle context or invalid evaluation requests."""


@dataclass(frozen=True)
class OracleContext:
    """Ground truth available only to the oracle: latent vector, true density
    scale, and the generating graphon."""

    xi: LatentSample
    rho_n: float
    f: Graphon

    def __post_init__(self):
        if self.rho_n * self.f.sup > 1.0 + 1e-12:
            raise OracleError("rho_n * sup f exceeds 1")


@dataclass(frozen=True)
class AlignmentResult:
    permutation: tuple
    l2_sq: float
    method: str  # "exact" | "heuristic"


def oracle_labeling(xi: np.ndarray, h: int) -> np.ndarray:
    """Group labels from the ranks of xi: rank rho gets min(ceil(rho/h), k)."""
    xi = np.asarray(xi, dtype=float)
    n = xi.size
    if not 1 <= h <= n:
        raise OracleError(f"bandwidth h={h} outside [1, n={n}]")
    k = n // h
    ranks = np.empty(n, dtype=np.int64)
    ranks[np.argsort(xi, kind="stable")] = np.arange(1, n + 1)
    return np.minimum((ranks + h - 1) // h, k)


def oracle_estimator(g: Graph, ctx: OracleContext, h: int) -> NetworkHistogram:
    """Bin heights under the oracle labeling of the true latent vector."""
    if ctx.xi.xi.size != g.n:
        raise OracleError("latent vector length does not match the graph")
    return bin_heights(g, oracle_labeling(ctx.xi.xi, h), h)


def fhat_values(hist: NetworkHistogram, rho: float | None = None) -> np.ndarray:
    """Block-constant estimate values: (1/rho) * A-bar; the fitted estimator
    uses rho_hat, the oracle version passes the true rho_n."""
    r = hist.rho_hat if rho is None else rho
    scale = 1.0 / r if r > 0 else 0.0
    return scale * hist.bin_heights


# ---------------------------------------------------------------------------
# block integrals of the target graphon, cached per (f, n, h)


class BlockIntegrals:
    """Per-block integrals of f and f^2 over the omega_ab partition."""

    def __init__(self, f: Graphon, n: int, h: int, rel_tol: float = 1e-9):
        self.f = f
        self.n = n
        self.h = h
        bw = Bandwidth(n, h)
        k = bw.k
        ext = [block_extent(a, h, n) for a in range(1, k + 1)]
        self.area = np.empty((k, k))
        self.int_f = np.empty((k, k))
        self.int_f2 = np.empty((k, k))
        for a in range(k):
            x0, x1 = ext[a]
            for b in range(a, k):
                y0, y1 = ext[b]
                i1 = integrate_2d(f.eval, x0, x1, y0, y1, rel_tol=rel_tol)
                i2 = integrate_2d(lambda x, y: f.eval(x, y) ** 2,
                                  x0, x1, y0, y1, rel_tol=rel_tol)
                area = (x1 - x0) * (y1 - y0)
                self.area[a, b] = self.area[b, a] = area
                self.int_f[a, b] = self.int_f[b, a] = i1
                self.int_f2[a, b] = self.int_f2[b, a] = i2
        self.total_f2 = float(self.int_f2.sum())

    def ise(self, values: np.ndarray, perm: np.ndarray) -> float:
        """Integrated squared error of the block-constant estimate after
        permuting its blocks by ``perm`` (perm[a] = source block for slot a)."""
        v = values[np.ix_(perm, perm)]
        return float(self.total_f2 - 2.0 * (v * self.int_f).sum()
                     + (v ** 2 * self.area).sum())

    def _bin_cost(self, v: np.ndarray, a: int, b: int) -> float:
        return float(-2.0 * v[a, b] * self.int_f[a, b]
                     + v[a, b] ** 2 * self.area[a, b])

    def _pair_cost(self, v: np.ndarray, a: int, b: int) -> float:
        """Total cost of every (ordered) bin touching row or column a or b;
        this is exactly the part of the ISE affected by swapping slots a, b."""
        row_a = float(-2.0 * (v[a] * self.int_f[a]).sum()
                      + (v[a] ** 2 * self.area[a]).sum())
        row_b = float(-2.0 * (v[b] * self.int_f[b]).sum()
                      + (v[b] ** 2 * self.area[b]).sum())
        return (2.0 * (row_a + row_b) - self._bin_cost(v, a, a)
                - self._bin_cost(v, b, b) - 2.0 * self._bin_cost(v, a, b))


def _greedy_alignment(blocks: BlockIntegrals, values: np.ndarray) -> np.ndarray:
    """Seed permutation matching blocks by marginal means, then pairwise
    exchange descent on the permuted ISE."""
    k = values.shape[0]
    widths = np.sqrt(np.diag(blocks.area))
    target_marg = blocks.int_f.sum(axis=1) / widths
    est_marg = values.mean(axis=1)
    perm = np.empty(k, dtype=np.int64)
    perm[np.argsort(target_marg, kind="stable")] = np.argsort(
        est_marg, kind="stable")

    improved = True
    while improved:
        improved = False
        for a in range(k):
            for b in range(a + 1, k):
                v = values[np.ix_(perm, perm)]
                before = blocks._pair_cost(v, a, b)
                perm[a], perm[b] = perm[b], perm[a]
                v2 = values[np.ix_(perm, perm)]
                after = blocks._pair_cost(v2, a, b)
                if after < before - 1e-14:
                    improved = True
                else:
                    perm[a], perm[b] = perm[b], perm[a]
    return perm


def aligned_ise(f: Graphon, hist: NetworkHistogram,
                values: np.ndarray | None = None,
                exact_k_max: int = 8,
                blocks: BlockIntegrals | None = None) -> AlignmentResult:
    """Integrated squared error between f and the block-constant estimate,
    minimized over block permutations (exact enumeration for small k, greedy
    seed plus exchange descent otherwise)."""
    bw = hist.bandwidth
    if values is None:
        values = fhat_values(hist)
    if blocks is None:
        blocks = BlockIntegrals(f, bw.n, bw.h)
    k = bw.k
    if k <= exact_k_max:
        best_perm, best = None, math.inf
        for p in permutations(range(k)):
            perm = np.array(p, dtype=np.int64)
            val = blocks.ise(values, perm)
            if val < best:
                best, best_perm = val, perm
        return AlignmentResult(tuple(int(x) for x in best_perm),
                               max(best, 0.0), "exact")
    perm = _greedy_alignment(blocks, values)
    val = blocks.ise(values, perm)
    return AlignmentResult(tuple(int(x) for x in perm), max(val, 0.0),
                           "heuristic")


@dataclass(frozen=True)
class MiseResult:
    mise_hat: float
    std_err: float
    replicates: int
    method: str
    seed: int


def mise_monte_carlo(f: Graphon, schedule: SparsitySchedule, n: int, h: int,
                     replicates: int, seed: int, estimator: str = "oracle",
                     fit_cfg=None) -> MiseResult:
    """Monte Carlo mean of the aligned ISE over seeded replicates.

    Each replicate samples (A, xi), builds the oracle estimator (or runs the
    stochastic fit when estimator="fitted"), and aligns it against f.
    """
    if replicates < 10:
        raise OracleError("need replicates >= 10")
    if estimator not in ("oracle", "fitted"):
        raise OracleError(f"unknown estimator: {estimator}")
    blocks = BlockIntegrals(f, n, h)
    child_seeds = np.random.SeedSequence(seed).generate_state(replicates)
    ises = np.empty(replicates)
    methods = set()
    for rep in range(replicates):
        s = int(child_seeds[rep])
        g, latent = sample_graph(f, schedule, n, s)
        rho = schedule.rho(n)
        if estimator == "oracle":
            hist = oracle_estimator(g, OracleContext(latent, rho, f), h)
            values = fhat_values(hist, rho=rho)
        else:
            cfg = fit_cfg or _opt.SearchConfig(restarts=30, seed=s)
            hist = _opt.fit(g, h, cfg).best
            values = fhat_values(hist)
        res = aligned_ise(f, hist, values=values, blocks=blocks)
        ises[rep] = res.l2_sq
        methods.add(res.method)
    method = "exact" if methods == {"exact"} else "heuristic"
    return MiseResult(float(ises.mean()),
                      float(ises.std(ddof=1) / math.sqrt(replicates)),
                      replicates, method, seed)


# ---------------------------------------------------------------------------
# theoretical bound calculators (alpha and M come from graphon metadata)


def _h2_ab(bw: Bandwidth, a: int, b: int) -> float:
    return float(pair_counts(bw)[a - 1, b - 1])


def _require_holder(f: Graphon):
    if f.alpha is None or f.M is None:
        raise OracleError("bound calculators need Holder metadata (alpha, M)")


def prop1_bounds(f: Graphon, n: int, h: int, a: int, b: int,
                 rho_n: float = 1.0) -> tuple[float, float, float]:
    """Moment bounds for the oracle bin height at block (a, b):

    returns (mean tolerance, variance center, variance tolerance) where the
    mean of the bin height lies within the tolerance of rho * fbar_ab and its
    variance within the tolerance of the stated center.
    """
    _require_holder(f)
    from .graphon import block_average

    bw = Bandwidth(n, h)
    fbar, f2bar = block_average(f, a, b, h, n)
    h2 = _h2_ab(bw, a, b)
    alpha, M = f.alpha, f.M
    mean_bound = rho_n * M * (2.0 * n) ** (-alpha / 2.0)
    var_center = (rho_n * fbar - rho_n ** 2 * f2bar) / h2
    var_bound = (rho_n * M / (h2 * (2.0 * n) ** (alpha / 2.0))
                 + rho_n ** 2 * M ** 2 * (2.0 * n) ** -alpha)
    return mean_bound, var_center, var_bound


def lattice_block_sums(f: Graphon, n: int, h: int, a: int,
                       b: int) -> tuple[float, float]:
    """Averages of f and f^2 over the lattice points (i/(n+1), j/(n+1)) for
    index pairs i < j falling in block (a, b)."""
    bw = Bandwidth(n, h)
    if not (1 <= a <= bw.k and 1 <= b <= bw.k):
        raise OracleError(f"block ({a}, {b}) outside 1..{bw.k}")
    a, b = min(a, b), max(a, b)
    i_lo = (a - 1) * h + 1
    i_hi = a * h if a < bw.k else n
    j_lo = (b - 1) * h + 1
    j_hi = b * h if b < bw.k else n
    ii = np.arange(i_lo, i_hi + 1)
    jj = np.arange(j_lo, j_hi + 1)
    x = ii / (n + 1.0)
    y = jj / (n + 1.0)
    vals = f.eval(x[:, None], y[None, :])
    if a == b:
        mask = ii[:, None] < jj[None, :]
    else:
        mask = np.ones((ii.size, jj.size), dtype=bool)
    count = int(mask.sum())
    f_tilde = float(vals[mask].sum()) / count
    f2_tilde = float((vals[mask] ** 2).sum()) / count
    return f_tilde, f2_tilde


@dataclass(frozen=True)
class LemmaBounds:
    f_tilde: float
    f2_tilde: float
    f_bar: float
    f2_bar: float
    linear_gap_bound: float
    square_gap_bound: float
    local_osc: float
    local_osc_bound: float


def lemma_quadrature_bounds(f: Graphon, n: int, h: int, a: int,
                            b: int) -> LemmaBounds:
    """Deterministic quadrature gaps and their theoretical bounds:
    lattice-average vs block-average of f and f^2, plus the local oscillation
    of f within the block."""
    _require_holder(f)
    from .graphon import block_average, block_extent as _ext

    bw = Bandwidth(n, h)
    alpha, M = f.alpha, f.M
    fbar, f2bar = block_average(f, a, b, h, n)
    f_tilde, f2_tilde = lattice_block_sums(f, n, h, a, b)
    diag = 1.0 + 2.0 ** alpha * (a == b)
    linear_gap = M * 2.0 ** (alpha / 2.0) * n ** -alpha * diag
    square_gap = 2.0 * f.sup * M * 2.0 ** (alpha / 2.0) * n ** -alpha * diag
    edge = 1.0 + 2.0 ** (2 * alpha) * (a == bw.k or b == bw.k)
    osc_bound = M ** 2 * 2.0 ** alpha * (h / n) ** (2 * alpha) * edge
    x0, x1 = _ext(a, h, n)
    y0, y1 = _ext(b, h, n)
    area = (x1 - x0) * (y1 - y0)
    osc = integrate_2d(lambda x, y: (f.eval(x, y) - fbar) ** 2,
                       x0, x1, y0, y1, rel_tol=1e-8) / area
    return LemmaBounds(f_tilde, f2_tilde, fbar, f2bar, linear_gap,
                       square_gap, osc, osc_bound)
