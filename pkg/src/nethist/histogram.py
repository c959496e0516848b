"""Equal-size block assignments, bin heights, and the histogram estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .graph import Graph, estimate_density


class AssignmentError(ValueError):
    """Raised when a membership vector violates the equal-size constraint."""


@dataclass(frozen=True)
class Bandwidth:
    """Decomposition n = h*k + r with k = floor(n/h) groups."""

    n: int
    h: int

    def __post_init__(self):
        if not 2 <= self.h <= self.n:
            raise AssignmentError(f"bandwidth h={self.h} outside [2, n={self.n}]")

    @property
    def k(self) -> int:
        return self.n // self.h

    @property
    def r(self) -> int:
        return self.n % self.h

    def group_size(self, a: int) -> int:
        """Size of group a (1-based); the last group absorbs the remainder."""
        return self.h + (self.r if a == self.k else 0)


def group_sizes(bw: Bandwidth) -> np.ndarray:
    sizes = np.full(bw.k, bw.h, dtype=np.int64)
    sizes[-1] += bw.r
    return sizes


def validate_assignment(z: np.ndarray, bw: Bandwidth) -> np.ndarray:
    """Check z has k-1 groups of size h and group k of size h+r; returns z as
    an int array with 1-based labels."""
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (bw.n,):
        raise AssignmentError(f"assignment length {z.shape} != n={bw.n}")
    counts = np.bincount(z, minlength=bw.k + 1)
    if counts[0] != 0 or z.min() < 1 or z.max() > bw.k:
        raise AssignmentError("labels must lie in 1..k")
    expected = group_sizes(bw)
    if not np.array_equal(counts[1:], expected):
        raise AssignmentError(
            f"group sizes {counts[1:].tolist()} != required {expected.tolist()}"
        )
    return z


def canonical_assignment(bw: Bandwidth) -> np.ndarray:
    """The sorted member of Z_k: h ones, h twos, ..., h+r copies of k."""
    return np.repeat(np.arange(1, bw.k + 1), group_sizes(bw))


def pair_counts(bw: Bandwidth) -> np.ndarray:
    """Number of node pairs per bin: n_ab = h_a*h_b off-diagonal, C(h_a,2) on."""
    sizes = group_sizes(bw)
    npairs = np.outer(sizes, sizes).astype(float)
    np.fill_diagonal(npairs, sizes * (sizes - 1) / 2)
    return npairs


@dataclass(frozen=True, eq=False)
class NetworkHistogram:
    """Fitted network histogram: assignment, sufficient statistics, heights."""

    bandwidth: Bandwidth
    z: np.ndarray
    edge_counts: np.ndarray   # e_ab, symmetric k x k
    pair_counts: np.ndarray   # n_ab, symmetric k x k
    rho_hat: float

    @property
    def bin_heights(self) -> np.ndarray:
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.pair_counts > 0,
                            self.edge_counts / self.pair_counts, 0.0)


def edge_count_matrix(g: Graph, z: np.ndarray, k: int) -> np.ndarray:
    """e_ab = number of edges between groups a and b (within-group on the
    diagonal), via the indicator-matrix product Z^T A Z."""
    zmat = np.zeros((g.n, k))
    zmat[np.arange(g.n), z - 1] = 1.0
    e = zmat.T @ g.adjacency @ zmat
    # Z^T A Z double-counts ordered pairs on the diagonal
    e[np.diag_indices(k)] /= 2.0
    return e


def bin_heights(g: Graph, z: np.ndarray, h: int) -> NetworkHistogram:
    """Histogram bin heights A-bar under assignment z at bandwidth h."""
    bw = Bandwidth(g.n, h)
    z = validate_assignment(z, bw)
    e = edge_count_matrix(g, z, bw.k)
    return NetworkHistogram(bw, z, e, pair_counts(bw), estimate_density(g))


def evaluate_fhat(hist: NetworkHistogram, x, y) -> np.ndarray:
    """The histogram estimate at (x, y): rho_hat^+ times the bin height at the
    block containing (x, y), with the generalized inverse at zero density."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any((x <= 0) | (x >= 1) | (y <= 0) | (y >= 1)):
        raise ValueError("evaluation points must lie strictly inside (0,1)")
    bw = hist.bandwidth
    ix = np.minimum(np.ceil(bw.n * x / bw.h).astype(int), bw.k) - 1
    iy = np.minimum(np.ceil(bw.n * y / bw.h).astype(int), bw.k) - 1
    rho_inv = 1.0 / hist.rho_hat if hist.rho_hat > 0 else 0.0
    return rho_inv * hist.bin_heights[ix, iy]


def bernoulli_block_ll(e: np.ndarray, npairs: np.ndarray) -> float:
    """Profile Bernoulli log-likelihood from block sufficient statistics,
    with the 0*log(0) = 0 convention for empty and full bins."""
    p = np.where(npairs > 0, e / np.maximum(npairs, 1), 0.0)
    total = xlogy(e, p) + xlogy(npairs - e, 1.0 - p)
    # each unordered block counted once: upper triangle plus diagonal
    return float(np.triu(total).sum())


def log_likelihood(g: Graph, z: np.ndarray, h: int) -> float:
    hist = bin_heights(g, z, h)
    return bernoulli_block_ll(hist.edge_counts, hist.pair_counts)


def normalized_log_likelihood(g: Graph, z: np.ndarray, h: int) -> float:
    """Log-likelihood scaled by the effective degrees of freedom C(n,2)*rho."""
    rho = estimate_density(g)
    if rho == 0:
        raise ValueError("normalized log-likelihood undefined at zero density")
    npairs_total = math.comb(g.n, 2)
    return log_likelihood(g, z, h) / (npairs_total * rho)


def histogram_ll(hist: NetworkHistogram) -> float:
    return bernoulli_block_ll(hist.edge_counts, hist.pair_counts)


def to_dict(hist: NetworkHistogram) -> dict:
    """JSON-ready summary of a fitted histogram."""
    bw = hist.bandwidth
    ll = histogram_ll(hist)
    norm = ll / (math.comb(bw.n, 2) * hist.rho_hat) if hist.rho_hat > 0 else None
    return {
        "h": bw.h,
        "k": bw.k,
        "r": bw.r,
        "rho_hat": hist.rho_hat,
        "bin_heights": hist.bin_heights.tolist(),
        "z": hist.z.tolist(),
        "log_likelihood": ll,
        "normalized_log_likelihood": norm,
    }
