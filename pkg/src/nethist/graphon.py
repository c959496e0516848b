"""Graphon families, exchangeable-graph sampling, and block averages."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

from .graph import Graph
from .quadrature import integrate_2d


class GraphonError(ValueError):
    """Raised for invalid graphon parameters or sampling preconditions."""


@dataclass(frozen=True)
class Graphon:
    """Symmetric edge-probability kernel on (0,1)^2 with smoothness metadata.

    ``alpha`` and ``M`` describe the Holder class of the kernel; they are
    None for non-Holder families (piecewise-constant blocks).  ``sup`` is an
    upper bound on the kernel, used to validate Bernoulli probabilities.
    """

    fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    alpha: float | None = 1.0
    M: float | None = None
    sup: float = 1.0
    normalized: bool = False
    name: str = "custom"

    def eval(self, x, y):
        return self.fn(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def __call__(self, x, y):
        return self.eval(x, y)


@dataclass(frozen=True)
class SparsitySchedule:
    """Target edge-density scale as a function of n: rho_n = scale * n**-decay."""

    scale: float = 1.0
    decay: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.scale <= 1.0:
            raise GraphonError("scale must lie in (0, 1]")
        if self.decay < 0:
            raise GraphonError("decay must be nonnegative; rho_n is non-increasing")

    def rho(self, n: int) -> float:
        return self.scale * float(n) ** (-self.decay)

    def degree_growth_ok(self, n_range) -> bool:
        """Check n * rho_n / log^3 n is increasing over the configured range."""
        vals = [n * self.rho(n) / math.log(n) ** 3 for n in n_range]
        return all(b > a for a, b in zip(vals, vals[1:]))


@dataclass(frozen=True)
class LatentSample:
    """The latent uniforms indexing the graphon, plus the seed that drew them."""

    xi: np.ndarray
    seed: int


def builtin_graphon(name: str, **params) -> Graphon:
    """Construct one of the built-in normalized graphon families.

    Families:
      constant          -- f = 1.
      exp (beta)        -- f = c*exp(-beta*(x+y)), c chosen so the integral is 1.
      blocks (heights)  -- piecewise constant on an equal grid; non-Holder.
      beta (a, b)       -- c*(Binv(x)Binv(y) + Binv(1-x)Binv(1-y)) built from
                           the Beta(a,b) quantile function; its degree marginal
                           is constant.
    """
    if name == "constant":
        return Graphon(lambda x, y: np.ones(np.broadcast(x, y).shape),
                       alpha=1.0, M=0.0, sup=1.0, normalized=True, name="constant")

    if name == "exp":
        beta = float(params.get("beta", 1.0))
        if beta <= 0:
            raise GraphonError("exp family needs beta > 0")
        c = beta ** 2 / (1.0 - math.exp(-beta)) ** 2
        fn = lambda x, y: c * np.exp(-beta * (x + y))
        # gradient magnitude sup: sqrt(2)*beta*f, maximized at the origin
        return Graphon(fn, alpha=1.0, M=math.sqrt(2.0) * beta * c, sup=c,
                       normalized=True, name="exp")

    if name == "blocks":
        heights = np.asarray(params["heights"], dtype=float)
        if heights.ndim != 2 or heights.shape[0] != heights.shape[1]:
            raise GraphonError("blocks family needs a square height matrix")
        if not np.allclose(heights, heights.T):
            raise GraphonError("block heights must be symmetric")
        k = heights.shape[0]
        normalize = bool(params.get("normalize", True))
        if normalize:
            heights = heights / heights.mean()

        def fn(x, y, _p=heights, _k=k):
            ix = np.minimum((np.asarray(x) * _k).astype(int), _k - 1)
            iy = np.minimum((np.asarray(y) * _k).astype(int), _k - 1)
            return _p[ix, iy]

        return Graphon(fn, alpha=None, M=None, sup=float(heights.max()),
                       normalized=normalize, name="blocks")

    if name == "beta":
        a = float(params.get("a", 1.0))
        b = float(params.get("b", 1.0))
        if a <= 0 or b <= 0:
            raise GraphonError("beta family needs a, b > 0")
        mu = a / (a + b)
        c = 1.0 / (mu ** 2 + (1.0 - mu) ** 2)
        dist = stats.beta(a, b)

        def fn(x, y, _c=c, _q=dist.ppf):
            qx, qy = _q(x), _q(y)
            qx1, qy1 = _q(1.0 - np.asarray(x)), _q(1.0 - np.asarray(y))
            return _c * (qx * qy + qx1 * qy1)

        # numeric bound of f and its gradient on a grid (metadata only)
        grid = np.linspace(1e-4, 1 - 1e-4, 201)
        vals = fn(grid[:, None], grid[None, :])
        eps = 1e-5
        gx = (fn(grid[:, None] + eps, grid[None, :]) - vals) / eps
        gy = (fn(grid[:, None], grid[None, :] + eps) - vals) / eps
        m_est = float(np.sqrt(gx ** 2 + gy ** 2).max()) * 1.05
        return Graphon(fn, alpha=1.0, M=m_est, sup=float(vals.max()) * 1.05,
                       normalized=True, name="beta")

    raise GraphonError(f"unknown graphon family: {name}")


def sample_graph(f: Graphon, schedule: SparsitySchedule, n: int,
                 seed: int) -> tuple[Graph, LatentSample]:
    """Draw (A, xi): xi ~ iid Uniform(0,1)^n, then independent Bernoulli edges
    with probability rho_n * f(xi_i, xi_j) for i < j.  Deterministic in seed.
    """
    if n < 2:
        raise GraphonError("need n >= 2")
    rho = schedule.rho(n)
    if rho * f.sup > 1.0 + 1e-12:
        raise GraphonError(
            f"edge probability overflow: rho_n * sup f = {rho * f.sup:.4g} > 1"
        )
    rng = np.random.Generator(np.random.Philox(seed))
    xi = rng.uniform(size=n)
    p = rho * f.eval(xi[:, None], xi[None, :])
    u = rng.random((n, n))
    upper = np.triu(u < p, k=1)
    adj = upper | upper.T
    return Graph(adj), LatentSample(xi, seed)


def block_extent(a: int, h: int, n: int) -> tuple[float, float]:
    """Interval on (0,1) covered by block index a (1-based); the k-th block is
    extended to 1 to absorb the remainder group."""
    k = n // h
    if not 1 <= a <= k:
        raise GraphonError(f"block index {a} outside 1..{k}")
    lo = (a - 1) * h / n
    hi = a * h / n if a < k else 1.0
    return lo, hi


def block_average(f: Graphon, a: int, b: int, h: int, n: int,
                  rel_tol: float = 1e-9) -> tuple[float, float]:
    """Averages of f and f^2 over the block region omega_ab."""
    x0, x1 = block_extent(a, h, n)
    y0, y1 = block_extent(b, h, n)
    area = (x1 - x0) * (y1 - y0)
    fbar = integrate_2d(f.eval, x0, x1, y0, y1, rel_tol=rel_tol) / area
    f2bar = integrate_2d(lambda x, y: f.eval(x, y) ** 2,
                         x0, x1, y0, y1, rel_tol=rel_tol) / area
    return fbar, f2bar
