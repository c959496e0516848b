"""Automatic bandwidth selection from the sorted degree profile."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .graph import Graph, degrees, estimate_density


class BandwidthError(ValueError):
    """Raised when the bandwidth rule is undefined for the given graph."""


@dataclass(frozen=True)
class BandwidthSelection:
    c: float
    m_hat: float
    b_hat: float
    rank_one_coeff: float
    M2_hat: float
    h_star_raw: float
    h: int

    @property
    def k(self) -> int:
        return self.n // self.h

    @property
    def r(self) -> int:
        return self.n % self.h

    n: int = 0


def _ginv(x: float) -> float:
    return 1.0 / x if x > 0 else 0.0


def degree_slope_fit(g: Graph, c: float = 4.0) -> tuple[float, float]:
    """Least-squares slope/intercept of the sorted degrees over the midrange
    window of half-width floor(c*sqrt(n)) around index floor(n/2)."""
    return slope_fit_from_degrees(np.sort(degrees(g)), c)


def slope_fit_from_degrees(d: np.ndarray, c: float) -> tuple[float, float]:
    """Midrange slope fit on an already-sorted degree vector."""
    d = np.asarray(d, dtype=float)
    n = d.size
    half = int(c * math.sqrt(n))
    if half < 1:
        raise BandwidthError("window too small: floor(c*sqrt(n)) = 0")
    center = n // 2                       # 1-based index floor(n/2)
    lo, hi = center - half, center + half
    if lo < 1 or hi > n:
        raise BandwidthError(f"degree window [{lo}, {hi}] escapes [1, {n}]")
    j = np.arange(-half, half + 1, dtype=float)
    window = d[lo - 1: hi]                # values at 1-based indices lo..hi
    m_hat = float(j @ window / (j @ j))
    b_hat = float(window.mean())
    return m_hat, b_hat


def rank_one_coefficient(g: Graph) -> float:
    """Scalar of the rank-one degree fit: ((d'd)^+)^2 * rho^+ * d'Ad."""
    d = degrees(g).astype(float)
    dtd = float(d @ d)
    dad = float(d @ g.adjacency @ d)
    rho = estimate_density(g)
    return _ginv(dtd) ** 2 * _ginv(rho) * dad


def estimate_M2(g: Graph, c: float = 4.0) -> float:
    """Plug-in estimate of the mean squared gradient magnitude of the graphon,
    built from the rank-one degree fit and the midrange slope."""
    m_hat, b_hat = degree_slope_fit(g, c)
    d = degrees(g).astype(float)
    dtd = float(d @ d)
    dad = float(d @ g.adjacency @ d)
    rho = estimate_density(g)
    return (2.0 * g.n ** 2 * _ginv(dtd) ** 4 * _ginv(rho) ** 2
            * dad ** 2 * m_hat ** 2 * b_hat ** 2)


def round_bandwidth(h_star_raw: float, n: int) -> int:
    """Deterministic rounding of the raw bandwidth: among candidates in
    [floor(h*)-6, ceil(h*)] pick the divisor-friendliest h (smallest n mod h,
    ties toward larger h), clamped to [2, n//2]."""
    lo = max(2, math.floor(h_star_raw) - 6)
    hi = max(lo, min(math.ceil(h_star_raw), n // 2))
    candidates = range(lo, hi + 1)
    best = min(candidates, key=lambda h: (n % h, -h))
    clamped = min(max(best, 2), max(n // 2, 2))
    if clamped != best:
        warnings.warn(f"bandwidth clamped from {best} to {clamped}")
    return clamped


def select_bandwidth(g: Graph, c: float = 4.0) -> BandwidthSelection:
    """Full automatic bandwidth rule: slope fit, M2 estimate, raw h*, and the
    rounded integer bandwidth."""
    m_hat, b_hat = degree_slope_fit(g, c)
    coeff = rank_one_coefficient(g)
    m2 = estimate_M2(g, c)
    rho = estimate_density(g)
    if m2 <= 0:
        raise BandwidthError(
            "flat degree profile (M2 = 0); supply the bandwidth manually"
        )
    h_star = (2.0 * m2 * rho) ** -0.25 * math.sqrt(g.n)
    # second algebraic form, straight from the degree statistics
    d = degrees(g).astype(float)
    dad = float(d @ g.adjacency @ d)
    direct = (2.0 * _ginv(float(d @ d)) ** 2 * dad
              * abs(m_hat * b_hat)) ** -0.5 * rho ** 0.25
    if not math.isclose(h_star, direct, rel_tol=1e-9):
        raise BandwidthError(
            f"bandwidth forms disagree: {h_star!r} vs {direct!r}"
        )
    h = round_bandwidth(h_star, g.n)
    return BandwidthSelection(c=c, m_hat=m_hat, b_hat=b_hat,
                              rank_one_coeff=coeff, M2_hat=m2,
                              h_star_raw=h_star, h=h, n=g.n)


def theorem_bound(M2: float, n: int, rho: float, h: float) -> float:
    """Oracle error bound at bandwidth h:
    M^2 * (2*(h/n)^2 + 1/n) + 1/(h^2*rho)."""
    if min(M2, n, rho, h) <= 0:
        raise ValueError("all arguments must be positive")
    return M2 * (2.0 * (h / n) ** 2 + 1.0 / n) + 1.0 / (h ** 2 * rho)


def theorem_bound_optimized(M2: float, n: int, rho: float) -> float:
    """Oracle error bound at the optimal bandwidth:
    M^2 * [(2/M) * (C(n,2)*rho)^(-1/2) + 1/n]."""
    if min(M2, n, rho) <= 0:
        raise ValueError("all arguments must be positive")
    m = math.sqrt(M2)
    return M2 * ((2.0 / m) / math.sqrt(math.comb(n, 2) * rho) + 1.0 / n)


def oracle_h_star(M2: float, n: int, rho: float) -> float:
    """Bandwidth minimizing the oracle bound: (2*M^2*rho)^(-1/4)*sqrt(n)."""
    return (2.0 * M2 * rho) ** -0.25 * math.sqrt(n)
