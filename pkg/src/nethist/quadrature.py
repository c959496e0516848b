"""Tensor Gauss-Legendre quadrature over rectangles, with refinement."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


class QuadratureError(RuntimeError):
    """Raised when quadrature fails to converge."""


@lru_cache(maxsize=None)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def gauss_legendre_2d(fn, x0, x1, y0, y1, order: int = 16) -> float:
    """Fixed-order tensor-product Gauss-Legendre integral of fn over a box.

    ``fn`` must accept broadcasting numpy arrays.
    """
    t, w = _leggauss(order)
    xs = 0.5 * (x1 - x0) * t + 0.5 * (x1 + x0)
    ys = 0.5 * (y1 - y0) * t + 0.5 * (y1 + y0)
    vals = fn(xs[:, None], ys[None, :])
    jac = 0.25 * (x1 - x0) * (y1 - y0)
    return float(jac * w @ vals @ w)


def integrate_2d(fn, x0, x1, y0, y1, rel_tol: float = 1e-9,
                 max_order: int = 256) -> float:
    """Integrate by doubling the Gauss order until successive estimates agree.

    Convergence is relative when the estimate is away from zero, absolute
    otherwise.
    """
    order = 8
    prev = gauss_legendre_2d(fn, x0, x1, y0, y1, order)
    while order < max_order:
        order *= 2
        cur = gauss_legendre_2d(fn, x0, x1, y0, y1, order)
        scale = max(abs(cur), 1e-12)
        if abs(cur - prev) <= rel_tol * scale:
            return cur
        prev = cur
    raise QuadratureError(
        f"no convergence at order {max_order} (last delta {abs(cur - prev):.3e})"
    )
