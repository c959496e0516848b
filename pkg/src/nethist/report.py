"""Output artifacts: fixed-precision JSON, matrix CSVs, covariate summaries,
and matplotlib figure rendering for the CLI report path."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .graph import CovariateTable, Graph, GraphError
from .histogram import group_sizes


def _round_sig(x: float, digits: int = 10) -> float:
    if x == 0 or not math.isfinite(x):
        return x
    return round(x, digits - 1 - int(math.floor(math.log10(abs(x)))))


def _roundtree(obj, digits: int = 10):
    if isinstance(obj, float):
        return _round_sig(obj, digits)
    if isinstance(obj, dict):
        return {k: _roundtree(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_roundtree(v, digits) for v in obj]
    return obj


def write_json(path, payload: dict, digits: int = 10) -> None:
    """Serialize with floats rounded to a fixed number of significant digits
    so re-runs produce byte-identical files."""
    Path(path).write_text(
        json.dumps(_roundtree(payload, digits), indent=2, sort_keys=True) + "\n"
    )


def write_matrix_csv(path, matrix: np.ndarray) -> None:
    """Row-major CSV with a header row of 1-based bin indices."""
    matrix = np.asarray(matrix)
    k = matrix.shape[1]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["bin"] + [str(b + 1) for b in range(k)])
        for a, row in enumerate(matrix):
            writer.writerow([str(a + 1)] + [f"{v:.10g}" for v in row])


def write_assignment_csv(path, g: Graph, z: np.ndarray) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_label", "group"])
        for i in range(g.n):
            writer.writerow([g.label(i), int(z[i])])


def render_heatmap(path, matrix: np.ndarray, title: str = "",
                   order: np.ndarray | None = None) -> None:
    """Render a bin matrix as a heatmap image (upward y-axis, 1-based ticks)."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    m = np.asarray(matrix)
    if order is not None:
        m = m[np.ix_(order, order)]
    fig, ax = plt.subplots(figsize=(5, 4.2))
    im = ax.imshow(m, origin="lower", cmap="viridis",
                   extent=(0.5, m.shape[1] + 0.5, 0.5, m.shape[0] + 0.5))
    ax.set_xlabel("bin")
    ax.set_ylabel("bin")
    if title:
        ax.set_title(title)
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


@dataclass(frozen=True)
class CovariateSummary:
    column: str
    bin_means: np.ndarray          # mean covariate value per bin (nan if all missing)
    category_counts: dict          # category value -> per-bin counts
    ordering: np.ndarray           # bins sorted by mean, ties by bin index

    def to_dict(self) -> dict:
        return {
            "column": self.column,
            "bin_means": [None if not math.isfinite(v) else v
                          for v in self.bin_means.tolist()],
            "category_counts": {str(c): counts.tolist()
                                for c, counts in self.category_counts.items()},
            "ordering": (self.ordering + 1).tolist(),
        }


def covariate_summary(z: np.ndarray, bw, table: CovariateTable,
                      column: str, labels) -> CovariateSummary:
    """Per-bin covariate means and category counts, with the post-hoc bin
    ordering induced by the means."""
    values = table.column(column, labels)
    k = bw.k
    sizes = group_sizes(bw)
    sums = np.zeros(k)
    counts = np.zeros(k)
    categories: dict = {}
    for i, v in enumerate(values):
        a = int(z[i]) - 1
        if v is None:
            continue
        sums[a] += v
        counts[a] += 1
        if v not in categories:
            categories[v] = np.zeros(k, dtype=np.int64)
        categories[v][a] += 1
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    per_bin_totals = sum(categories.values()) if categories else np.zeros(k)
    missing_per_bin = sizes - per_bin_totals
    if np.any(missing_per_bin < 0):
        raise GraphError("covariate rows exceed group sizes")
    order = np.lexsort((np.arange(k), np.where(np.isfinite(means), means,
                                               np.inf)))
    return CovariateSummary(column, means,
                            dict(sorted(categories.items())), order)
