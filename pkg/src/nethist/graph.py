"""Simple undirected graphs: loading, degrees, density, covariates."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np


class GraphError(ValueError):
    """Raised for malformed graph input or invalid graph queries."""


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable simple undirected graph.

    Adjacency is stored densely as a symmetric boolean matrix with a zero
    diagonal.  Node ids are dense integers 0..n-1; the original string
    tokens (if any) are kept in ``node_labels`` for reporting.
    """

    adjacency: np.ndarray
    node_labels: tuple[str, ...] | None = None
    _degrees: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = self.adjacency
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GraphError("adjacency must be a square matrix")
        if a.dtype != bool:
            object.__setattr__(self, "adjacency", a.astype(bool))
            a = self.adjacency
        if np.any(np.diag(a)):
            raise GraphError("self-loops are not allowed")
        if not np.array_equal(a, a.T):
            raise GraphError("adjacency must be symmetric")
        a.setflags(write=False)
        object.__setattr__(self, "_degrees", a.sum(axis=1).astype(np.int64))
        self._degrees.setflags(write=False)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edge_count(self) -> int:
        return int(self._degrees.sum()) // 2

    def has_edge(self, i: int, j: int) -> bool:
        return bool(self.adjacency[i, j])

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])

    def label(self, i: int) -> str:
        if self.node_labels is None:
            return str(i)
        return self.node_labels[i]


def degrees(g: Graph) -> np.ndarray:
    """Degree vector d with d[i] = number of neighbors of node i."""
    return g._degrees


def estimate_density(g: Graph) -> float:
    """Sample proportion of present edges among the n-choose-2 possible."""
    if g.n < 2:
        raise GraphError("density undefined for n < 2")
    return g.edge_count / (g.n * (g.n - 1) / 2)


def from_edges(n: int, edges, node_labels=None) -> Graph:
    """Build a Graph from an iterable of (i, j) integer pairs."""
    a = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        if i == j:
            continue
        a[i, j] = True
        a[j, i] = True
    labels = tuple(node_labels) if node_labels is not None else None
    return Graph(a, labels)


def load_edge_list(path, directed_collapse: bool = True) -> tuple[Graph, dict]:
    """Read a text edge list: one edge per line, comma- or whitespace-separated
    node tokens, '#' comment lines skipped.  Tokens are mapped to dense ids in
    first-appearance order.

    Returns the graph and a report dict with counts of dropped self-loops and
    duplicate pairs.  With ``directed_collapse`` the union of (i,j) and (j,i)
    yields a single undirected edge (duplicates in either direction counted as
    duplicates).
    """
    ids: dict[str, int] = {}
    pairs: list[tuple[int, int]] = []
    dropped_self = 0
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise GraphError(f"cannot read edge list {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.replace(",", " ").split()
            if len(tokens) != 2:
                raise GraphError(
                    f"{path}:{lineno}: expected 2 tokens, got {len(tokens)}"
                )
            u, v = tokens
            for tok in (u, v):
                if tok not in ids:
                    ids[tok] = len(ids)
            if u == v:
                dropped_self += 1
                continue
            pairs.append((ids[u], ids[v]))
    if not ids:
        raise GraphError(f"empty edge list: {path}")
    n = len(ids)
    a = np.zeros((n, n), dtype=bool)
    dropped_dup = 0
    for i, j in pairs:
        if a[i, j]:
            dropped_dup += 1
            continue
        a[i, j] = True
        if directed_collapse:
            a[j, i] = True
        elif not a[j, i]:
            # without collapse an edge still needs both directions present;
            # we only support simple graphs, so treat any mention as an edge
            a[j, i] = True
    labels = tuple(tok for tok, _ in sorted(ids.items(), key=lambda kv: kv[1]))
    g = Graph(a, labels)
    report = {"dropped_self_loops": dropped_self, "dropped_duplicates": dropped_dup}
    return g, report


def filter_zero_degree(g: Graph) -> tuple[Graph, dict]:
    """Remove isolated nodes; returns the reduced graph and a report."""
    keep = np.flatnonzero(degrees(g) > 0)
    removed = g.n - keep.size
    a = g.adjacency[np.ix_(keep, keep)].copy()
    labels = None
    if g.node_labels is not None:
        labels = tuple(g.node_labels[i] for i in keep)
    return Graph(a, labels), {"removed_zero_degree": int(removed)}


def filter_missing_covariates(g: Graph, table: "CovariateTable",
                              required) -> tuple[Graph, dict]:
    """Remove nodes missing any of the required covariate columns."""
    labels = node_labels(g)
    keep = []
    for i, lab in enumerate(labels):
        row = table.rows.get(lab)
        if row is not None and all(row.get(c) is not None for c in required):
            keep.append(i)
    keep = np.asarray(keep, dtype=np.int64)
    removed = g.n - keep.size
    a = g.adjacency[np.ix_(keep, keep)].copy()
    new_labels = tuple(labels[i] for i in keep)
    return Graph(a, new_labels), {"removed_missing_covariates": int(removed)}


MISSING = None


@dataclass(frozen=True)
class CovariateTable:
    """Per-node categorical/integer covariates keyed by node label."""

    columns: tuple[str, ...]
    rows: dict  # label -> dict column -> int | None

    def column(self, name: str, labels) -> list:
        """Values of one covariate in the given node-label order."""
        if name not in self.columns:
            raise GraphError(f"unknown covariate column: {name}")
        out = []
        for lab in labels:
            if lab not in self.rows:
                raise GraphError(f"no covariate row for node {lab}")
            out.append(self.rows[lab].get(name))
        return out


def node_labels(g: Graph) -> tuple[str, ...]:
    if g.node_labels is not None:
        return g.node_labels
    return tuple(str(i) for i in range(g.n))


def load_covariates(path, labels, schema: dict | None = None) -> CovariateTable:
    """Read a covariate CSV with a header row; first column is the node id.

    ``labels`` is the set of node ids allowed to appear.  ``schema``
    optionally maps column name -> (lo, hi) inclusive code range.  Rows for
    unknown ids are rejected; blank cells become missing markers.
    """
    known = set(labels)
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise GraphError(f"cannot read covariates {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise GraphError(f"empty covariate file: {path}") from None
        columns = tuple(c.strip() for c in header[1:])
        if schema is not None:
            missing_cols = set(schema) - set(columns)
            if missing_cols:
                raise GraphError(f"schema columns absent from file: {missing_cols}")
        rows: dict = {}
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not c.strip() for c in rec):
                continue
            node = rec[0].strip()
            if node not in known:
                raise GraphError(f"{path}:{lineno}: unknown node id {node!r}")
            if node in rows:
                raise GraphError(f"{path}:{lineno}: duplicate node id {node!r}")
            vals = {}
            for name, cell in zip(columns, rec[1:]):
                cell = cell.strip()
                if cell == "":
                    vals[name] = MISSING
                    continue
                try:
                    v = int(cell)
                except ValueError:
                    raise GraphError(
                        f"{path}:{lineno}: non-integer covariate {cell!r}"
                    ) from None
                if schema is not None and name in schema:
                    lo, hi = schema[name]
                    if not lo <= v <= hi:
                        raise GraphError(
                            f"{path}:{lineno}: {name}={v} outside [{lo},{hi}]"
                        )
                vals[name] = v
            rows[node] = vals
    return CovariateTable(columns, rows)
