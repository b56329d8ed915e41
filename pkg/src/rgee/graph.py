"""Sparse graph container, edge-list ingestion and label bookkeeping."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp


class GraphFormatError(ValueError):
    """A malformed line in an edge-list or label file."""


class GraphBoundsError(IndexError):
    """A vertex index outside the declared vertex range."""


@dataclass(frozen=True)
class EdgeListFormat:
    """How to read and write a whitespace separated ``src dst [weight]`` file.

    Lines starting with ``#`` or ``%`` are comments. With ``header=True`` the
    first data line holds the vertex count alone, otherwise the count is one
    plus the largest index seen.
    """

    one_based: bool = False
    header: bool = False
    directed: bool = False


@dataclass(frozen=True, eq=False)
class SparseGraph:
    """Immutable adjacency matrix in compressed-row layout.

    Use :meth:`from_edges` or :meth:`from_matrix` to build one; both enforce
    a zero diagonal, nonnegative weights and, for undirected graphs, symmetry.
    """

    adj: sp.csr_array
    undirected: bool = True

    @classmethod
    def from_matrix(cls, matrix, undirected: bool = True, validate: bool = True) -> SparseGraph:
        adj = sp.csr_array(matrix, dtype=np.float64, copy=True)
        if adj.shape[0] != adj.shape[1]:
            raise ValueError(f"adjacency must be square, got {adj.shape}")
        if validate:
            coo = adj.tocoo()
            off = coo.row != coo.col
            adj = sp.csr_array((coo.data[off], (coo.row[off], coo.col[off])), shape=adj.shape)
            adj.eliminate_zeros()
            if adj.nnz and adj.data.min() < 0:
                raise ValueError("edge weights must be nonnegative")
            if undirected and (abs(adj - adj.T) > 0).nnz:
                raise ValueError("undirected graph requires a symmetric adjacency")
        adj.sum_duplicates()
        adj.sort_indices()
        for arr in (adj.data, adj.indices, adj.indptr):
            arr.flags.writeable = False
        return cls(adj=adj, undirected=undirected)

    @classmethod
    def from_edges(cls, n: int, src, dst, weights=None, undirected: bool = True) -> SparseGraph:
        """Build from parallel edge arrays; duplicates are summed, self-loops dropped.

        For undirected graphs ``(i, j)`` and ``(j, i)`` name the same edge.
        """
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        w = np.ones(len(src)) if weights is None else np.asarray(weights, dtype=np.float64)
        if len(src) and (min(src.min(), dst.min()) < 0 or max(src.max(), dst.max()) >= n):
            raise GraphBoundsError(f"edge endpoint outside [0, {n})")
        if len(w) and w.min() < 0:
            raise ValueError("edge weights must be nonnegative")
        keep = src != dst
        src, dst, w = src[keep], dst[keep], w[keep]
        if undirected:
            lo, hi = np.minimum(src, dst), np.maximum(src, dst)
            upper = sp.coo_array((w, (lo, hi)), shape=(n, n)).tocsr()
            upper.sum_duplicates()
            adj = upper + upper.T
        else:
            adj = sp.coo_array((w, (src, dst)), shape=(n, n)).tocsr()
        return cls.from_matrix(adj, undirected=undirected, validate=False)

    @property
    def n(self) -> int:
        return self.adj.shape[0]

    @property
    def n_edges(self) -> int:
        """Edge count; each undirected edge counted once."""
        return self.adj.nnz // 2 if self.undirected else self.adj.nnz

    @property
    def is_binary(self) -> bool:
        return bool(np.all(self.adj.data == 1.0))

    def degrees(self) -> np.ndarray:
        """Number of incident edges (in + out for directed graphs)."""
        out = np.diff(self.adj.indptr)
        if self.undirected:
            return out
        return out + np.bincount(self.adj.indices, minlength=self.n)

    def edges(self):
        """Return ``(src, dst, weight)`` arrays; undirected edges once with src < dst."""
        coo = self.adj.tocoo()
        if self.undirected:
            keep = coo.row < coo.col
            return coo.row[keep], coo.col[keep], coo.data[keep]
        return coo.row, coo.col, coo.data

    def todense(self) -> np.ndarray:
        return self.adj.toarray()

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseGraph):
            return NotImplemented
        return (
            self.undirected == other.undirected
            and self.adj.shape == other.adj.shape
            and np.array_equal(self.adj.indptr, other.adj.indptr)
            and np.array_equal(self.adj.indices, other.adj.indices)
            and np.array_equal(self.adj.data, other.adj.data)
        )

    __hash__ = None


@dataclass(frozen=True)
class Dataset:
    """A graph with observed labels and, for simulations, latent labels."""

    graph: SparseGraph
    observed: np.ndarray
    latent: np.ndarray | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "observed", as_labels(self.observed, self.graph.n))
        if self.latent is not None:
            object.__setattr__(self, "latent", as_labels(self.latent, self.graph.n))


def as_labels(y, n: int | None = None) -> np.ndarray:
    """Validate a label vector: integers in ``{0, 1, ..., K}`` with 0 meaning unknown."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError("labels must be integers")
    arr = arr.astype(np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError("labels must be nonnegative")
    if n is not None and arr.size != n:
        raise ValueError(f"label vector has length {arr.size}, graph has {n} vertices")
    return arr


def num_classes(y) -> int:
    """K: the largest label present, 0 if every label is unknown."""
    y = np.asarray(y)
    return int(y.max()) if y.size else 0


def class_counts(y) -> np.ndarray:
    """Per-class counts ``n_k`` for ``k = 1..K``."""
    y = as_labels(y)
    return np.bincount(y, minlength=num_classes(y) + 1)[1:]


def compact_labels(y) -> tuple[np.ndarray, dict[int, int]]:
    """Renumber nonzero labels to ``1..K'`` preserving order; zeros stay zero.

    Returns the new labels and the ``old -> new`` map.
    """
    y = as_labels(y)
    present = np.unique(y[y > 0])
    lookup = np.zeros(num_classes(y) + 1, dtype=np.int64)
    lookup[present] = np.arange(1, len(present) + 1)
    return lookup[y], {int(k): int(v) for k, v in zip(present, lookup[present])}


def to_undirected(g: SparseGraph) -> SparseGraph:
    """Symmetrize, keeping the larger weight when both directions exist."""
    if g.undirected:
        return g
    sym = g.adj.maximum(g.adj.T)
    return SparseGraph.from_matrix(sym, undirected=True, validate=False)


def remove_singletons(d: Dataset) -> tuple[Dataset, dict[int, int]]:
    """Drop zero-degree vertices. Returns the reduced dataset and ``old -> new`` map."""
    kept = np.flatnonzero(d.graph.degrees() > 0)
    sub = d.graph.adj[kept][:, kept]
    graph = SparseGraph.from_matrix(sub, undirected=d.graph.undirected, validate=False)
    latent = None if d.latent is None else d.latent[kept]
    reduced = Dataset(graph, d.observed[kept], latent, name=d.name)
    return reduced, {int(old): new for new, old in enumerate(kept)}


def load_edge_list(path, fmt: EdgeListFormat = EdgeListFormat()) -> SparseGraph:
    path = Path(path)
    src, dst, wts = [], [], []
    declared = None
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line[0] in "#%":
                continue
            parts = line.split()
            if fmt.header and declared is None:
                if len(parts) != 1:
                    raise GraphFormatError(f"{path}:{lineno}: expected vertex count header")
                declared = _parse(int, parts[0], path, lineno)
                continue
            if len(parts) not in (2, 3):
                raise GraphFormatError(f"{path}:{lineno}: expected 'src dst [weight]', got {line!r}")
            src.append(_parse(int, parts[0], path, lineno))
            dst.append(_parse(int, parts[1], path, lineno))
            wts.append(_parse(float, parts[2], path, lineno) if len(parts) == 3 else 1.0)

    offset = 1 if fmt.one_based else 0
    src = np.asarray(src, dtype=np.int64) - offset
    dst = np.asarray(dst, dtype=np.int64) - offset
    if fmt.header and declared is None:
        raise GraphFormatError(f"{path}: missing vertex count header")
    if declared is not None:
        n = declared
    else:
        n = int(max(src.max(), dst.max())) + 1 if len(src) else 0
    bad = np.flatnonzero((src < 0) | (dst < 0) | (src >= n) | (dst >= n))
    if len(bad):
        i = bad[0]
        raise GraphBoundsError(
            f"{path}: edge ({src[i] + offset}, {dst[i] + offset}) outside vertex range of size {n}"
        )
    return SparseGraph.from_edges(n, src, dst, wts, undirected=not fmt.directed)


def write_edge_list(g: SparseGraph, path, fmt: EdgeListFormat = EdgeListFormat(header=True)) -> None:
    """Write ``g`` so that :func:`load_edge_list` with the same format reproduces it.

    Without a header, trailing isolated vertices are lost on reload.
    """
    if fmt.directed == g.undirected:
        raise ValueError("format directedness does not match the graph")
    src, dst, w = g.edges()
    offset = 1 if fmt.one_based else 0
    binary = g.is_binary
    with Path(path).open("w") as fh:
        if fmt.header:
            fh.write(f"{g.n}\n")
        for i, j, x in zip(src.tolist(), dst.tolist(), w.tolist()):
            if binary:
                fh.write(f"{i + offset} {j + offset}\n")
            else:
                fh.write(f"{i + offset} {j + offset} {x!r}\n")


def load_labels(path, n: int | None = None) -> np.ndarray:
    """One integer label per line, 0 for unknown."""
    path = Path(path)
    out = []
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line[0] == "#":
                continue
            out.append(_parse(int, line, path, lineno))
    try:
        return as_labels(np.asarray(out, dtype=np.int64), n)
    except ValueError as exc:
        raise GraphFormatError(f"{path}: {exc}") from exc


def write_labels(y, path) -> None:
    np.savetxt(path, as_labels(y), fmt="%d")


def write_graph_csv(g: SparseGraph, path) -> None:
    src, dst, w = g.edges()
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["src", "dst", "weight"])
        writer.writerows(zip(src.tolist(), dst.tolist(), w.tolist()))


def write_labels_csv(columns: dict[str, np.ndarray], path) -> None:
    names = list(columns)
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["vertex", *names])
        for i, row in enumerate(zip(*(np.asarray(columns[c]).tolist() for c in names))):
            writer.writerow([i, *row])


def _parse(kind, token, path, lineno):
    try:
        return kind(token)
    except ValueError:
        raise GraphFormatError(f"{path}:{lineno}: cannot parse {token!r} as {kind.__name__}") from None
