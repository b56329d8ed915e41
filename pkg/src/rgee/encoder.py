"""One-hot graph encoder embedding."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .graph import SparseGraph, as_labels, class_counts


class DegenerateClassError(ValueError):
    """A class index in ``1..K`` has no labelled vertex."""


@dataclass(frozen=True)
class ColumnBlock:
    offset: int
    width: int
    tag: str


@dataclass(frozen=True)
class Embedding:
    """Dense ``n x d`` vertex embedding with a record of its column blocks."""

    values: np.ndarray
    blocks: tuple[ColumnBlock, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError("embedding values must be two-dimensional")
        blocks = tuple(self.blocks) or (ColumnBlock(0, values.shape[1], "embedding"),)
        if sum(b.width for b in blocks) != values.shape[1]:
            raise ValueError("column blocks do not cover the embedding width")
        if not np.all(np.isfinite(values)):
            raise ValueError("embedding contains non-finite values")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def retag(self, prefix: str) -> Embedding:
        return Embedding(self.values, tuple(ColumnBlock(b.offset, b.width, f"{prefix}{b.tag}") for b in self.blocks))

    @staticmethod
    def concat(parts) -> Embedding:
        """Column-concatenate embeddings, shifting block offsets."""
        parts = list(parts)
        if not parts:
            raise ValueError("nothing to concatenate")
        blocks, offset = [], 0
        for part in parts:
            for b in part.blocks:
                blocks.append(ColumnBlock(offset + b.offset, b.width, b.tag))
            offset += part.d
        return Embedding(np.hstack([p.values for p in parts]), tuple(blocks))


def _check_counts(y) -> np.ndarray:
    counts = class_counts(y)
    if counts.size == 0:
        raise DegenerateClassError("no labelled vertices")
    empty = np.flatnonzero(counts == 0) + 1
    if empty.size:
        raise DegenerateClassError(f"classes {empty.tolist()} are empty; compact the labels first")
    return counts


def one_hot_weights(y) -> sp.csr_array:
    """``W[i, k-1] = 1/n_k`` when ``Y(i) = k``; rows of unlabelled vertices are zero."""
    y = as_labels(y)
    counts = _check_counts(y)
    rows = np.flatnonzero(y)
    cls = y[rows] - 1
    return sp.csr_array((1.0 / counts[cls], (rows, cls)), shape=(len(y), len(counts)))


def _dense_weights(y, counts) -> np.ndarray:
    W = np.zeros((len(y), len(counts)))
    rows = np.flatnonzero(y)
    W[rows, y[rows] - 1] = 1.0 / counts[y[rows] - 1]
    return W


def gee_embed(g: SparseGraph, y, tag: str = "gee") -> Embedding:
    """``Z = A W``: row ``i`` holds the mean edge weight from ``i`` into each class.

    Costs one pass over the stored edges plus ``O(nK)``.
    """
    y = as_labels(y, g.n)
    counts = _check_counts(y)
    Z = g.adj @ _dense_weights(y, counts)
    return Embedding(Z, (ColumnBlock(0, len(counts), tag),))
