"""Stochastic block model simulation and block-matrix algebra.

Latent classes are numbered ``1..K0``. A merge map folds them into the
coarser observed classes ``1..K``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import SparseGraph, as_labels

# rows of the upper triangle sampled per RNG call; fixed so output is seed-stable
_CHUNK_ROWS = 256


class SbmParameterError(ValueError):
    pass


@dataclass(frozen=True)
class SbmParams:
    """Latent block model: ``B0`` (K0 x K0), class prior and optional degree spec.

    ``degree`` is ``None`` for a plain SBM or ``(lo, hi)`` for degree parameters
    drawn from ``Uniform(lo, hi)``.
    """

    B0: np.ndarray
    prior: np.ndarray
    degree: tuple[float, float] | None = None

    def __post_init__(self):
        B0 = np.asarray(self.B0, dtype=np.float64)
        prior = np.asarray(self.prior, dtype=np.float64)
        if B0.ndim != 2 or B0.shape[0] != B0.shape[1]:
            raise SbmParameterError(f"B0 must be square, got shape {B0.shape}")
        if np.any(B0 < 0) or np.any(B0 > 1):
            raise SbmParameterError("B0 entries must lie in [0, 1]")
        if prior.shape != (B0.shape[0],):
            raise SbmParameterError("prior length must match B0")
        if np.any(prior < 0) or abs(prior.sum() - 1.0) > 1e-12:
            raise SbmParameterError("prior must be nonnegative and sum to 1")
        if self.degree is not None:
            lo, hi = map(float, self.degree)
            if not 0.0 <= lo <= hi <= 1.0:
                raise SbmParameterError("degree range must satisfy 0 <= lo <= hi <= 1")
            object.__setattr__(self, "degree", (lo, hi))
        B0.flags.writeable = False
        prior.flags.writeable = False
        object.__setattr__(self, "B0", B0)
        object.__setattr__(self, "prior", prior)

    @property
    def K0(self) -> int:
        return self.B0.shape[0]

    def to_dict(self) -> dict:
        return {
            "B0": self.B0.tolist(),
            "prior": self.prior.tolist(),
            "degree": None if self.degree is None else {"uniform": list(self.degree)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> SbmParams:
        degree = d.get("degree")
        if isinstance(degree, dict):
            degree = tuple(degree["uniform"])
        return cls(np.asarray(d["B0"]), np.asarray(d["prior"]), degree)


@dataclass(frozen=True)
class MergeMap:
    """Observed class (1-based) of each latent class ``1..K0``."""

    classes: tuple[int, ...]

    def __post_init__(self):
        classes = tuple(int(c) for c in self.classes)
        if not classes or min(classes) < 1:
            raise SbmParameterError("merge map targets must be >= 1")
        missing = set(range(1, max(classes) + 1)) - set(classes)
        if missing:
            raise SbmParameterError(f"observed classes {sorted(missing)} have no latent preimage")
        object.__setattr__(self, "classes", classes)

    @classmethod
    def from_groups(cls, groups) -> MergeMap:
        """``[[1, 2], [3, 4]]`` means latent 1, 2 -> observed 1 and 3, 4 -> observed 2."""
        K0 = sum(len(g) for g in groups)
        out = [0] * K0
        for target, group in enumerate(groups, start=1):
            for latent in group:
                out[latent - 1] = target
        return cls(tuple(out))

    @classmethod
    def identity(cls, K0: int) -> MergeMap:
        return cls(tuple(range(1, K0 + 1)))

    @property
    def K0(self) -> int:
        return len(self.classes)

    @property
    def K(self) -> int:
        return max(self.classes)

    def preimage(self, observed: int) -> list[int]:
        return [k for k, c in enumerate(self.classes, start=1) if c == observed]

    def groups(self) -> list[list[int]]:
        return [self.preimage(a) for a in range(1, self.K + 1)]


def sample_sbm(p: SbmParams, n: int, seed) -> tuple[SparseGraph, np.ndarray]:
    """Draw an undirected (DC-)SBM graph and its latent labels.

    Each pair ``i < j`` is an edge with probability
    ``theta_i * theta_j * B0[Y0(i), Y0(j)]`` and is then mirrored, so an
    asymmetric ``B0`` is read in (lower index, higher index) order.
    """
    if n < 2:
        raise SbmParameterError("need at least two vertices")
    rng = np.random.default_rng(seed)
    latent, theta = _draw_vertices(p, n, rng)
    return _draw_edges(p, latent, theta, rng), latent + 1


def sample_multiplex(p: SbmParams, n: int, seed, n_graphs: int) -> tuple[list[SparseGraph], np.ndarray]:
    """Independent graphs over one vertex set sharing latent labels and degrees.

    The first graph equals ``sample_sbm(p, n, seed)``.
    """
    first, latent = sample_sbm(p, n, seed)
    rng = np.random.default_rng(seed)
    _, theta = _draw_vertices(p, n, rng)
    graphs = [first]
    for child in np.random.SeedSequence(seed).spawn(n_graphs - 1):
        graphs.append(_draw_edges(p, latent - 1, theta, np.random.default_rng(child)))
    return graphs, latent


def _draw_vertices(p, n, rng):
    latent = rng.choice(p.K0, size=n, p=p.prior)
    theta = np.ones(n) if p.degree is None else rng.uniform(*p.degree, size=n)
    return latent, theta


def _draw_edges(p, latent, theta, rng) -> SparseGraph:
    n = len(latent)
    rows, cols = [], []
    for start in range(0, n - 1, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, n - 1)
        j = np.arange(start + 1, n)
        prob = p.B0[latent[start:stop, None], latent[None, start + 1:]]
        if p.degree is not None:
            prob = prob * theta[start:stop, None] * theta[None, start + 1:]
        hit = rng.random(prob.shape) < prob
        # strict upper triangle only
        hit &= j[None, :] > np.arange(start, stop)[:, None]
        r, c = np.nonzero(hit)
        rows.append((r + start).astype(np.int32))
        cols.append(j[c].astype(np.int32))

    r = np.concatenate(rows) if rows else np.empty(0, np.int32)
    c = np.concatenate(cols) if cols else np.empty(0, np.int32)
    upper = sp.csr_array((np.ones(len(r)), (r, c)), shape=(n, n))
    return SparseGraph.from_matrix(upper + upper.T, undirected=True, validate=False)


def merge_labels(latent, m: MergeMap) -> np.ndarray:
    latent = as_labels(latent)
    if latent.size and (latent.min() < 1 or latent.max() > m.K0):
        raise IndexError(f"latent labels must lie in 1..{m.K0}")
    lookup = np.asarray((0,) + m.classes, dtype=np.int64)
    return lookup[latent]


def merged_block_matrix(B0, prior, m: MergeMap) -> np.ndarray:
    """Prior-weighted block average of ``B0`` over each pair of merged groups."""
    B0 = np.asarray(B0, dtype=np.float64)
    prior = np.asarray(prior, dtype=np.float64)
    # membership matrix: latent k belongs to observed a
    P = np.zeros((m.K0, m.K))
    P[np.arange(m.K0), np.asarray(m.classes) - 1] = prior
    mass = P.sum(axis=0)
    return (P.T @ B0 @ P) / np.outer(mass, mass)


def margin(B, k: int, l: int) -> float:
    """Euclidean distance between rows ``k`` and ``l`` (1-based) of ``B``."""
    B = np.asarray(B, dtype=np.float64)
    return float(np.linalg.norm(B[k - 1] - B[l - 1]))


_SIM12_B0 = [
    [0.5, 0.2, 0.1, 0.1],
    [0.2, 0.2, 0.1, 0.1],
    [0.1, 0.1, 0.2, 0.2],
    [0.1, 0.1, 0.2, 0.5],
]
_SIM3_B0 = [
    [0.5, 0.2, 0.2, 0.1, 0.1],
    [0.1, 0.2, 0.1, 0.2, 0.1],
    [0.1, 0.1, 0.2, 0.1, 0.2],
    [0.1, 0.2, 0.1, 0.5, 0.1],
    [0.1, 0.1, 0.2, 0.1, 0.5],
]

BUILTIN_MODELS = ("sim1", "sim2", "sim3")


def builtin_model(model_id: str) -> tuple[SbmParams, MergeMap]:
    """The three simulation settings: two 4-class DC-SBMs differing only in
    how latent classes are merged, and a 5-class SBM merged into 3."""
    if model_id == "sim1":
        return SbmParams(np.array(_SIM12_B0), np.full(4, 0.25), (0.1, 1.0)), MergeMap.from_groups([[1, 2], [3, 4]])
    if model_id == "sim2":
        return SbmParams(np.array(_SIM12_B0), np.full(4, 0.25), (0.1, 1.0)), MergeMap.from_groups([[1, 3], [2, 4]])
    if model_id == "sim3":
        return SbmParams(np.array(_SIM3_B0), np.full(5, 0.2), None), MergeMap.from_groups([[1, 2, 3], [4], [5]])
    raise SbmParameterError(f"unknown model {model_id!r}; choose from {', '.join(BUILTIN_MODELS)}")


def model_to_json(p: SbmParams, m: MergeMap) -> str:
    return json.dumps({**p.to_dict(), "merge": list(m.classes)}, indent=2)


def model_from_json(text: str) -> tuple[SbmParams, MergeMap]:
    d = json.loads(text)
    try:
        params = SbmParams.from_dict(d)
        merge = MergeMap(tuple(d["merge"])) if "merge" in d else MergeMap.identity(params.K0)
    except (KeyError, TypeError) as exc:
        raise SbmParameterError(f"invalid model spec: {exc}") from exc
    if merge.K0 != params.K0:
        raise SbmParameterError("merge map length must equal K0")
    return params, merge


def simulate(model, n: int, seed):
    """Sample a graph from a builtin id or ``(params, merge)`` pair.

    Returns ``(graph, observed, latent)``.
    """
    params, merge = builtin_model(model) if isinstance(model, str) else model
    graph, latent = sample_sbm(params, n, seed)
    return graph, merge_labels(latent, merge), latent
