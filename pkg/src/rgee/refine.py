"""LDA self-training and latent-community refinement of the encoder embedding."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .encoder import ColumnBlock, Embedding, gee_embed
from .graph import SparseGraph, as_labels, class_counts, compact_labels


class DegenerateModelError(ValueError):
    """LDA needs at least two classes with labelled vertices."""


@dataclass(frozen=True)
class LdaModel:
    """Class means (``d x K``, one column per class), pooled covariance and its
    pseudo-inverse, and class priors ``n_k / n``."""

    means: np.ndarray
    pooled_cov: np.ndarray
    pseudo_inv: np.ndarray
    priors: np.ndarray
    counts: np.ndarray

    @property
    def d(self) -> int:
        return self.means.shape[0]

    @property
    def K(self) -> int:
        return self.means.shape[1]


@dataclass(frozen=True)
class RefineConfig:
    gamma_Y: int = 5
    gamma_K: int = 5
    epsilon: float = 0.3
    epsilon_n: int = 5
    classic_lda_half: bool = True

    def __post_init__(self):
        if self.gamma_Y < 0 or self.gamma_K < 0:
            raise ValueError("iteration caps must be nonnegative")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.epsilon_n < 0 or int(self.epsilon_n) != self.epsilon_n:
            raise ValueError("epsilon_n must be a natural number")

    def to_dict(self) -> dict:
        return asdict(self)


# Parameter-sensitivity presets, from least to most aggressive refinement.
SETTINGS = {
    1: RefineConfig(epsilon=0.6, epsilon_n=50),
    2: RefineConfig(epsilon=0.4, epsilon_n=20),
    3: RefineConfig(epsilon=0.2, epsilon_n=5),
    4: RefineConfig(epsilon=0.02, epsilon_n=2),
}


def pseudo_inverse(S: np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric PSD matrix.

    Eigenvalues at or below ``d * eps * lambda_max`` are treated as zero.
    """
    S = (S + S.T) / 2
    vals, vecs = np.linalg.eigh(S)
    top = vals.max() if vals.size else 0.0
    if top <= 0:
        return np.zeros_like(S)
    keep = vals > S.shape[0] * np.finfo(np.float64).eps * top
    inv = (vecs[:, keep] / vals[keep]) @ vecs[:, keep].T
    return (inv + inv.T) / 2


def fit_lda(z, y) -> LdaModel:
    """Fit class means and the pooled within-class covariance.

    Vertices with label 0 are ignored; classes must be numbered ``1..K``
    and each must be nonempty.
    """
    Z = np.asarray(z, dtype=np.float64)
    y = as_labels(y, Z.shape[0])
    counts = class_counts(y)
    if np.count_nonzero(counts) < 2:
        raise DegenerateModelError("LDA needs at least two labelled classes")
    if np.any(counts == 0):
        raise DegenerateModelError("class labels must be consecutive and nonempty")
    known = y > 0
    Zk, idx = Z[known], y[known] - 1
    K, m = len(counts), len(idx)

    sums = np.zeros((K, Z.shape[1]))
    np.add.at(sums, idx, Zk)
    means = sums / counts[:, None]
    centered = Zk - means[idx]
    denom = m - K if m > K else m
    pooled = centered.T @ centered / denom
    pooled = (pooled + pooled.T) / 2
    return LdaModel(
        means=means.T,
        pooled_cov=pooled,
        pseudo_inv=pseudo_inverse(pooled),
        priors=counts / len(y),
        counts=counts,
    )


def lda_transform(z, model: LdaModel, half: bool = False) -> np.ndarray:
    """Per-class discriminant scores ``Z S+ mu - (c * diag(mu' S+ mu) - log(prior))``.

    ``c`` is 1 by default; ``half=True`` gives the textbook rule with ``c = 1/2``.
    """
    Z = np.asarray(z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != model.d:
        raise ValueError(f"embedding has {Z.shape[-1]} columns, model expects {model.d}")
    proj = model.pseudo_inv @ model.means
    quad = np.einsum("dk,dk->k", model.means, proj)
    scale = 0.5 if half else 1.0
    with np.errstate(divide="ignore"):
        log_prior = np.log(model.priors)
    return Z @ proj - (scale * quad - log_prior)


def gee_lda(g: SparseGraph, y, half: bool = False, tag: str = "geelda"):
    """One self-training pass: embed, LDA-transform, relabel by argmax.

    Returns ``(Z1, Y1, delta1)``. Unlabelled vertices keep label 0 and never
    count as mismatched. Ties go to the smallest class.
    """
    y = as_labels(y, g.n)
    Z = gee_embed(g, y)
    scores = lda_transform(Z.values, fit_lda(Z.values, y), half=half)
    y1 = np.argmax(scores, axis=1) + 1
    y1[y == 0] = 0
    delta = (y1 != y) & (y > 0)
    return Embedding(scores, (ColumnBlock(0, scores.shape[1], tag),)), y1, delta


def stop_check(delta1, delta2, cfg: RefineConfig) -> bool:
    """True when the mismatch reduction from ``delta1`` to ``delta1 & delta2``
    falls below ``max(epsilon * sum(delta1), epsilon_n)``."""
    d1 = np.asarray(delta1, dtype=bool)
    d2 = np.asarray(delta2, dtype=bool)
    if d1.shape != d2.shape:
        raise ValueError("mismatch vectors differ in length")
    s1 = int(d1.sum())
    return s1 - max(s1 * cfg.epsilon, cfg.epsilon_n) < int((d1 & d2).sum())


def latent_relabel(y1, delta, k_current: int) -> np.ndarray:
    """Move mismatched vertices to new classes ``label + k_current``, then compact."""
    y1 = as_labels(y1)
    delta = np.asarray(delta, dtype=bool)
    if np.any(delta & (y1 == 0)):
        raise ValueError("unlabelled vertices cannot be mismatched")
    return compact_labels(y1 + k_current * delta)[0]


@dataclass
class RefineResult:
    """Output of :func:`refine`.

    ``label_history`` has the input labels in column 0 followed by the labels
    of every accepted pass. Labels there use stable class ids: ``1..K`` are the
    input classes, and each discovered community gets a fresh id above
    ``n_input_classes`` that it keeps across passes.
    """

    embedding: Embedding
    label_history: np.ndarray
    mismatch_history: list[dict]
    stop_reasons: dict[str, str]
    compaction_maps: list[dict[int, int]] = field(default_factory=list)
    n_input_classes: int = 0

    @property
    def labels(self) -> np.ndarray:
        return self.label_history[:, -1]

    @property
    def final_K(self) -> int:
        return int(np.unique(self.labels[self.labels > 0]).size)

    @property
    def new_classes(self) -> list[int]:
        return sorted(int(c) for c in np.unique(self.labels) if c > self.n_input_classes)


class _ClassIds:
    """Track stable class ids for the compact local labels fed to each pass."""

    def __init__(self, y):
        self.local, mapping = compact_labels(y)
        self.ids = np.array(sorted(mapping), dtype=np.int64)
        self.next_id = int(self.ids.max()) + 1 if self.ids.size else 1

    @property
    def K(self) -> int:
        return len(self.ids)

    def to_global(self, local) -> np.ndarray:
        lookup = np.concatenate([[0], self.ids])
        return lookup[local]

    def recompact(self, local) -> dict[int, int]:
        """Adopt labels in the current local space, dropping empty classes."""
        self.local, mapping = compact_labels(local)
        self.ids = self.ids[np.array(sorted(mapping), dtype=np.int64) - 1]
        return mapping

    def relabel(self, delta) -> dict[int, int]:
        """Split mismatched vertices off into new classes (label + K)."""
        k = self.K
        raw = self.local + k * np.asarray(delta, dtype=bool)
        self.local, mapping = compact_labels(raw)
        ids = []
        for r in sorted(mapping):
            if r <= k:
                ids.append(self.ids[r - 1])
            else:
                ids.append(self.next_id)
                self.next_id += 1
        self.ids = np.array(ids, dtype=np.int64)
        return mapping


def refine(g: SparseGraph, y, cfg: RefineConfig = RefineConfig()) -> RefineResult:
    """Refined encoder embedding: self-training, then latent-community passes.

    Every accepted pass appends its LDA scores to the embedding and its labels
    to the history. A pass is rejected, and its loop ends, when
    :func:`stop_check` fires or the labels collapse below two classes.
    """
    y = as_labels(y, g.n)
    half = cfg.classic_lda_half
    state = _ClassIds(y)
    if state.K < 2:
        raise DegenerateModelError("refinement needs at least two labelled classes")

    z1, y1, d1 = gee_lda(g, state.local, half=half, tag="initial")
    blocks = [z1]
    history = [y, state.to_global(y1)]
    mismatches: list[dict] = []
    maps: list[dict[int, int]] = []
    reasons: dict[str, str] = {}

    for phase, cap in (("self_training", cfg.gamma_Y), ("latent", cfg.gamma_K)):
        reasons[phase] = "iteration_cap"
        for it in range(1, cap + 1):
            maps.append(state.recompact(y1))
            y1 = state.local
            if phase == "latent":
                maps.append(state.relabel(d1))
            if state.K < 2:
                reasons[phase] = "degenerate"
                break
            z2, y2, d2 = gee_lda(g, state.local, half=half, tag=f"{phase}_{it}")
            stop = stop_check(d1, d2, cfg)
            mismatches.append({
                "phase": phase,
                "iteration": it,
                "K": state.K,
                "active": int(d1.sum()),
                "persisting": int((d1 & d2).sum()),
                "accepted": not stop,
            })
            if stop:
                reasons[phase] = "criterion"
                break
            blocks.append(z2)
            y1 = y2
            history.append(state.to_global(y2))
            d1 = d1 & d2

    return RefineResult(
        embedding=Embedding.concat(blocks),
        label_history=np.column_stack(history),
        mismatch_history=mismatches,
        stop_reasons=reasons,
        compaction_maps=maps,
        n_input_classes=int(y.max()),
    )
