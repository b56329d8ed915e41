"""Vertex classification, latent-community recovery scoring and timing."""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.model_selection import StratifiedKFold

from .encoder import Embedding, gee_embed
from .graph import Dataset, SparseGraph, as_labels, compact_labels
from .refine import RefineConfig, RefineResult, fit_lda, lda_transform, refine
from .sbm import builtin_model, merge_labels, sample_multiplex, sample_sbm

METHODS = ("gee", "rgee", "gee0")


class DegenerateFoldError(ValueError):
    """A training fold is missing a class even after redrawing the folds."""


def lda_classify(train_z, train_y, test_z, half: bool = True) -> np.ndarray:
    """Fit LDA on training rows and predict test rows by the highest score.

    Training labels may use any positive integers; predictions use the same ones.
    """
    train_y = as_labels(train_y)
    if np.any(train_y == 0):
        raise ValueError("training labels must all be known")
    local, mapping = compact_labels(train_y)
    model = fit_lda(train_z, local)
    scores = lda_transform(test_z, model, half=half)
    classes = np.array(sorted(mapping), dtype=np.int64)
    return classes[np.argmax(scores, axis=1)]


@dataclass
class CvReport:
    method: str
    fold_errors: np.ndarray
    seeds: list[int]

    @property
    def replicate_errors(self) -> np.ndarray:
        return self.fold_errors.mean(axis=1)

    @property
    def mean_error(self) -> float:
        return float(self.replicate_errors.mean())

    @property
    def std_error(self) -> float:
        return float(self.replicate_errors.std())

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "mean_error": self.mean_error,
            "std_error": self.std_error,
            "replicate_errors": self.replicate_errors.tolist(),
            "fold_errors": self.fold_errors.tolist(),
            "seeds": list(self.seeds),
        }


def stratified_folds(y, folds: int, seed) -> np.ndarray:
    """Fold index per vertex; every class is spread over the folds within one vertex."""
    y = np.asarray(y)
    out = np.empty(len(y), dtype=np.int64)
    # a class smaller than the fold count is allowed here and caught by the caller
    skf = StratifiedKFold(n_splits=folds, shuffle=True, random_state=np.random.RandomState(seed))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        for f, (_, test) in enumerate(skf.split(np.zeros(len(y)), y)):
            out[test] = f
    return out


def _fold_assignment(y, folds, rng) -> np.ndarray:
    classes = np.unique(y)
    for _ in range(2):
        assign = stratified_folds(y, folds, int(rng.integers(2**31)))
        if all(np.array_equal(np.unique(y[assign != f]), classes) for f in range(folds)):
            return assign
    raise DegenerateFoldError("a training fold lacks a class; some class has too few vertices")


def embed(graph, y, method: str, cfg: RefineConfig = RefineConfig()) -> Embedding:
    """Embedding used for classification: raw encoder output or refined one.

    ``graph`` may be a list of graphs on a shared vertex set.
    """
    if not isinstance(graph, SparseGraph):
        return multiplex_embed(graph, y, method, cfg)
    local, _ = compact_labels(y)
    if method in ("gee", "gee0"):
        return gee_embed(graph, local)
    if method == "rgee":
        return refine(graph, local, cfg).embedding
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


def kfold_cv(
    d: Dataset,
    method: str,
    folds: int = 10,
    replicates: int = 30,
    seeds=None,
    cfg: RefineConfig = RefineConfig(),
    graphs=None,
    classic_half: bool = True,
    workers: int = 1,
) -> CvReport:
    """Cross-validated LDA error on the observed labels.

    Test-fold labels are set to 0 before embedding. ``gee0`` embeds with the
    latent labels instead, but is still scored on the observed ones.
    ``graphs`` replaces ``d.graph`` with several graphs for a multiplex embedding.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method == "gee0" and d.latent is None:
        raise ValueError("gee0 needs latent labels")
    seeds = list(range(replicates)) if seeds is None else [int(s) for s in seeds]
    graph = d.graph if graphs is None else list(graphs)
    y = d.observed
    if np.any(y == 0):
        raise ValueError("cross-validation needs every observed label known")
    embed_labels = d.latent if method == "gee0" else y

    def one_replicate(seed):
        rng = np.random.default_rng(seed)
        assign = _fold_assignment(y, folds, rng)
        errors = np.empty(folds)
        for f in range(folds):
            test = assign == f
            train_labels = np.where(test, 0, embed_labels)
            Z = embed(graph, train_labels, method, cfg).values
            pred = lda_classify(Z[~test], y[~test], Z[test], half=classic_half)
            errors[f] = np.mean(pred != y[test])
        return errors

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            rows = list(pool.map(one_replicate, seeds))
    else:
        rows = [one_replicate(s) for s in seeds]
    return CvReport(method, np.vstack(rows), seeds)


def simulate_cv(
    model,
    n: int,
    methods=METHODS,
    folds: int = 10,
    replicates: int = 30,
    seed: int = 0,
    cfg: RefineConfig = RefineConfig(),
    n_graphs: int = 1,
) -> dict[str, CvReport]:
    """Cross-validation on a fresh simulated graph per replicate.

    All methods share each replicate's graph and folds. With ``n_graphs > 1``
    the replicate draws that many independent graphs on the same labels.
    """
    params, merge = builtin_model(model) if isinstance(model, str) else model
    errors = {m: [] for m in methods}
    seeds = [seed + r for r in range(replicates)]
    for s in seeds:
        graphs, latent = sample_multiplex(params, n, s, n_graphs)
        d = Dataset(graphs[0], merge_labels(latent, merge), latent)
        for m in methods:
            rep = kfold_cv(d, m, folds, 1, [s], cfg, graphs=graphs if n_graphs > 1 else None)
            errors[m].append(rep.fold_errors[0])
    return {m: CvReport(m, np.vstack(errors[m]), seeds) for m in methods}


@dataclass
class RecoveryScore:
    """Precision and recall of discovered communities against latent classes.

    ``None`` marks an undefined value (nothing discovered, or nothing hidden).
    """

    precision: float | None
    recall: float | None
    community_map: dict[str, int]
    n_discovered: int
    n_hidden: int
    definition: str = field(default="")

    def to_dict(self) -> dict:
        return {
            "precision": "undefined" if self.precision is None else self.precision,
            "recall": "undefined" if self.recall is None else self.recall,
            "community_map": self.community_map,
            "n_discovered": self.n_discovered,
            "n_hidden": self.n_hidden,
            "definition": self.definition,
        }


RECOVERY_DEFINITION = (
    "A vertex is discovered when its final refined label differs from its observed "
    "label; discovered vertices are grouped by (observed, refined) label pair and each "
    "group maps to its majority latent class. Within each observed class the main latent "
    "class is the one with most vertices keeping the observed label; vertices of any other "
    "latent class are hidden. precision = discovered vertices whose latent class matches "
    "their group's map / discovered; recall = hidden vertices discovered with a matching "
    "map / hidden."
)


def latent_recovery(refine_out: RefineResult | np.ndarray, observed, latent) -> RecoveryScore:
    final = refine_out.labels if isinstance(refine_out, RefineResult) else as_labels(refine_out)
    observed = as_labels(observed, len(final))
    latent = as_labels(latent, len(final))
    known = observed > 0

    discovered = known & (final != observed)
    community_map = {}
    correct = np.zeros(len(final), dtype=bool)
    for a, b in sorted({(int(a), int(b)) for a, b in zip(observed[discovered], final[discovered])}):
        members = discovered & (observed == a) & (final == b)
        majority = int(np.bincount(latent[members]).argmax())
        community_map[f"{a}->{b}"] = majority
        correct |= members & (latent == majority)

    hidden = np.zeros(len(final), dtype=bool)
    for a in np.unique(observed[known]):
        in_a = observed == a
        kept = latent[in_a & (final == a)]
        pool = kept if kept.size else latent[in_a]
        main = int(np.bincount(pool).argmax())
        hidden |= in_a & (latent != main)

    n_disc, n_hid = int(discovered.sum()), int(hidden.sum())
    precision = correct.sum() / n_disc if n_disc else None
    recall = (correct & hidden).sum() / n_hid if n_hid else None
    return RecoveryScore(
        precision=None if precision is None else float(precision),
        recall=None if recall is None else float(recall),
        community_map=community_map,
        n_discovered=n_disc,
        n_hidden=n_hid,
        definition=RECOVERY_DEFINITION,
    )


def multiplex_embed(graphs, y, method: str = "gee", cfg: RefineConfig = RefineConfig()) -> Embedding:
    """Concatenate per-graph embeddings computed with the same labels."""
    graphs = list(graphs)
    if not graphs:
        raise ValueError("need at least one graph")
    if len({g.n for g in graphs}) != 1:
        raise ValueError("graphs must share the vertex set")
    parts = [embed(g, y, method, cfg).retag(f"graph{m}:") for m, g in enumerate(graphs)]
    return Embedding.concat(parts)


def bench_scaling(model: str, n_list, seed: int = 0, repeats: int = 3, cfg: RefineConfig = RefineConfig()):
    """Median wall-clock seconds of the encoder and refined embeddings per graph size."""
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing")
    params, merge = builtin_model(model)
    rows = []
    for n in n_list:
        g, latent = sample_sbm(params, n, seed)
        y = merge_labels(latent, merge)
        gee_t = _median_time(lambda: gee_embed(g, y), repeats)
        rgee_t = _median_time(lambda: refine(g, y, cfg), repeats)
        rows.append({"n": n, "edges": g.n_edges, "gee_seconds": gee_t, "rgee_seconds": rgee_t})
    return rows


def _median_time(fn, repeats: int) -> float:
    times = []
    for _ in range(max(repeats, 1)):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))
