"""Command-line entry point: ``rgee <command> ...``.

Every command writes its outputs plus a ``manifest.json`` holding the fully
resolved run spec, so a rerun with the same arguments reproduces the data.
Exit codes: 0 success, 2 usage error, 3 data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .encoder import DegenerateClassError
from .evaluate import METHODS, DegenerateFoldError, bench_scaling, kfold_cv, latent_recovery, simulate_cv
from .graph import (
    Dataset,
    EdgeListFormat,
    GraphBoundsError,
    GraphFormatError,
    load_edge_list,
    load_labels,
    remove_singletons,
    to_undirected,
    write_edge_list,
    write_labels,
)
from .io import write_json, write_refine_result, write_rows_csv
from .refine import SETTINGS, DegenerateModelError, RefineConfig, refine
from .sbm import BUILTIN_MODELS, SbmParameterError, builtin_model, model_from_json, model_to_json, simulate

log = logging.getLogger("rgee")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 2, 3
OUTPUT_ENV = "RGEE_OUTPUT_DIR"


class UsageError(Exception):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_output(p):
    p.add_argument("--out", type=Path, default=None, help=f"output directory (default ${OUTPUT_ENV} or ./rgee-out)")
    p.add_argument("--format", choices=("csv", "json"), default="json", help="report format")


def _add_refine_flags(p):
    g = p.add_argument_group("refinement")
    g.add_argument("--gamma-y", type=int, default=5, help="max self-training passes")
    g.add_argument("--gamma-k", type=int, default=5, help="max latent-community passes")
    g.add_argument("--epsilon", type=float, default=0.3, help="fractional stopping threshold")
    g.add_argument("--epsilon-n", type=int, default=5, help="absolute stopping threshold")
    g.add_argument("--setting", type=int, choices=sorted(SETTINGS), help="use a preset (epsilon, epsilon_n) pair")
    g.add_argument(
        "--lda-rule",
        choices=("classic", "verbatim"),
        default="classic",
        help="discriminant used inside refinement: with or without the 1/2 on the quadratic term",
    )


def _add_source(p, model_ok=True, latent=False):
    src = p.add_argument_group("input (choose one source)")
    ex = src.add_mutually_exclusive_group(required=True)
    if model_ok:
        ex.add_argument("--model", choices=BUILTIN_MODELS, help="builtin simulation model")
        ex.add_argument("--params", type=Path, help="JSON model spec (B0, prior, degree, merge)")
        src.add_argument("--n", type=int, default=2000, help="vertex count for simulated graphs")
    ex.add_argument("--graph", type=Path, help="edge-list file")
    src.add_argument("--labels", type=Path, help="observed label file (with --graph)")
    if latent:
        src.add_argument("--latent", type=Path, help="latent label file (with --graph)")
    src.add_argument("--one-based", action="store_true", help="edge list uses 1-based vertex ids")
    src.add_argument("--header", action="store_true", help="edge list starts with a vertex count line")
    src.add_argument("--directed", action="store_true", help="read edges as directed, then symmetrize")
    src.add_argument("--drop-singletons", action="store_true", help="remove zero-degree vertices")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rgee", description="Refined graph encoder embedding toolkit")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample a graph with latent and observed labels")
    ex = p.add_mutually_exclusive_group(required=True)
    ex.add_argument("--model", choices=BUILTIN_MODELS)
    ex.add_argument("--params", type=Path)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)

    p = sub.add_parser("refine", help="run the refined embedding on a graph and labels")
    p.add_argument("--graph", type=Path, required=True)
    p.add_argument("--labels", type=Path, required=True)
    p.add_argument("--one-based", action="store_true")
    p.add_argument("--header", action="store_true")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--seed", type=int, default=0, help="recorded only; refinement is deterministic")
    _add_refine_flags(p)
    _add_output(p)

    p = sub.add_parser("cv", help="k-fold vertex classification error")
    _add_source(p, latent=True)
    p.add_argument("--method", choices=METHODS, default="rgee")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--replicates", type=int, default=30)
    p.add_argument("--n-graphs", type=int, default=1, help="independent draws per replicate (multiplex)")
    p.add_argument("--extra-graph", type=Path, action="append", default=[], help="more graphs on the same vertices")
    p.add_argument("--threads", type=int, default=1)
    _add_refine_flags(p)
    _add_output(p)

    p = sub.add_parser("recover", help="precision/recall of discovered latent communities")
    _add_source(p, latent=True)
    _add_refine_flags(p)
    _add_output(p)

    p = sub.add_parser("bench", help="wall-clock scaling of the encoder and refined embedding")
    p.add_argument("--model", choices=BUILTIN_MODELS, required=True)
    p.add_argument("--n", type=_int_list, default=[3000, 6000, 12000], help="comma-separated vertex counts")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)

    p = sub.add_parser("sweep", help="CV error and recovery across the four sensitivity settings")
    p.add_argument("--model", choices=BUILTIN_MODELS, required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--replicates", type=int, default=10)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_output(p)
    return parser


def _config(args) -> RefineConfig:
    eps, eps_n = args.epsilon, args.epsilon_n
    if args.setting is not None:
        eps, eps_n = SETTINGS[args.setting].epsilon, SETTINGS[args.setting].epsilon_n
    try:
        return RefineConfig(args.gamma_y, args.gamma_k, eps, eps_n, classic_lda_half=args.lda_rule == "classic")
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _outdir(args) -> Path:
    out = args.out or Path(os.environ.get(OUTPUT_ENV, "rgee-out"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _run_spec(args, **extra) -> dict:
    spec = {}
    for k, v in vars(args).items():
        if k == "out":
            continue
        spec[k] = [str(x) for x in v] if isinstance(v, list) and v and isinstance(v[0], Path) else (
            str(v) if isinstance(v, Path) else v
        )
    spec.update(extra)
    return spec


def _model(args):
    if getattr(args, "model", None):
        return builtin_model(args.model)
    return model_from_json(Path(args.params).read_text())


def _fmt(args) -> EdgeListFormat:
    return EdgeListFormat(one_based=args.one_based, header=args.header, directed=args.directed)


def _load_dataset(args, need_latent=False) -> Dataset:
    if args.labels is None:
        raise UsageError("--graph requires --labels")
    g = load_edge_list(args.graph, _fmt(args))
    if not g.undirected:
        g = to_undirected(g)
    y = load_labels(args.labels, g.n)
    latent = None
    if getattr(args, "latent", None) is not None:
        latent = load_labels(args.latent, g.n)
    elif need_latent:
        raise UsageError("this command needs --latent with --graph")
    d = Dataset(g, y, latent, name=str(args.graph))
    if getattr(args, "drop_singletons", False):
        d, _ = remove_singletons(d)
    return d


def cmd_simulate(args) -> dict:
    params, merge = _model(args)
    graph, observed, latent = simulate((params, merge), args.n, args.seed)
    out = _outdir(args)
    files = {"graph": "graph.txt", "latent": "latent.txt", "observed": "observed.txt", "model": "model.json"}
    write_edge_list(graph, out / files["graph"], EdgeListFormat(header=True))
    write_labels(latent, out / files["latent"])
    write_labels(observed, out / files["observed"])
    (out / files["model"]).write_text(model_to_json(params, merge) + "\n")
    return {"files": files, "n_edges": graph.n_edges, "edge_list_format": {"header": True, "one_based": False}}


def cmd_refine(args) -> dict:
    cfg = _config(args)
    g = load_edge_list(args.graph, _fmt(args))
    if not g.undirected:
        g = to_undirected(g)
    y = load_labels(args.labels, g.n)
    result = refine(g, y, cfg)
    run = _run_spec(args, config=cfg.to_dict())
    paths = write_refine_result(result, _outdir(args), run=run)
    return {"files": {k: p.name for k, p in paths.items()}, "config": cfg.to_dict(), "final_K": result.final_K}


def cmd_cv(args) -> dict:
    cfg = _config(args)
    out = _outdir(args)
    if args.graph is None:
        reports = simulate_cv(
            _model(args), args.n, (args.method,), args.folds, args.replicates, args.seed, cfg, args.n_graphs
        )
        report = reports[args.method]
    else:
        d = _load_dataset(args, need_latent=args.method == "gee0")
        graphs = None
        if args.extra_graph:
            extra = [to_undirected(load_edge_list(p, _fmt(args))) for p in args.extra_graph]
            graphs = [d.graph, *extra]
        seeds = [args.seed + r for r in range(args.replicates)]
        report = kfold_cv(d, args.method, args.folds, args.replicates, seeds, cfg, graphs=graphs, workers=args.threads)
    if args.format == "json":
        write_json({**report.to_dict(), "run": _run_spec(args, config=cfg.to_dict())}, out / "cv.json")
        files = {"report": "cv.json"}
    else:
        rows = [
            {"seed": s, "fold": f, "error": float(e)}
            for s, errs in zip(report.seeds, report.fold_errors)
            for f, e in enumerate(errs)
        ]
        write_rows_csv(rows, out / "cv.csv")
        files = {"report": "cv.csv"}
    return {"files": files, "mean_error": report.mean_error, "std_error": report.std_error, "config": cfg.to_dict()}


def cmd_recover(args) -> dict:
    cfg = _config(args)
    if args.graph is None:
        g, observed, latent = simulate(_model(args), args.n, args.seed)
    else:
        d = _load_dataset(args, need_latent=True)
        g, observed, latent = d.graph, d.observed, d.latent
    result = refine(g, observed, cfg)
    score = latent_recovery(result, observed, latent)
    out = _outdir(args)
    body = score.to_dict()
    if args.format == "json":
        write_json({**body, "run": _run_spec(args, config=cfg.to_dict())}, out / "recovery.json")
        files = {"report": "recovery.json"}
    else:
        write_rows_csv([{k: body[k] for k in ("precision", "recall", "n_discovered", "n_hidden")}], out / "recovery.csv")
        files = {"report": "recovery.csv"}
    return {"files": files, "precision": body["precision"], "recall": body["recall"], "config": cfg.to_dict()}


def cmd_bench(args) -> dict:
    rows = bench_scaling(args.model, args.n, args.seed, args.repeats)
    out = _outdir(args)
    write_rows_csv(rows, out / "timing.csv")
    files = {"report": "timing.csv"}
    if args.format == "json":
        write_json({"rows": rows, "run": _run_spec(args)}, out / "timing.json")
        files["json"] = "timing.json"
    return {"files": files, "timing_exempt_from_reproducibility": True}


def cmd_sweep(args) -> dict:
    rows = []
    for k, cfg in SETTINGS.items():
        report = simulate_cv(args.model, args.n, ("rgee",), args.folds, args.replicates, args.seed, cfg)["rgee"]
        precision, recall = [], []
        for r in range(args.replicates):
            g, observed, latent = simulate(args.model, args.n, args.seed + r)
            score = latent_recovery(refine(g, observed, cfg), observed, latent)
            if score.precision is not None:
                precision.append(score.precision)
            if score.recall is not None:
                recall.append(score.recall)
        rows.append({
            "setting": k,
            "epsilon": cfg.epsilon,
            "epsilon_n": cfg.epsilon_n,
            "cv_error": report.mean_error,
            "cv_std": report.std_error,
            "precision": float(np.mean(precision)) if precision else None,
            "recall": float(np.mean(recall)) if recall else None,
        })
    out = _outdir(args)
    write_rows_csv(rows, out / "sweep.csv")
    files = {"report": "sweep.csv"}
    if args.format == "json":
        write_json({"rows": rows, "run": _run_spec(args)}, out / "sweep.json")
        files["json"] = "sweep.json"
    return {"files": files}


COMMANDS = {
    "simulate": cmd_simulate,
    "refine": cmd_refine,
    "cv": cmd_cv,
    "recover": cmd_recover,
    "bench": cmd_bench,
    "sweep": cmd_sweep,
}

DATA_ERRORS = (
    GraphFormatError,
    GraphBoundsError,
    DegenerateClassError,
    DegenerateModelError,
    DegenerateFoldError,
    SbmParameterError,
    OSError,
    ValueError,
)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        summary = COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"rgee: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        print(f"rgee: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    manifest = {"command": args.command, "version": __version__, "run": _run_spec(args), **summary}
    write_json(manifest, _outdir(args) / "manifest.json")
    log.info("wrote %s", _outdir(args))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
