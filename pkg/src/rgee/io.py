"""CSV/JSON writers for embeddings, refinement output and evaluation reports."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .encoder import ColumnBlock, Embedding
from .refine import RefineResult

SCHEMA_VERSION = 1


def write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def write_matrix_csv(values, path, header=None, fmt="%.17g") -> None:
    values = np.asarray(values)
    kwargs = {"header": ",".join(header), "comments": ""} if header else {}
    np.savetxt(path, values, delimiter=",", fmt=fmt, **kwargs)


def write_embedding(emb: Embedding, path, meta: dict | None = None) -> Path:
    """Write ``path`` (one CSV row per vertex) and ``path.json`` describing column blocks."""
    path = Path(path)
    write_matrix_csv(emb.values, path)
    sidecar = path.with_suffix(path.suffix + ".json")
    write_json(
        {
            "schema_version": SCHEMA_VERSION,
            "n": emb.n,
            "d": emb.d,
            "column_blocks": [{"offset": b.offset, "width": b.width, "tag": b.tag} for b in emb.blocks],
            **(meta or {}),
        },
        sidecar,
    )
    return sidecar


def read_embedding(path) -> Embedding:
    path = Path(path)
    values = np.loadtxt(path, delimiter=",", ndmin=2)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    blocks = tuple(ColumnBlock(b["offset"], b["width"], b["tag"]) for b in meta["column_blocks"])
    return Embedding(values, blocks)


def write_refine_result(result: RefineResult, outdir, run: dict | None = None) -> dict[str, Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "embedding": outdir / "embedding.csv",
        "label_history": outdir / "label_history.csv",
        "metadata": outdir / "refine.json",
    }
    write_embedding(result.embedding, paths["embedding"])
    cols = ["input"] + [f"pass{i}" for i in range(1, result.label_history.shape[1])]
    write_matrix_csv(result.label_history, paths["label_history"], header=cols, fmt="%d")
    write_json(
        {
            "schema_version": SCHEMA_VERSION,
            "final_K": result.final_K,
            "n_input_classes": result.n_input_classes,
            "new_classes": result.new_classes,
            "mismatch_history": result.mismatch_history,
            "stop_reasons": result.stop_reasons,
            "compaction_maps": [{str(k): v for k, v in m.items()} for m in result.compaction_maps],
            "run": run or {},
        },
        paths["metadata"],
    )
    return paths


def write_rows_csv(rows: list[dict], path) -> None:
    if not rows:
        Path(path).write_text("")
        return
    with Path(path).open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
