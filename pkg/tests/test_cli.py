import json

import numpy as np
import pytest

from rgee.cli import main
from rgee.encoder import ColumnBlock, Embedding
from rgee.graph import EdgeListFormat, load_edge_list, load_labels, write_edge_list, write_labels
from rgee.io import read_embedding, write_embedding, write_refine_result
from rgee.refine import refine
from rgee.sbm import SbmParams, sample_sbm, simulate


def _files(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.is_file()}


@pytest.fixture
def sim_dir(tmp_path):
    out = tmp_path / "sim"
    assert main(["simulate", "--model", "sim2", "--n", "300", "--seed", "7", "--out", str(out)]) == 0
    return out


class TestIo:
    def test_embedding_round_trip(self, tmp_path):
        emb = Embedding(np.array([[0.1, 1 / 3, 2.0], [1e-20, 0, -5]]), (ColumnBlock(0, 2, "a"), ColumnBlock(2, 1, "b")))
        sidecar = write_embedding(emb, tmp_path / "z.csv", {"seed": 3})
        back = read_embedding(tmp_path / "z.csv")
        assert np.array_equal(back.values, emb.values)
        assert back.blocks == emb.blocks
        assert json.loads(sidecar.read_text())["seed"] == 3

    def test_refine_result_files(self, tmp_path):
        g, observed, _ = simulate("sim2", 300, 0)
        r = refine(g, observed)
        paths = write_refine_result(r, tmp_path, run={"seed": 0})
        hist = np.loadtxt(paths["label_history"], delimiter=",", skiprows=1, dtype=int)
        assert np.array_equal(hist.reshape(r.label_history.shape), r.label_history)
        meta = json.loads(paths["metadata"].read_text())
        assert meta["final_K"] == r.final_K
        assert meta["mismatch_history"] == r.mismatch_history


class TestSimulate:
    def test_outputs(self, sim_dir):
        assert set(_files(sim_dir)) == {"graph.txt", "latent.txt", "observed.txt", "model.json", "manifest.json"}
        g = load_edge_list(sim_dir / "graph.txt", EdgeListFormat(header=True))
        ref, observed, latent = simulate("sim2", 300, 7)
        assert g == ref
        assert np.array_equal(load_labels(sim_dir / "observed.txt", 300), observed)
        assert np.array_equal(load_labels(sim_dir / "latent.txt", 300), latent)
        manifest = json.loads((sim_dir / "manifest.json").read_text())
        assert manifest["run"]["seed"] == 7 and manifest["command"] == "simulate"

    def test_sim3_labels(self, tmp_path):
        assert main(["simulate", "--model", "sim3", "--n", "3000", "--out", str(tmp_path)]) == 0
        assert set(load_labels(tmp_path / "observed.txt")) == {1, 2, 3}

    def test_unknown_model(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--model", "sim9", "--out", str(tmp_path)])
        assert exc.value.code == 2
        assert "sim9" in capsys.readouterr().err

    def test_params_file(self, tmp_path, sim_dir):
        out = tmp_path / "p"
        assert main(["simulate", "--params", str(sim_dir / "model.json"), "--n", "300", "--seed", "7", "--out", str(out)]) == 0
        assert (out / "graph.txt").read_bytes() == (sim_dir / "graph.txt").read_bytes()

    def test_env_output_dir(self, tmp_path, monkeypatch):
        monkeypatch.setenv("RGEE_OUTPUT_DIR", str(tmp_path / "env"))
        assert main(["simulate", "--model", "sim1", "--n", "50"]) == 0
        assert (tmp_path / "env" / "graph.txt").exists()


class TestRefine:
    def _run(self, sim_dir, out, *extra):
        return main([
            "refine", "--graph", str(sim_dir / "graph.txt"), "--header",
            "--labels", str(sim_dir / "observed.txt"), "--out", str(out), *extra,
        ])

    def test_default_config_echoed(self, sim_dir, tmp_path):
        assert self._run(sim_dir, tmp_path / "r") == 0
        meta = json.loads((tmp_path / "r" / "refine.json").read_text())
        cfg = meta["run"]["config"]
        assert (cfg["gamma_Y"], cfg["gamma_K"], cfg["epsilon"], cfg["epsilon_n"]) == (5, 5, 0.3, 5)
        assert {"embedding.csv", "embedding.csv.json", "label_history.csv", "manifest.json"} <= set(_files(tmp_path / "r"))

    def test_setting4_flags(self, sim_dir, tmp_path):
        assert self._run(sim_dir, tmp_path / "a", "--epsilon", "0.02", "--epsilon-n", "2") == 0
        assert self._run(sim_dir, tmp_path / "b", "--setting", "4") == 0
        assert (tmp_path / "a" / "embedding.csv").read_bytes() == (tmp_path / "b" / "embedding.csv").read_bytes()

    def test_single_pass(self, sim_dir, tmp_path):
        assert self._run(sim_dir, tmp_path / "r", "--gamma-y", "0", "--gamma-k", "0") == 0
        z = np.loadtxt(tmp_path / "r" / "embedding.csv", delimiter=",")
        assert z.shape == (300, 2)

    def test_byte_identical_rerun(self, sim_dir, tmp_path):
        assert self._run(sim_dir, tmp_path / "a") == 0
        assert self._run(sim_dir, tmp_path / "b") == 0
        a, b = _files(tmp_path / "a"), _files(tmp_path / "b")
        a.pop("manifest.json"), b.pop("manifest.json")
        assert a == b

    def test_missing_file_is_data_error(self, sim_dir, tmp_path, capsys):
        code = main(["refine", "--graph", str(tmp_path / "nope.txt"), "--labels", str(sim_dir / "observed.txt"), "--out", str(tmp_path)])
        assert code == 3
        assert "nope.txt" in capsys.readouterr().err

    def test_label_length_is_data_error(self, sim_dir, tmp_path):
        (tmp_path / "short.txt").write_text("1\n2\n")
        code = main(["refine", "--graph", str(sim_dir / "graph.txt"), "--header", "--labels", str(tmp_path / "short.txt"), "--out", str(tmp_path)])
        assert code == 3

    def test_bad_config_is_usage_error(self, sim_dir, tmp_path):
        assert self._run(sim_dir, tmp_path / "r", "--epsilon", "2") == 2


class TestEvaluationCommands:
    def test_cv_simulated(self, tmp_path):
        args = ["cv", "--model", "sim2", "--n", "300", "--method", "rgee", "--folds", "5", "--replicates", "2", "--seed", "3"]
        assert main([*args, "--out", str(tmp_path / "a")]) == 0
        assert main([*args, "--out", str(tmp_path / "b")]) == 0
        rep = json.loads((tmp_path / "a" / "cv.json").read_text())
        assert len(rep["fold_errors"]) == 2 and len(rep["fold_errors"][0]) == 5
        assert rep["run"]["seed"] == 3
        assert _files(tmp_path / "a") == _files(tmp_path / "b")

    def test_cv_from_files_csv(self, sim_dir, tmp_path):
        code = main([
            "cv", "--graph", str(sim_dir / "graph.txt"), "--header", "--labels", str(sim_dir / "observed.txt"),
            "--latent", str(sim_dir / "latent.txt"), "--method", "gee0", "--folds", "5", "--replicates", "2",
            "--format", "csv", "--out", str(tmp_path),
        ])
        assert code == 0
        lines = (tmp_path / "cv.csv").read_text().splitlines()
        assert lines[0] == "seed,fold,error" and len(lines) == 11

    def test_cv_gee0_without_latent(self, sim_dir, tmp_path):
        code = main([
            "cv", "--graph", str(sim_dir / "graph.txt"), "--header", "--labels", str(sim_dir / "observed.txt"),
            "--method", "gee0", "--out", str(tmp_path),
        ])
        assert code == 2

    def test_recover(self, tmp_path):
        assert main(["recover", "--model", "sim2", "--n", "500", "--seed", "1", "--out", str(tmp_path)]) == 0
        rep = json.loads((tmp_path / "recovery.json").read_text())
        assert {"precision", "recall", "community_map", "definition", "run"} <= set(rep)

    def test_recover_nothing_discovered(self, tmp_path):
        # two well separated blocks: refinement has nothing to split off
        g, y = sample_sbm(SbmParams(np.array([[0.8, 0.02], [0.02, 0.8]]), [0.5, 0.5]), 200, 0)
        write_edge_list(g, tmp_path / "g.txt")
        write_labels(y, tmp_path / "y.txt")
        code = main([
            "recover", "--graph", str(tmp_path / "g.txt"), "--header", "--labels", str(tmp_path / "y.txt"),
            "--latent", str(tmp_path / "y.txt"), "--out", str(tmp_path / "o"),
        ])
        assert code == 0
        rep = json.loads((tmp_path / "o" / "recovery.json").read_text())
        assert rep["precision"] == "undefined" and rep["n_discovered"] == 0

    def test_bench(self, tmp_path):
        assert main(["bench", "--model", "sim3", "--n", "200,400", "--repeats", "1", "--out", str(tmp_path)]) == 0
        header = (tmp_path / "timing.csv").read_text().splitlines()[0]
        assert header == "n,edges,gee_seconds,rgee_seconds"

    def test_sweep(self, tmp_path):
        code = main(["sweep", "--model", "sim2", "--n", "200", "--replicates", "1", "--folds", "5", "--out", str(tmp_path)])
        assert code == 0
        rows = (tmp_path / "sweep.csv").read_text().splitlines()
        assert len(rows) == 5 and rows[0].startswith("setting,epsilon,epsilon_n")
