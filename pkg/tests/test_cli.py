import json

import numpy as np
import pytest

from ssfs import dataio
from ssfs.cli import main


@pytest.fixture
def blobs_csv(tmp_path):
    path = tmp_path / "d.csv"
    assert main(["synth", "blobs", "--n", "100", "--num-nuisance", "15", "--seed", "1",
                 "--out", str(path)]) == 0
    return path


FAST = ["--resamples", "5", "--scorer", "logistic"]


def _select(data, out, *extra):
    return main(["select", "--input", str(data), "--label-column", "label", "--k", "2",
                 "--seed", "7", "--out", str(out), *FAST, *extra])


def test_select_writes_ranking_and_report(blobs_csv, tmp_path):
    out = tmp_path / "r.csv"
    assert _select(blobs_csv, out, "--features", "10") == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 11 and lines[0] == ",".join(dataio.RANKING_HEADER)
    report = json.loads((tmp_path / "r.report.json").read_text())
    assert len(report["selected_eigenvectors"]) == 2
    assert len(report["stability_scores"]) == 4
    assert set(report["timings_seconds"]) == {"spectral", "selection", "scoring"}


def test_select_same_seed_byte_identical(blobs_csv, tmp_path):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert _select(blobs_csv, a) == 0 and _select(blobs_csv, b) == 0
    assert _select(blobs_csv, c, "--threads", "3") == 0
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_select_missing_k_is_usage_error(blobs_csv, tmp_path, capsys):
    code = main(["select", "--input", str(blobs_csv), "--out", str(tmp_path / "r.csv")])
    assert code == 2
    assert "--k" in capsys.readouterr().err


def test_missing_input_is_runtime_error(tmp_path, capsys):
    code = main(["select", "--input", str(tmp_path / "nope.csv"), "--k", "1",
                 "--out", str(tmp_path / "r.csv")])
    assert code == 1
    err = capsys.readouterr().err.strip()
    assert err.startswith("ssfs select: error:") and "\n" not in err


def test_eval_curve_and_stability(blobs_csv, tmp_path):
    ranking = tmp_path / "r.csv"
    assert _select(blobs_csv, ranking) == 0
    curve = tmp_path / "curve.csv"
    assert main(["eval", "--input", str(blobs_csv), "--ranking", str(ranking), "--counts", "2,5,10",
                 "--kmeans-runs", "3", "--stability", "--runs", "50", "--out", str(curve)]) == 0
    rows = curve.read_text().splitlines()
    assert rows[0] == "num_features,mean_acc,std_acc" and len(rows) == 4
    summary = json.loads((tmp_path / "curve.stability.json").read_text())
    assert summary["runs"] == 50 and len(summary["vi_values"]) == 50 * 49 // 2
    vi = np.loadtxt(tmp_path / "curve.vi.csv", delimiter=",", skiprows=1)
    assert vi.shape == (50 * 49 // 2,)
    assert summary["mean_vi"] == pytest.approx(vi.mean())


def test_eval_skips_counts_beyond_ranking(blobs_csv, tmp_path, caplog):
    ranking = tmp_path / "r.csv"
    assert _select(blobs_csv, ranking, "--features", "3") == 0
    curve = tmp_path / "curve.csv"
    code = main(["eval", "--input", str(blobs_csv), "--ranking", str(ranking), "--counts", "2,5",
                 "--kmeans-runs", "2", "--out", str(curve)])
    assert code == 0
    assert len(curve.read_text().splitlines()) == 2
    assert "5" in caplog.text


def test_synth_blobs_shape_and_sidecar(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["synth", "blobs", "--n", "500", "--nuisance", "gaussian-blocks", "--seed", "1",
                 "--out", str(out)]) == 0
    ds = dataio.load_matrix(out, label_column="label")
    assert ds.data.values.shape == (500, 50) and len(ds.labels) == 500
    meta = json.loads((tmp_path / "b.meta.json").read_text())
    assert meta["informative_features"] == [0, 1, 2, 3, 4]
    assert meta["generator_params"]["n"] == 500


def test_synth_manifold_owner_map(tmp_path):
    out = tmp_path / "m.csv"
    assert main(["synth", "manifold", "--n", "1000", "--latents", "2", "--out", str(out)]) == 0
    assert dataio.load_matrix(out).values.shape == (1000, 6)
    meta = json.loads((tmp_path / "m.meta.json").read_text())
    assert meta["feature_owner"] == [0, 0, 0, 1, 1, 1]


@pytest.mark.parametrize("argv", [["synth", "blobs", "--nuisance", "bogus"], ["synth", "spiral"]])
def test_synth_bad_generator(tmp_path, capsys, argv):
    assert main([*argv, "--out", str(tmp_path / "x.csv")]) == 2
    err = capsys.readouterr().err
    assert "usage error" in err


def test_ablate_two_variants(blobs_csv, tmp_path):
    out = tmp_path / "abl"
    assert main(["ablate", "--input", str(blobs_csv), "--variants", "full,no-selection",
                 "--k", "2", "--out", str(out), *FAST]) == 0
    assert (out / "ranking_full.csv").exists() and (out / "ranking_no-selection.csv").exists()
    table = (out / "ablation.csv").read_text().splitlines()
    assert table[0].split(",")[0] == "variant" and len(table) == 3
    assert "recall_at_5" in table[0]


@pytest.mark.parametrize("variants", ["", "full,sideways"])
def test_ablate_bad_variant_list(blobs_csv, tmp_path, variants):
    assert main(["ablate", "--input", str(blobs_csv), "--variants", variants, "--k", "2",
                 "--out", str(tmp_path / "abl")]) == 2


def test_config_file_and_flag_override(blobs_csv, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# archived run\nk = 2\nresamples = 5\nscorer = logistic\nlabel-column = label\n"
                   "features = 4\n")
    out = tmp_path / "r.csv"
    assert main(["select", "--config", str(cfg), "--input", str(blobs_csv), "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 5
    assert main(["select", "--config", str(cfg), "--features", "6", "--input", str(blobs_csv),
                 "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 7
    cfg.write_text("colour = blue\n")
    assert main(["select", "--config", str(cfg), "--input", str(blobs_csv), "--out", str(out)]) == 2


def test_threads_environment_fallback(blobs_csv, tmp_path, monkeypatch):
    ref = tmp_path / "ref.csv"
    assert _select(blobs_csv, ref) == 0
    monkeypatch.setenv("SSFS_THREADS", "2")
    out = tmp_path / "env.csv"
    assert _select(blobs_csv, out) == 0
    assert out.read_bytes() == ref.read_bytes()
    monkeypatch.setenv("SSFS_THREADS", "many")
    assert _select(blobs_csv, out) == 2
