import csv
import json

import numpy as np
import pytest

from spheremetric import synthetic
from spheremetric.cli import main, parse_sweep
from spheremetric.corruption import FovReductionConfig, reduce_vertical_fov
from spheremetric.dataset import read_rgb, save_image
from spheremetric.errors import InvalidInputError
from spheremetric.projection import FaceLabel


def _run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def pole_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("pole")
    assert _run("synth", "--out", root, "--kind", "pole", "--count", 24, "--width", 128, "--seed", 3) == 0
    return root


@pytest.fixture(scope="module")
def fov_dir(pole_dir, tmp_path_factory):
    root = tmp_path_factory.mktemp("fov40")
    cfg = FovReductionConfig(40.0)
    for p in sorted(pole_dir.glob("*.png")):
        save_image(root / p.name, reduce_vertical_fov(read_rgb(p).astype(float), cfg))
    return root


def _common(ref, ev, out):
    return ("--ref", ref, "--eval", ev, "--out", out, "--face-size", 32, "--min-samples", 0, "--jobs", 1)


def test_identical_dirs_give_zero(pole_dir, tmp_path):
    out = tmp_path / "r.json"
    assert _run("omnifid", *_common(pole_dir, pole_dir, out)) == 0
    rep = json.loads(out.read_text())
    assert rep["results"]["fid"] <= 1e-9 and rep["results"]["omnifid"] <= 1e-9
    assert rep["config"]["face_size"] == 32
    assert rep["provenance"]["extractor"]["name"] == "mock"
    assert {"started_utc", "elapsed_s"} <= set(rep["timing"])


def test_fov_reduction_shows_in_omnifid(pole_dir, fov_dir, tmp_path):
    out = tmp_path / "r.json"
    assert _run("omnifid", *_common(pole_dir, fov_dir, out)) == 0
    res = json.loads(out.read_text())["results"]
    assert res["omnifid"] > res["fid"] > 0
    assert res["fid_bar"]["up"] > res["fid_bar"]["frontal"]
    assert res["fid_bar"]["down"] > res["fid_bar"]["frontal"]


def test_csv_format(pole_dir, fov_dir, tmp_path):
    out = tmp_path / "r.csv"
    assert _run("omnifid", *_common(pole_dir, fov_dir, out), "--format", "csv") == 0
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["metric", "group", "value"]
    assert [r[:2] for r in rows[1:]] == [["fid", ""], ["fid_bar", "frontal"], ["fid_bar", "up"],
                                         ["fid_bar", "down"], ["omnifid", ""]]
    out2 = tmp_path / "f.csv"
    assert _run("fid", *_common(pole_dir, fov_dir, out2), "--format", "csv") == 0
    assert len(list(csv.reader(out2.open()))) == 2


def test_sample_floor_warning_is_reported(pole_dir, tmp_path):
    out = tmp_path / "r.json"
    assert _run("fid", "--ref", pole_dir, "--eval", pole_dir, "--out", out) == 0
    assert any("sample" in w for w in json.loads(out.read_text())["warnings"])


def test_exit_codes(pole_dir, tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        _run("fid", "--ref", pole_dir)
    assert exc.value.code == 2
    assert _run("corrupt", "--input", pole_dir, "--out", tmp_path / "c", "--sweep", "bogus") == 2
    assert _run("ds", "--eval", pole_dir, "--ds-c", -1) == 2
    assert _run("fid", *_common(pole_dir, tmp_path / "missing", tmp_path / "o.json")) == 3
    (tmp_path / "empty").mkdir()
    assert _run("ds", "--eval", tmp_path / "empty") == 3
    odd = tmp_path / "odd"
    save_image(odd / "x.png", np.full((30, 50, 3), 10.0))
    assert _run("ds", "--eval", odd) == 3
    assert _run("ds", "--eval", odd, "--no-strict-aspect", "--out", tmp_path / "d.json") == 0
    assert _run("fid", *_common(pole_dir, pole_dir, tmp_path / "o.json"), "--extractor", "inception-onnx",
                "--model-path", tmp_path / "none.onnx") == 4
    assert "error" in capsys.readouterr().err


def test_ds_outputs_and_c_echo(tmp_path):
    data = tmp_path / "seam"
    assert _run("synth", "--out", data, "--kind", "seam", "--count", 11, "--width", 64, "--seam-step", 6) == 0
    out = tmp_path / "ds.json"
    assert _run("ds", "--eval", data, "--ds-c", 0.1, "--out", out) == 0
    rep = json.loads(out.read_text())
    assert rep["config"]["ds_c"] == 0.1 and rep["provenance"]["ds"]["c"] == 0.1
    ex = rep["results"]["ds"]["percentile_exemplars"]
    assert [ex[str(p)] for p in range(0, 101, 10)] == [f"seam_{i:04d}.png" for i in range(11)]
    rows = list(csv.reader((tmp_path / "ds_scores.csv").open()))
    assert rows[0] == ["path", "ds"] and len(rows) == 12

    const = tmp_path / "const"
    for i in range(3):
        save_image(const / f"{i}.png", np.full((16, 32, 3), 40.0 * i))
    out_csv = tmp_path / "c.csv"
    assert _run("ds", "--eval", const, "--format", "csv", "--out", out_csv) == 0
    assert all(float(r[1]) == 0.0 for r in list(csv.reader(out_csv.open()))[1:])
    assert json.loads((tmp_path / "c_summary.json").read_text())["results"]["ds"]["mean"] == 0.0


def test_corrupt_writes_levels_deterministically(pole_dir, tmp_path):
    for run in ("a", "b"):
        assert _run("corrupt", "--input", pole_dir, "--out", tmp_path / run, "--sweep", "gaussian_noise",
                    "--seed", 11, "--jobs", 2) == 0
    dirs = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert dirs == ["gaussian_noise_10", "gaussian_noise_20", "gaussian_noise_40", "gaussian_noise_5"]
    for d in dirs:
        manifest = json.loads((tmp_path / "a" / d / "manifest.json").read_text())
        assert len(manifest["entries"]) == 24
        for p in sorted((tmp_path / "a" / d).iterdir()):
            assert p.read_bytes() == (tmp_path / "b" / d / p.name).read_bytes()


def test_corrupt_rejects_in_place(pole_dir):
    assert _run("corrupt", "--input", pole_dir, "--out", pole_dir, "--sweep", "fov") == 2


def test_project_writes_six_faces(tmp_path):
    src = tmp_path / "in"
    save_image(src / "pano.png", synthetic.smooth_panorama(128, 64))
    assert _run("project", "--input", src, "--out", tmp_path / "out", "--face-size", 24) == 0
    names = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert names == sorted(f"pano_{f.value}.png" for f in FaceLabel)
    assert all(read_rgb(tmp_path / "out" / n).shape == (24, 24, 3) for n in names)


def test_sweep_table(pole_dir, tmp_path):
    assert _run("corrupt", "--input", pole_dir, "--out", tmp_path / "lv", "--sweep", "fov:10,40") == 0
    out = tmp_path / "sweep.csv"
    assert _run("sweep", "--ref", pole_dir, "--eval", tmp_path / "lv", "--out", out, "--format", "csv",
                "--face-size", 32, "--min-samples", 0) == 0
    rows = list(csv.DictReader(out.open()))
    assert [(r["kind"], float(r["level"])) for r in rows] == [("fov", 10.0), ("fov", 40.0)]
    assert float(rows[1]["omnifid"]) > float(rows[0]["omnifid"])


def test_report_replay(pole_dir, fov_dir, tmp_path):
    first = tmp_path / "a.json"
    assert _run("omnifid", *_common(pole_dir, fov_dir, first), "--sampling", "nearest") == 0
    second = tmp_path / "b.json"
    assert _run("omnifid", "--ref", pole_dir, "--eval", fov_dir, "--config", first, "--out", second) == 0
    a, b = json.loads(first.read_text()), json.loads(second.read_text())
    assert b["config"]["sampling"] == "nearest" and b["config"]["face_size"] == 32
    assert a["results"] == b["results"]


def test_parse_sweep():
    assert parse_sweep("fov") == ("fov", [10.0, 20.0, 30.0, 40.0])
    assert parse_sweep("gaussian_blur:1,3") == ("gaussian_blur", [1.0, 3.0])
    with pytest.raises(InvalidInputError):
        parse_sweep("salt_pepper:a,b")
