"""End-to-end report pipeline and command line entry points."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from corruga import cli
from corruga.analysis import (export_modes, run_analysis, write_report,
                              write_spectrum)
from corruga.chart import builtin_chart, save_chart

REPORT_KEYS = {"E_basis", "chi_basis", "dims", "modes", "pairs", "poisson",
               "resolution", "row_counts", "sigma_max", "sigma_spectrum_ref",
               "surface", "threshold", "timings"}


def test_report_schema(analysis_bundle):
    report = analysis_bundle("eggbox", 16)
    assert REPORT_KEYS <= {k for k in report if not k.startswith("_")}
    dims = report["dims"]
    assert dims["sum"] == dims["membrane"] + dims["bending"]
    for m in report["modes"]:
        assert m["class"] in ("constant", "membrane", "bending", "mixed",
                              "strain-free")
        assert np.asarray(m["E"]).shape == (2, 2)
        assert np.asarray(m["chi"]).shape == (2, 2)
    for p in report["pairs"]:
        assert p["E_of"].startswith("membrane")
        assert p["chi_of"].startswith("bending")


def test_report_is_deterministic():
    chart = builtin_chart("corrugation")
    a = run_analysis(chart, 16)
    b = run_analysis(chart, 16)

    def strip(r):
        r = {k: v for k, v in r.items() if not k.startswith("_")}
        r.pop("timings")
        r["modes"] = [{k: v for k, v in m.items() if not k.startswith("_")}
                      for m in r["modes"]]
        return json.dumps(r, sort_keys=True,
                          default=lambda o: np.asarray(o).tolist())

    assert strip(a) == strip(b)


def test_writers_produce_artifacts(tmp_path, analysis_bundle):
    report = analysis_bundle("eggbox", 16)
    write_report(report, tmp_path / "report.json")
    write_spectrum(report, tmp_path / "spectrum.csv")
    names = export_modes(report, tmp_path)

    loaded = json.loads((tmp_path / "report.json").read_text())
    assert not any(k.startswith("_") for k in loaded)
    assert loaded["dims"] == report["dims"]

    with open(tmp_path / "spectrum.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["space", "index", "sigma", "sigma_rel"]
    assert all(row[0] in ("membrane", "growth") for row in rows[1:])
    assert len(rows) > 1

    assert names
    for name in names:
        p = Path(name)
        assert p.exists() and p.suffix == ".obj"
    entries = json.loads((tmp_path / "modes.json").read_text())
    assert len(entries) == len(names)


def test_obj_vertices_have_display_amplitude(tmp_path, analysis_bundle):
    report = analysis_bundle("eggbox", 16)
    names = export_modes(report, tmp_path)
    text = Path(names[0]).read_text()
    verts = np.array([[float(t) for t in line.split()[1:]]
                      for line in text.splitlines() if line.startswith("v ")])
    assert len(verts) > 0
    assert np.all(np.isfinite(verts))


def test_cli_analyze_builtin(tmp_path, capsys):
    out = tmp_path / "run"
    code = cli.main(["analyze", "--surface", "eggbox", "--resolution", "16",
                     "--out", str(out)])
    assert code == 0
    assert (out / "report.json").exists()
    assert (out / "spectrum.csv").exists()
    report = json.loads((out / "report.json").read_text())
    assert report["dims"]["membrane"] == 1
    assert report["dims"]["bending"] == 2
    assert report["seed"] == 0
    text = capsys.readouterr().out
    assert "membrane" in text and "bending" in text


def test_cli_analyze_from_config_file(tmp_path):
    cfg = tmp_path / "surface.json"
    save_chart(builtin_chart("corrugation"), cfg)
    out = tmp_path / "run"
    code = cli.main(["analyze", "--surface", str(cfg), "--resolution", "16",
                     "--seed", "7", "--out", str(out), "--export-obj"])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["seed"] == 7
    assert (out / "modes").is_dir()
    assert list((out / "modes").glob("*.obj"))


def test_cli_analyze_rectangular_resolution(tmp_path):
    out = tmp_path / "run"
    code = cli.main(["analyze", "--surface", "corrugation",
                     "--resolution", "16,12", "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["resolution"]["requested"] == [16, 12]


def test_cli_analyze_bad_surface(tmp_path, capsys):
    code = cli.main(["analyze", "--surface", str(tmp_path / "missing.json"),
                     "--out", str(tmp_path / "o")])
    assert code == 1
    assert capsys.readouterr().err != ""


def test_cli_exit_code_for_ambiguous_threshold(tmp_path, monkeypatch):
    import corruga.analysis as analysis_mod

    def fake(chart, resolution=32, threshold="auto", policy=None):
        return {
            "surface": {"family": "plane"}, "resolution": 16,
            "row_counts": {}, "sigma_max": 1.0,
            "threshold": {"kind": "auto", "ambiguous": True,
                          "E_cut": 0, "chi_cut": 0},
            "dims": {"membrane": 0, "bending": 0, "sum": 0,
                     "rank_bound_ok": True},
            "E_basis": [], "chi_basis": [], "modes": [], "pairs": [],
            "poisson": None, "sigma_spectrum_ref": [],
            "timings": {}, "_spectrum_rows": [],
        }

    monkeypatch.setattr(analysis_mod, "run_analysis", fake)
    out = tmp_path / "run"
    code = cli.main(["analyze", "--surface", "plane", "--out", str(out)])
    assert code == 3
    # report still written so the run can be inspected
    assert (out / "report.json").exists()


def test_cli_verify_warping(tmp_path, capsys):
    summary = tmp_path / "verify.json"
    code = cli.main(["verify", "warping", "--out", str(summary)])
    assert code == 0
    data = json.loads(summary.read_text())
    assert data["passed"] is True
    assert "warping" in capsys.readouterr().out


def test_cli_rejects_unknown_suite():
    with pytest.raises(SystemExit) as exc:
        cli.main(["verify", "nonsense"])
    assert exc.value.code == 2


def test_cli_threshold_fixed_value(tmp_path):
    out = tmp_path / "run"
    code = cli.main(["analyze", "--surface", "plane", "--resolution", "16",
                     "--threshold", "1e-6", "--out", str(out)])
    assert code == 0
    report = json.loads((out / "report.json").read_text())
    assert report["threshold"]["kind"] == "fixed"
    assert report["dims"]["membrane"] == 0
    assert report["dims"]["bending"] == 3
