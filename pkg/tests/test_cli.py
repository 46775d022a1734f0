import csv
import json

import numpy as np
import pytest

from cavity_xy import io
from cavity_xy.cli import main
from cavity_xy.couplings import CouplingTable


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_couplings_preset_ratio(tmp_path):
    out = tmp_path / "j.csv"
    assert main(["couplings", "--preset", "nL4", "--n", "40", "--ratio", "--out", str(out)]) == 0
    rows = _rows(out)
    assert list(rows[0]) == ["l", "J", "ratio"] and len(rows) == 21
    inv_sqrt = [1 / np.sqrt(float(rows[l]["ratio"])) for l in (3, 5, 7, 9, 11)]
    np.testing.assert_allclose(inv_sqrt, [3.0, 5.0, 8.4, 14.0, 23.2], rtol=0.015)


def test_couplings_default_header(capsys):
    assert main(["couplings", "--preset", "ideal", "--n", "8"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "l,J" and len(lines) == 6


def test_band_resonance_exit_1(capsys):
    assert main(["couplings", "--pair", "1.5,0.002"]) == 1
    assert "BandResonance" in capsys.readouterr().err


def test_validity_exit_1(capsys):
    assert main(["couplings", "--pair", "3,0.05", "--threshold", "1e6"]) == 1
    assert "ValidityFailure" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg, path",
    [
        ({"fit": {"l_fit": [3, 4]}}, "fit.l_fit.1"),
        ({"array": {"n": 40, "colour": 1}}, "array"),
        ({"array": {"n": 41}}, "array.n"),
        ({"atom": {"omega_e": 1, "omega_ab": 2, "g": 1}}, "atom.omega_e"),
        ({"lasers": "nL6"}, "lasers"),
        ({"fit": {"l_fit": [3, 5], "weights": [1.0]}}, "fit.weights"),
        ({"dynamics": {"t_steps": 1}}, "dynamics.t_steps"),
    ],
)
def test_schema_rejection(tmp_path, capsys, cfg, path):
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    assert main(["--config", str(p), "couplings", "--preset", "ideal"]) == 2
    assert f"'{path}'" in capsys.readouterr().err


def test_malformed_json(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("{not json")
    assert main(["--config", str(p), "couplings", "--preset", "ideal"]) == 2


def test_unknown_flag_exit_2():
    assert main(["couplings", "--bogus"]) == 2


def test_config_lasers(tmp_path, capsys):
    cfg = {
        "array": {"n": 8, "t_hop": 1.0, "omega_c": 100.0},
        "atom": {"omega_e": 1100.0, "omega_ab": 10.0, "g": 0.5},
        "lasers": [{"rabi_re": 0.5, "omega_l": 60.0}, {"rabi_re": 0.5, "rabi_im": 0.0, "omega_l": 120.0}],
    }
    p = tmp_path / "cfg.json"
    p.write_text(json.dumps(cfg))
    assert main(["--config", str(p), "couplings"]) == 0
    assert capsys.readouterr().out.startswith("l,J\n0,")


def test_evolve_rows_normalised(tmp_path, capsys):
    j = tmp_path / "j.csv"
    prof = tmp_path / "p.csv"
    fid = tmp_path / "f.csv"
    assert main(["couplings", "--preset", "nL4", "--n", "40", "--out", str(j)]) == 0
    assert main(["evolve", "--couplings", str(j), "--source", "10", "--steps", "41",
                 "--out", str(prof), "--fidelity-out", str(fid)]) == 0
    summary = json.loads(capsys.readouterr().err)
    assert summary["peak_site"] == 30 and summary["target"] == 30
    rows = _rows(prof)
    assert list(rows[0]) == ["t", "site", "prob"] and len(rows) == 41 * 40
    probs = np.array([float(r["prob"]) for r in rows]).reshape(41, 40)
    np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
    t_max = float(rows[-1]["t"])
    assert t_max == pytest.approx(2 * summary["t_star"], rel=1e-12)
    assert list(_rows(fid)[0]) == ["t", "fidelity"]


def test_dispersion(tmp_path, capsys):
    out = tmp_path / "d.csv"
    assert main(["dispersion", "--preset", "nL4", "--n", "40", "--out", str(out)]) == 0
    report = json.loads(capsys.readouterr().err)["linearity"]
    assert report["max_abs_dev"] < 0.01
    assert list(_rows(out)[0]) == ["k", "E", "v"]


def test_optimize_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    ta, tb = tmp_path / "a.csv", tmp_path / "b.csv"
    for out, tab in ((a, ta), (b, tb)):
        assert main(["optimize", "--pairs", "1", "--l-fit", "3", "--starts", "4", "--out", str(out),
                     "--table-out", str(tab)]) == 0
    assert a.read_bytes() == b.read_bytes() and ta.read_bytes() == tb.read_bytes()
    assert json.loads(a.read_text())["pairs"][0]["d"] == pytest.approx(10 / 3, rel=1e-6)


def test_verify(tmp_path):
    out = tmp_path / "v.json"
    assert main(["verify", "--margin", "10", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert set(report) == {"params", "margins", "leakage_max", "infidelity_max", "dt_final", "converged"}
    assert report["converged"] and report["margins"]["pass"]


def test_repeat_byte_identical(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        main(["couplings", "--preset", "nL2", "--out", str(out)])
    assert a.read_bytes() == b.read_bytes()


def test_csv_roundtrip_full_precision(tmp_path):
    table = CouplingTable(6, np.array([0.1, 1 / 3, np.pi, -2e-17]))
    path = tmp_path / "t.csv"
    io.write_couplings(path, table)
    assert np.array_equal(io.read_couplings(path).j_of_l, table.j_of_l)


def test_digits_env(monkeypatch):
    monkeypatch.setenv(io.DIGITS_ENV, "5")
    assert io.fmt(1 / 3) == "0.33333"
    monkeypatch.setenv(io.DIGITS_ENV, "zero")
    with pytest.raises(Exception):
        io.fmt(1.0)
