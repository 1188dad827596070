import csv
import io
import json

import numpy as np
import pytest

from bubblescatter import cli


def _cfg(text=None, preset=None):
    return cli.load_config(text, preset)


def test_defaults():
    cfg = _cfg()
    assert cfg.dimension == 3 and cfg.n == (5,) and cfg.normalized and cfg.kind == "printed"
    assert (cfg.shell.zeta1, cfg.shell.zeta2, cfg.shell.R) == (0.9, 1.1, 2.0)
    assert cfg.resolution == 41 and cfg.plane == "xz"
    assert cfg.medium.tau == pytest.approx(0.3362682, rel=1e-6)


def test_presets():
    t1, t2 = _cfg(preset="table1"), _cfg(preset="table2")
    assert t1.dimension == 2 and t1.n == (20, 40, 60)
    assert t2.dimension == 3 and t2.n == (5, 15, 25) and t2.medium.tau == 0.33627
    assert _cfg("[incident]\nn = 7\n", preset="table1").n == (7,)


@pytest.mark.parametrize("text,line", [
    ("[incident]\nn = 5\nbogus = 1\n", 3),
    ("[shell]\n\nzeta1 = abc\n", 3),
    ("[nonsense]\nx = 1\n", 1),
])
def test_config_errors_name_the_line(text, line):
    with pytest.raises(cli.ConfigError, match=f"line {line}"):
        _cfg(text)


@pytest.mark.parametrize("text", [
    "no header\n", "[incident]\ndimension = 4\n", "[incident]\nm = 9\n", "[grid]\nresolution = 1\n",
    "[run]\noutputs = u, velocity\n", "[tolerances]\neta = 2\n", "[medium]\nrho_b = -1\n",
    "[incident]\ndimension = 2\nm = 1\n", "[incident]\nn = 2\ncoefficients = 1, 0\n",
])
def test_invalid_configs(text):
    with pytest.raises(cli.ConfigError):
        _cfg(text)


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[incident]\nwhat = 1\n")
    assert cli.main(["params", "--config", str(bad)]) == 2
    assert "line 2" in capsys.readouterr().err
    assert cli.main(["params", "--threads", "0"]) == 2
    assert cli.main(["nosuch"]) == 2
    assert cli.main(["fields"]) == 2
    assert cli.main(["params"]) == 0


def test_params_reports_regime_warning():
    out = io.StringIO()
    assert cli.cmd_params(_cfg("[medium]\nrho_b = 500\n"), stream=out) == 0
    assert "DELTA_NOT_SMALL" in out.getvalue()
    assert "k_s_printed_formula" in out.getvalue()


def _run_fields(tmp_path, text, threads=1, name="run"):
    out = tmp_path / name
    assert cli.cmd_fields(_cfg(text), out, threads, stream=io.StringIO()) == 0
    return out


SMALL = "[grid]\nresolution = 9\n"


def test_fields_deterministic_across_runs_and_threads(tmp_path):
    a = _run_fields(tmp_path, SMALL, 1, "a")
    b = _run_fields(tmp_path, SMALL, 3, "b")
    for f in ("fields_n5.csv", "fields_n5.json"):
        assert (a / f).read_bytes() == (b / f).read_bytes()


def _rows(path):
    return list(csv.DictReader(open(path)))


def test_resolution_doubling_keeps_shared_samples(tmp_path):
    coarse = _rows(_run_fields(tmp_path, "[grid]\nresolution = 5\n", name="c") / "fields_n5.csv")
    fine = _rows(_run_fields(tmp_path, "[grid]\nresolution = 9\n", name="f") / "fields_n5.csv")
    fine_by_xyz = {(round(float(r["x1"]), 12), round(float(r["x3"]), 12)): r for r in fine}
    for r in coarse:
        g = fine_by_xyz[(round(float(r["x1"]), 12), round(float(r["x3"]), 12))]
        for key in ("us_1_re", "ui_3_im", "u_re", "E_density"):
            if r[key]:
                assert float(g[key]) == pytest.approx(float(r[key]), rel=1e-12, abs=1e-300)


def test_zero_amplitude_gives_zero_grids(tmp_path):
    out = _run_fields(tmp_path, SMALL + "[incident]\namplitude = 0\n")
    for r in _rows(out / "fields_n5.csv"):
        vals = [float(v) for k, v in r.items() if k not in ("x1", "x2", "x3", "r", "theta", "phi", "region") and v]
        assert all(v == 0 for v in vals)


def test_sidecar_schema(tmp_path):
    meta = json.loads((_run_fields(tmp_path, SMALL) / "fields_n5.json").read_text())
    assert meta["schema"] == 1
    assert set(meta["scales"]) == {"u", "us", "ui", "total", "E_density"}
    assert all("log10_mag" in v and "phase" in v for v in meta["scales"].values())


def test_disk_stress_growth(tmp_path):
    out = _run_fields(tmp_path, "[incident]\ndimension = 2\nn = 25\n[grid]\nresolution = 21\n")
    meta = json.loads((out / "fields_n25.json").read_text())
    E = max(float(r["E_density"]) for r in _rows(out / "fields_n25.csv") if r["E_density"])
    assert np.log10(E) + meta["scales"]["E_density"]["log10_mag"] > 14


def test_table1_diagnostics(tmp_path):
    out = io.StringIO()
    assert cli.cmd_diagnostics(_cfg(preset="table1"), tmp_path, "table1", stream=out) == 0
    data = json.loads((tmp_path / "diagnostics.json").read_text())
    assert [r["n"] for r in data["reports"]] == [20, 40, 60]
    assert data["reports"][2]["reference"]["eta_u"] == 0.0720115793865058
    assert "reference" in out.getvalue()


def test_verify_checks_shape():
    c = cli.Check("x", 1e-12, 1e-10)
    assert c.passed and c.line().startswith("PASS")
    assert not cli.Check("y", 1.0, 1e-6).passed
    assert cli.check_lambert() < 1e-13
    assert cli.check_wronskian(12) < 1e-11
