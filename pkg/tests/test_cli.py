import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qfriction import cli
from qfriction.config import (
    REPORT_COLUMNS,
    ConfigError,
    SweepSpec,
    load_config,
    parse_config,
    read_reports,
    read_table,
    write_reports,
)
from qfriction.forces import ForceReport
from qfriction.units import ValidationError

CAVITY_TOML = """
[geometry]
w = 1.0
z_a = 1.0
[geometry.plate1]
r0 = 1.0
rho = 1.0
[geometry.plate2]
r0 = 1.0
rho = 1.0

[particle]
alpha0 = 1.0
mu_xx = 1.0
mu_yy = 1.0
mu_zz = 1.0

[motion]
v = 1.0
"""

SINGLE_TOML = """
[geometry]
single_plane = true
z_a = 0.5
[geometry.plate1]
rho = 1.0
[particle]
mu_xx = 1.0
mu_yy = 1.0
mu_zz = 1.0
"""


@pytest.fixture
def write(tmp_path):
    def _write(text, name="run.toml"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return _write


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_load_config(write):
    cfg = load_config(write(CAVITY_TOML))
    assert cfg.geometry.identical_plates
    assert cfg.particle.dissipation.is_isotropic
    assert cfg.quad_spec().rel_tol == 1e-9


@pytest.mark.parametrize("text, match", [
    ("[geometry]\nz_a = 1.0\nw = 1.0\ncolour = 3\n", "unknown key"),
    ("[plates]\n", "unknown section"),
    ("[geometry]\nw = 1.0\n", "z_a is required"),
    ("[geometry]\nz_a = 0.5\n", "w is required"),
    ("[geometry]\nz_a = 'far'\nw = 1.0\n", "must be of type float"),
    ("[geometry]\nz_a = 0.5\nw = 1\n[output]\nformat = 'xml'\n", "format"),
    ("[geometry]\nz_a = 0.5\nw = 1\n[sweep]\nparam = 'colour'\nfrom = 1\nto = 2\nsteps = 2\n",
     "unknown sweep parameter"),
])
def test_config_errors(text, match, write):
    with pytest.raises(ConfigError, match=match):
        load_config(write(text))


def test_config_enforces_model_invariants(write):
    with pytest.raises(ValidationError, match="passivity"):
        load_config(write("[geometry]\nw = 1.0\nz_a = 0.5\n[geometry.plate1]\nrho = -1.0\n"))


def test_invalid_toml(write):
    with pytest.raises(ConfigError, match="not valid TOML"):
        load_config(write("[geometry\n"))


def test_sweep_values():
    assert SweepSpec("v", 1, 4, 3, "log").values() == pytest.approx([1, 2, 4])
    assert SweepSpec("z_a", 0.2, 1.8, 5).values() == pytest.approx([0.2, 0.6, 1.0, 1.4, 1.8])


finite = st.floats(-1e6, 1e6, allow_nan=False)
maybe = st.one_of(st.none(), finite)


@given(finite, maybe, st.floats(1e-3, 10), finite, finite, finite, finite, maybe, maybe,
       finite, finite, st.sampled_from(["csv", "json"]))
@settings(max_examples=60)
def test_report_roundtrip(z, w, v, fi, fr, fia, fra, ei, er, ss, sp, fmt):
    rep = ForceReport(z, w, v, fi, fr, fia, fra, ei, er, ss, sp)
    buf = io.StringIO()
    write_reports([rep, rep], fmt, buf)
    back = read_reports(buf.getvalue(), fmt)
    assert back == [rep, rep]


def test_single_command(capsys, write):
    code, out, err = run(["single", "--config", write(SINGLE_TOML)], capsys)
    assert code == 0
    row = read_table(out, "csv")[0]
    assert list(row) == list(REPORT_COLUMNS)
    assert row["f_rad"] == pytest.approx(-18 / math.pi**3, rel=1e-10)
    assert row["f_int"] == pytest.approx(-45 / math.pi**2, rel=1e-10)
    assert "phi = 3.5" in err


def test_single_without_dissipation(capsys, write):
    code, out, _ = run(["single", "--config",
                        write(SINGLE_TOML.replace("rho = 1.0", "rho = 0.0"))], capsys)
    row = read_table(out, "csv")[0]
    assert code == 0 and row["f_int"] == 0 and row["f_rad"] == 0
    assert row["eta_rad"] is None


def test_single_rejects_cavity(capsys, write):
    code, _, err = run(["single", "--config", write(CAVITY_TOML)], capsys)
    assert code == 2 and "single_plane" in err


def test_cavity_command_json(capsys, write):
    code, out, _ = run(["cavity", "--config", write(CAVITY_TOML), "--format", "json"], capsys)
    row = json.loads(out)[0]
    assert code == 0
    assert row["eta_rad"] == pytest.approx(8.661, rel=1e-3)
    assert row["eta_int"] == pytest.approx(1.001447, rel=1e-6)


def test_cavity_perfect_conductor(capsys, write):
    text = CAVITY_TOML.replace("z_a = 1.0", "z_a = 0.5").replace(
        "[geometry.plate2]\nr0 = 1.0\nrho = 1.0", "[geometry.plate2]\nperfect_conductor = true")
    code, out, _ = run(["cavity", "--config", write(text)], capsys)
    row = read_table(out, "csv")[0]
    assert code == 0 and abs(row["f_int"]) > abs(-45 / math.pi**2)


def test_fig3(capsys, write):
    text = CAVITY_TOML + "[numerics]\nn_points = 17\n"
    code, out, _ = run(["fig3", "--config", write(text)], capsys)
    rows = read_table(out, "csv")
    assert code == 0 and len(rows) == 17
    assert rows[0]["z_over_w"] == pytest.approx(0.1) and rows[-1]["z_over_w"] == pytest.approx(1.9)
    mid = rows[8]
    assert mid["eta_rad"] == pytest.approx(8.66, abs=0.005)
    assert mid["lorentz_model"] == pytest.approx(8.84, abs=0.005)
    assert 1 < rows[0]["eta_rad"] < 1.1


def test_sweep_velocity_cubic(capsys, write):
    code, out, _ = run(["sweep", "--config", write(CAVITY_TOML), "--param", "v",
                        "--from", "1", "--to", "4", "--steps", "3", "--spacing", "log"], capsys)
    f = [r["f_rad"] for r in read_table(out, "csv")]
    assert code == 0
    assert f[1] / f[0] == pytest.approx(8, rel=1e-10)
    assert f[2] / f[0] == pytest.approx(64, rel=1e-10)


def test_sweep_position_palindromic(capsys, write, tmp_path):
    out_path = tmp_path / "sweep.csv"
    text = CAVITY_TOML + "[sweep]\nparam = 'z_a'\nfrom = 0.2\nto = 1.8\nsteps = 9\n"
    code, _, _ = run(["sweep", "--config", write(text), "--out", str(out_path)], capsys)
    rows = read_table(out_path.read_text(), "csv")
    eta = np.array([r["eta_rad"] for r in rows])
    assert code == 0 and len(rows) == 9
    assert np.abs(eta - eta[::-1]).max() < 1e-8
    # bit-stable across runs
    run(["sweep", "--config", write(text), "--out", str(tmp_path / "again.csv")], capsys)
    assert (tmp_path / "again.csv").read_text() == out_path.read_text()


def test_sweep_large_width_is_additive(capsys, write):
    text = CAVITY_TOML.replace("z_a = 1.0", "z_a = 0.5")
    code, out, _ = run(["sweep", "--config", write(text), "--param", "w",
                        "--from", "1", "--to", "100", "--steps", "3", "--spacing", "log"], capsys)
    eta = [r["eta_rad"] for r in read_table(out, "csv")]
    assert code == 0 and abs(eta[-1] - 1) < 1e-3 and eta[0] > eta[1] > eta[2]


@pytest.mark.parametrize("param", ["rho1", "rho2", "r0"])
def test_sweep_plate_parameters(param, capsys, write):
    code, out, _ = run(["sweep", "--config", write(CAVITY_TOML), "--param", param,
                        "--from", "0.5", "--to", "1", "--steps", "2"], capsys)
    assert code == 0 and len(read_table(out, "csv")) == 2


def test_sweep_errors(capsys, write):
    code, _, err = run(["sweep", "--config", write(CAVITY_TOML), "--param", "colour",
                        "--from", "0", "--to", "1", "--steps", "2"], capsys)
    assert code == 2 and "unknown sweep parameter" in err
    code, _, _ = run(["sweep", "--config", write(CAVITY_TOML), "--param", "v"], capsys)
    assert code == 2
    code, _, _ = run(["sweep", "--config", write(SINGLE_TOML), "--param", "w",
                      "--from", "1", "--to", "2", "--steps", "2"], capsys)
    assert code == 2


def test_validate(capsys, write):
    code, out, _ = run(["validate", "--config", write(CAVITY_TOML), "--seed", "7"], capsys)
    assert code == 0 and "FAIL" not in out and out.count("PASS") == 8


def test_validate_detects_parity_fault(capsys, write):
    code, out, _ = run(["validate", "--config", write(CAVITY_TOML), "--inject-fault", "parity"],
                       capsys)
    assert code == 1 and "FAIL  parity" in out


def test_validate_rejects_bad_model(capsys, write):
    code, out, err = run(["validate", "--config",
                          write(CAVITY_TOML.replace("rho = 1.0", "rho = -1.0", 1))], capsys)
    assert code == 2 and "passivity" in err and out == ""


def test_numeric_failure_exit_code(capsys, write):
    code, _, err = run(["cavity", "--config", write(CAVITY_TOML + "[numerics]\nmax_evals = 15\n")],
                       capsys)
    assert code == 3 and "numerical failure" in err


def test_global_flags_before_subcommand(capsys, write):
    code, out, _ = run(["--format", "json", "--config", write(SINGLE_TOML), "single"], capsys)
    assert code == 0 and json.loads(out)[0]["z_a"] == 0.5


def test_rel_tol_override(capsys, write):
    code, _, _ = run(["cavity", "--config", write(CAVITY_TOML), "--rel-tol", "-1"], capsys)
    assert code == 2
