import csv
import io
import math
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hqamcr.cli import EXIT_CONFIG, EXIT_NONCONVERGENCE, EXIT_OK, main
from hqamcr.config import ConfigError, db_to_linear, linear_to_db, validate_config
from hqamcr.experiment import COLUMNS, CSV_SCHEMA, format_csv, run_experiment

MINIMAL = """\
sweep:
  axis: lam
  values: [0.5]
p_pk_db: 10
q_avg_db: 4
"""


def _rows(text):
    lines = text.splitlines()
    assert lines[0] == CSV_SCHEMA
    return list(csv.DictReader(io.StringIO("\n".join(lines[1:]))))


def test_defaults_echo_the_reference_setup():
    cfg = validate_config(MINIMAL)
    assert cfg.sigma_n2 == 0.01 and cfg.sigma_w2 == 0.5
    assert cfg.prior_busy == 0.4 and cfg.prior_idle == pytest.approx(0.6)
    assert cfg.thr == 1.8
    assert cfg.step == 1e-3 and cfg.tol == 1e-7
    assert cfg.q_avg == pytest.approx(10 ** 0.4) and cfg.p_pk == pytest.approx(10.0)


def test_invalid_probability_is_reported_with_line():
    with pytest.raises(ConfigError) as info:
        validate_config(MINIMAL + "p_d: 1.2\n")
    (msg,) = info.value.diagnostics
    assert "p_d" in msg and "[0, 1]" in msg and "line 6" in msg


def test_missing_fields_are_all_reported():
    with pytest.raises(ConfigError) as info:
        validate_config("sweep: {axis: p_f, values: [0.1]}\nm: 0.2\nfoo: 1\n")
    text = "\n".join(info.value.diagnostics)
    for needle in ("q_avg_db: required", "m: must be >= 0.5", "foo: unknown field", "p_pk_db: required"):
        assert needle in text


def test_sweep_validation():
    with pytest.raises(ConfigError):
        validate_config("q_avg_db: 4\np_pk_db: 10\n")
    with pytest.raises(ConfigError):
        validate_config(MINIMAL.replace("lam", "sigma_n2"))
    with pytest.raises(ConfigError):
        validate_config(MINIMAL.replace("[0.5]", "[0.5, 1.5]"))
    cfg = validate_config("sweep: {axis: p_d, start: 0.6, stop: 1.0, num: 5}\np_pk_db: 10\nq_avg_db: 4\n")
    assert cfg.sweep_values == pytest.approx((0.6, 0.7, 0.8, 0.9, 1.0))
    assert cfg.at(0.7).p_d == 0.7


def test_lambertw_needs_perfect_sensing():
    with pytest.raises(ConfigError):
        validate_config(MINIMAL + "inner: lambertw\ncsi: perfect\n")


def test_yaml_syntax_error():
    with pytest.raises(ConfigError) as info:
        validate_config("sweep: [\n")
    assert "YAML" in info.value.diagnostics[0]


@given(st.floats(-100.0, 100.0))
def test_db_round_trip(v):
    assert linear_to_db(db_to_linear(v)) == pytest.approx(v, rel=1e-12, abs=1e-12)
    assert db_to_linear(linear_to_db(10 ** (v / 10))) == pytest.approx(10 ** (v / 10), rel=1e-12)


def test_length_one_sweep_gives_one_row_per_seed():
    cfg = validate_config(MINIMAL + "seeds: [3, 1, 2]\n")
    rows, _ = run_experiment(cfg)
    assert [r["seed"] for r in rows] == [3, 1, 2]
    assert all(set(COLUMNS) <= set(r) for r in rows)


def test_statistical_sweep_rows(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("sweep: {axis: lam, values: [0.1, 0.9]}\np_pk_db: 10\nq_avg_db: 4\n"
                    "link_sim: true\nimage_size: 16\nn_packets: 4\nseeds: [0, 1]\n")
    out = tmp_path / "out.csv"
    assert main([str(path), "-o", str(out)]) == EXIT_OK
    rows = _rows(out.read_text())
    assert len(rows) == 4
    for r in rows:
        assert 0 < float(r["ber_hp"]) < float(r["ber_lp"]) < 0.5
        assert float(r["psnr"]) > 0 and int(float(r["n_re"])) >= 0


def test_csv_is_byte_identical_across_runs_and_workers(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("sweep: {axis: p_d, values: [0.8, 1.0]}\nconstraint: [peak, avg]\np_pk_db: 10\n"
                    "p_avg_db: 10\nq_avg_db: 4\nlink_sim: true\nimage_size: 16\nn_packets: 4\n"
                    "seeds: [0, 1]\n")
    outs = []
    for workers in ("1", "1", "2"):
        out = tmp_path / f"o{len(outs)}.csv"
        assert main([str(path), "-o", str(out), "-j", workers]) == EXIT_OK
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_instantaneous_config_and_dual_trace(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("sweep: {axis: q_avg_db, values: [4]}\ncsi: perfect\nconstraint: peak\np_pk_db: 10\n"
                    "n_samples: 500\neval_samples: 2000\nmethod: bracket\n")
    out, tr = tmp_path / "o.csv", tmp_path / "t.csv"
    assert main([str(path), "-o", str(out), "--emit-dual-trace", str(tr)]) == EXIT_OK
    (row,) = _rows(out.read_text())
    assert row["method"] == "bracket" and float(row["mu1"]) > 0
    assert tr.read_text().startswith("# hqamcr dual trace v1\n")
    assert len(tr.read_text().splitlines()) > 3


def test_exit_code_for_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text(MINIMAL + "p_d: 1.2\n")
    assert main([str(bad)]) == EXIT_CONFIG
    assert "p_d" in capsys.readouterr().err
    assert main([str(tmp_path / "missing.yaml")]) == EXIT_CONFIG
    assert main([str(bad), "-j", "0"]) == EXIT_CONFIG


def test_exit_code_for_nonconvergence(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("sweep: {axis: q_avg_db, values: [4]}\ncsi: perfect\np_pk_db: 10\n"
                    "n_samples: 200\nmethod: subgradient\nmax_iter: 3\n")
    tr = tmp_path / "t.csv"
    assert main([str(path), "--emit-dual-trace", str(tr)]) == EXIT_NONCONVERGENCE
    assert len(tr.read_text().splitlines()) == 2 + 3


def test_infinite_psnr_written_as_cap():
    row = {c: 0 for c in COLUMNS}
    row.update(psnr=math.inf, ber_hp=math.nan, cap_limited=True)
    text = format_csv([row])
    (r,) = _rows(text)
    assert r["psnr"] == "99.0" and r["ber_hp"] == "nan" and r["cap_limited"] == "1"


def test_console_entry_point(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(MINIMAL)
    res = subprocess.run([sys.executable, "-m", "hqamcr", str(path)], capture_output=True, text=True)
    assert res.returncode == 0
    (row,) = _rows(res.stdout)
    p0, p1 = float(row["p0"]), float(row["p1"])
    assert 0.1 * p0 + 0.9 * p1 <= 10 ** 0.4 * (1 + 1e-12)
    assert np.isfinite(p0)
