import filecmp
import json
import subprocess
import sys

import mpmath as mp
import pytest

from shemoments import io
from shemoments.cli import load_config, main, parse_measure
from shemoments.errors import ConfigError
from shemoments.kernels import kernel_K


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path)], quiet=True)


def table(path):
    header, rows = io.read_csv(path)
    return [dict(zip(header, r)) for r in rows]


def test_parse_measure_grammar():
    assert parse_measure("lebesgue").is_lebesgue
    assert parse_measure("delta").single_atom == (0.0, 1.0)
    assert parse_measure("delta:0.5").single_atom == (0.5, 1.0)
    assert parse_measure("dirac").single_atom == (0.0, 1.0)
    assert parse_measure("exp_decay:1").spec().startswith("exp_decay")
    assert parse_measure("exp_growth:0.5,1.5").is_nonnegative
    assert parse_measure("gaussian_bump:0,0.5").density_value(0.0) == 1.0
    assert parse_measure("indicator:-1,1").density_value(0.0) == 1.0
    assert parse_measure("atoms:(0,1);(1.5,-2e-1)").atoms == ((0.0, 1.0), (1.5, -0.2))
    for bad in ("nope", "exp_decay", "exp_decay:1,2", "atoms:", "atoms:(1,2", "exp_growth:1,3", "lebesgue:2",
                "indicator:a,b"):
        with pytest.raises(ConfigError):
            parse_measure(bad)


def test_moments_examples(tmp_path):
    assert run(tmp_path, "moments", "--measure", "lebesgue", "--nu", "1", "--lambda", "1", "--vv", "0",
               "--t", "1", "--x", "0", "--p", "2") == 0
    row = table(tmp_path / "moments.csv")[0]
    # 1 + H(1; 1, 1) = 2 e^{1/4} Phi(1/sqrt 2)
    assert float(row["value"]) == pytest.approx(float(2 * mp.exp(0.25) * mp.ncdf(mp.sqrt(0.5))), rel=1e-14)
    assert row["formula"] == "closed-lebesgue" and row["tolerance"] == "machine"
    assert run(tmp_path, "moments", "--measure", "delta", "--t", "0.5", "--x", "0", "--p", "2", "--nu", "1",
               "--lambda", "1") == 0
    row = table(tmp_path / "moments.csv")[0]
    assert float(row["value"]) == pytest.approx(kernel_K(0.5, 0.0, 1.0, 1.0), rel=1e-14)
    m = json.loads((tmp_path / "manifest.json").read_text())
    assert m["command"] == "moments" and m["config"]["measure"] == "delta" and "version" in m


def test_moments_higher_order_and_json(tmp_path):
    assert run(tmp_path, "moments", "--measure", "lebesgue", "--p", "2,4", "--t", "0.5", "--lambda", "0.3",
               "--format", "json") == 0
    rows = json.loads((tmp_path / "moments.json").read_text())
    assert [r["branch"] for r in rows] == ["exact", "p>2"]
    assert rows[1]["value"] > rows[0]["value"] ** 2


def test_exit_codes(tmp_path):
    assert run(tmp_path, "moments", "--measure", "unknown") == 2
    assert run(tmp_path, "moments", "--measure", "exp_growth:1,3") == 2
    assert run(tmp_path, "moments", "--p", "3") == 2
    assert run(tmp_path, "moments", "--t", "-1") == 2
    assert main(["moments", "--bogus"], quiet=True) == 2
    assert main(["frobnicate"], quiet=True) == 2
    # e^{x^2} data is not admissible at t = 1
    assert run(tmp_path, "moments", "--measure", "exp_growth:1,2", "--t", "1") == 3
    assert run(tmp_path, "simulate", "--L", "1", "--T", "0.5", "--M", "2") == 2
    assert run(tmp_path, "simulate", "--L", "3", "--T", "0.2", "--M", "2", "--lambda", "200",
               "--query", "0") == 3
    assert run(tmp_path, "holder", "--L", "3", "--T", "0.1", "--M", "2", "--t0", "0.05",
               "--window", "0.05,0.1") == 2
    assert run(tmp_path, "validate", "--only", "no-such-group") == 2


def test_config_file_and_override(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("# campaign\nmeasure = delta\nlambda = 2\nt = 0.5  # half\n")
    assert load_config(conf) == {"measure": "delta", "lam": "2", "t": "0.5"}
    out = tmp_path / "o"
    assert run(out, "moments", "--config", str(conf)) == 0
    row = table(out / "moments.csv")[0]
    assert float(row["lambda"]) == 2.0 and float(row["t"]) == 0.5
    assert run(out, "moments", "--config", str(conf), "--lambda", "1") == 0
    assert float(table(out / "moments.csv")[0]["lambda"]) == 1.0
    (tmp_path / "bad.conf").write_text("colour = blue\n")
    assert run(out, "moments", "--config", str(tmp_path / "bad.conf")) == 2
    (tmp_path / "worse.conf").write_text("just words\n")
    assert run(out, "moments", "--config", str(tmp_path / "worse.conf")) == 2


def test_twopoint(tmp_path):
    assert run(tmp_path, "twopoint", "--measure", "lebesgue", "--t", "0.5", "--x", "0", "--y", "0,0.3") == 0
    rows = table(tmp_path / "twopoint.csv")
    assert len(rows) == 2 and float(rows[0]["value"]) > float(rows[1]["value"]) > 1.0


def test_growth(tmp_path):
    assert run(tmp_path, "growth", "--measure", "delta", "--nu", "1", "--lambda", "1") == 0
    rep = json.loads((tmp_path / "growth.json").read_text())
    assert 0.45 <= rep["transition"] <= 0.55
    assert run(tmp_path, "growth", "--measure", "delta", "--vv", "0.5") == 2


@pytest.mark.slow
def test_growth_exp_decay_example(tmp_path):
    assert run(tmp_path, "growth", "--measure", "exp_decay:1", "--nu", "1", "--lambda", "1") == 0
    rep = json.loads((tmp_path / "growth.json").read_text())
    assert rep["transition"] == pytest.approx(0.5, rel=0.05)


def test_simulate_is_byte_identical(tmp_path):
    args = ["simulate", "--measure", "delta", "--seed", "7", "--L", "3", "--T", "0.05", "--M", "4",
            "--record", "0.025,0.05", "--query", "0,0.5", "--binary"]
    assert run(tmp_path / "a", *args) == 0
    assert run(tmp_path / "b", *args) == 0
    names = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert "fields.csv" in names and "estimates.csv" in names and "field_00003.she1" in names
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "a", tmp_path / "b", names, shallow=False)
    assert not mismatch and not errors
    est = table(tmp_path / "a" / "estimates.csv")
    assert {r["p"] for r in est} == {"1", "2"} and all(r["M"] == "4" for r in est)
    values, hdr = io.read_she1(tmp_path / "a" / "field_00000.she1")
    assert values.shape == (2, hdr["nx"])
    assert run(tmp_path / "c", *args[:-1], "--seed", "8") == 0
    assert not filecmp.cmp(tmp_path / "a" / "fields.csv", tmp_path / "c" / "fields.csv", shallow=False)


def test_simulate_json_and_vv(tmp_path):
    assert run(tmp_path, "simulate", "--L", "3", "--T", "0.05", "--M", "3", "--vv", "0.5", "--format",
               "json") == 0
    d = json.loads((tmp_path / "fields.json").read_text())
    assert len(d["values"]) == 3 and len(d["x"]) == 121


def test_holder(tmp_path):
    assert run(tmp_path, "holder", "--t0", "0.1", "--direction", "space", "--L", "3", "--M", "20") == 0
    rep = json.loads((tmp_path / "holder.json").read_text())
    assert rep["direction"] == "space" and 0.2 < rep["exponent"] < 0.8 and rep["fit_residual"] >= 0
    assert run(tmp_path, "holder", "--t0", "0.1", "--direction", "time", "--L", "3", "--M", "20") == 0
    assert 0.0 < json.loads((tmp_path / "holder.json").read_text())["exponent"] < 0.6
    assert run(tmp_path, "holder", "--t0", "0") == 2


def test_validate_subset(tmp_path):
    assert run(tmp_path, "validate", "--only", "bc-identities") == 0
    report = (tmp_path / "report.txt").read_text().splitlines()
    assert len(report) == 2 and all("PASS" in line for line in report)
    assert len(table(tmp_path / "criteria.csv")) == 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "shemoments", "moments", "--out", str(tmp_path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "1.95236" in proc.stdout
