import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from shemoments import io
from shemoments.measures import lebesgue
from shemoments.simulator import SimConfig, run_ensemble


@settings(max_examples=300, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(v):
    assert float(io.fmt(v)) == v


def test_fmt_special_values():
    assert io.fmt(math.inf) == "inf" and io.fmt(-math.inf) == "-inf" and io.fmt(math.nan) == "nan"
    assert io.fmt(3) == "3" and io.fmt(True) == "True" and io.fmt(None) == ""
    assert io.fmt(np.float64(0.1)) == "0.10000000000000001"


def test_csv_round_trip(tmp_path):
    rows = [[1, 0.1, "a"], [2, 1 / 3, "b"]]
    p = io.write_csv(tmp_path / "sub" / "t.csv", ["n", "v", "s"], rows)
    header, back = io.read_csv(p)
    assert header == ["n", "v", "s"]
    assert float(back[1][1]) == 1 / 3


def test_she1_round_trip(tmp_path):
    vals = np.random.default_rng(0).normal(size=(3, 5))
    p = io.write_she1(tmp_path / "f.she1", vals, 0.05, 0.000625, 1.0)
    raw = p.read_bytes()
    assert raw[:4] == b"SHE1" and len(raw) == 4 + 4 + 8 + 8 + 3 * 8 + 15 * 8
    back, hdr = io.read_she1(p)
    assert np.array_equal(back, vals)
    assert hdr == {"version": 1, "nx": 5, "nt": 3, "dx": 0.05, "dt": 0.000625, "nu": 1.0}
    with pytest.raises(ValueError):
        io.write_she1(tmp_path / "g.she1", vals[0], 0.05, 0.1, 1.0)
    (tmp_path / "bad.she1").write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(ValueError):
        io.read_she1(tmp_path / "bad.she1")


def test_field_csv(tmp_path):
    cfg = SimConfig(L=1.0, dx=0.25, T=0.0625, M=2)
    ens = run_ensemble(lebesgue(), 0.5, cfg, record_steps=[0, cfg.nt])
    p = io.write_field_csv(tmp_path / "fields.csv", ens)
    header, rows = io.read_csv(p)
    assert header == ["t", "x", "replicate", "value"]
    assert len(rows) == 2 * 2 * cfg.nx
    assert float(rows[-1][3]) == ens.values[1, 1, -1]


def test_json_and_manifest(tmp_path):
    p = io.write_json(tmp_path / "a.json", {"b": np.arange(2), "a": math.inf, "c": np.float64(0.5)})
    d = json.loads(p.read_text())
    assert d == {"a": "inf", "b": [0, 1], "c": 0.5}
    assert p.read_text().index('"a"') < p.read_text().index('"b"')
    m = io.write_manifest(tmp_path, "simulate", {"seed": 3}, seed=3, outputs=[tmp_path / "x.csv"])
    d = json.loads(m.read_text())
    assert d["command"] == "simulate" and d["seed"] == 3 and d["outputs"] == ["x.csv"]
    assert d["version"].startswith("0.1.0")
