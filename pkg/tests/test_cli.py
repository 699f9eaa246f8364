import json
import math

import numpy as np
import pytest

from lattice_gramian.cli import (EXIT_INDEX, EXIT_IO, EXIT_QUADRATURE, EXIT_SINGULAR, main,
                                 parse_extents, parse_nodes, parse_pairs, sweep_values)
from lattice_gramian.serialize import read_csv

IV = ["--p", "5", "--s", "1", "--t", "5"]


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_parsers():
    assert parse_nodes("0,0;1,-2") == [[0, 0], [1, -2]]
    assert parse_pairs("0,0:1,0;2,2:2,2") == [[[0, 0], [1, 0]], [[2, 2], [2, 2]]]
    assert parse_extents("21x21") == [21, 21]
    assert parse_extents("7") == [7]


def test_sweep_values():
    assert np.array_equal(sweep_values(3.0), [3.0])
    assert np.array_equal(sweep_values([1, 2]), [1.0, 2.0])
    np.testing.assert_allclose(sweep_values({"min": 1, "max": 100, "count": 3, "spacing": "log"}),
                               [1, 10, 100])
    assert np.array_equal(sweep_values({"min": 2, "max": 5, "count": 1}), [2.0])
    for bad in [{"min": 2, "max": 1, "count": 3}, {"min": 0, "max": 1, "count": 0},
                {"min": 0, "max": 1, "count": 3, "spacing": "log"},
                {"min": 0, "max": 1, "count": 3, "spacing": "cubic"}]:
        with pytest.raises(ValueError):
            sweep_values(bad)


def test_gramian_csv(tmp_path):
    out = tmp_path / "g.csv"
    assert run_cli("gramian", *IV, "--pairs", "0,0:0,0;1,1:2,0;-1,-1:-2,0", "--out", out) == 0
    cfg, header, rows = read_csv(out)
    assert header == ["i_1", "i_2", "j_1", "j_2", "value"]
    assert cfg["command"] == "gramian" and cfg["params"] == {"p": 5.0, "s": 1.0}
    assert rows[0][-1] == pytest.approx(0.11053177350861867, rel=1e-6)
    text = out.read_text().splitlines()
    assert text[2].split(",")[-1] == "0.11053177350861883"
    # sign-flipped pair gives byte-identical values
    assert text[3].split(",")[-1] == text[4].split(",")[-1]


def test_gramian_json_and_d1(tmp_path):
    out = tmp_path / "g.json"
    assert run_cli("gramian", "--d", 1, "--p", 3, "--s", 1, "--t", 2, "--drivers", "-2",
                   "--pairs", "1:-3", "--out", out) == 0
    payload = json.loads(out.read_text())
    assert payload["request"]["d"] == 1 and payload["entries"][0]["i"] == [1]
    assert payload["entries"][0]["value"] > 0


def test_deterministic_output(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"params": {"d": 2, "p": 5, "s": 1}, "t": 5,
                               "targets": [[0, 0], [1, 0], [1, 1]]}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run_cli("gramian", "--config", cfg, "--out", a, "--threads", 1) == 0
    assert run_cli("gramian", "--config", cfg, "--out", b, "--threads", 3) == 0
    ta, tb = a.read_text().splitlines(), b.read_text().splitlines()
    assert ta[1:] == tb[1:] and len(ta) == 2 + 6
    assert ta[0].startswith("# {") and '"targets":[[0,0],[1,0],[1,1]]' in ta[0]


def test_flags_override_config(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"params": {"p": 9, "s": 1}, "t": 1, "pairs": [[[0, 0], [0, 0]]]}))
    out = tmp_path / "o.csv"
    assert run_cli("gramian", "--config", cfg, "--p", 5, "--t", 5, "--out", out) == 0
    conf, _, rows = read_csv(out)
    assert conf["params"]["p"] == 5.0 and conf["t"] == 5.0
    assert rows[0][-1] == pytest.approx(0.11053177350861867, rel=1e-6)


def test_gramian_finite_methods_agree(tmp_path):
    a, b = tmp_path / "c.csv", tmp_path / "o.csv"
    common = ["gramian-finite", *IV, "--extents", "7x7", "--targets", "0,0;1,0;3,3"]
    assert run_cli(*common, "--out", a) == 0
    cfg = tmp_path / "ode.json"
    cfg.write_text(json.dumps({"method": "ode"}))
    assert run_cli(*common, "--config", cfg, "--out", b) == 0
    ra, rb = read_csv(a)[2], read_csv(b)[2]
    assert len(ra) == 6
    np.testing.assert_allclose(np.array(ra)[:, -1], np.array(rb)[:, -1], atol=1e-9)


def test_compare_column_and_self(tmp_path):
    cfg = tmp_path / "cmp.json"
    cfg.write_text(json.dumps({"pairs": {"mode": "column", "node": [0, 0]}}))
    out = tmp_path / "cmp.csv"
    assert run_cli("compare", *IV, "--extents", "11x11", "--config", cfg, "--out", out) == 0
    summary = json.loads((tmp_path / "cmp.summary.json").read_text())
    assert summary["pairs"] == 121
    assert summary["min_rel_pair"] == [[0, 0], [0, 0]]
    _, header, rows = read_csv(out)
    assert header[-2:] == ["log10_abs_error", "log10_rel_error"]
    cfg.write_text(json.dumps({"pairs": {"mode": "column"}, "self_compare": True}))
    assert run_cli("compare", *IV, "--extents", "11x11", "--config", cfg, "--out", out) == 0
    _, _, rows = read_csv(out)
    assert all(r[6] == 0.0 and r[7] == 0.0 for r in rows)
    assert all(r[8] == -math.inf for r in rows)


def test_energy_sweep(tmp_path):
    cfg = tmp_path / "sw.json"
    cfg.write_text(json.dumps({"t_sweep": {"min": 1, "max": 5, "count": 2},
                               "p_sweep": {"min": 4.5, "max": 8, "count": 3}}))
    out = tmp_path / "sw.csv"
    assert run_cli("energy-sweep", "--p", 5, "--s", 1, "--extents", "21x21",
                   "--targets", "0,0;1,0;1,1", "--config", cfg, "--out", out) == 0
    _, header, rows = read_csv(out)
    assert header[:5] == ["t", "p", "mu_min_finite", "mu_min_infinite", "abs_error"]
    assert len(rows) == 6
    rows = np.array(rows)
    assert np.all(rows[:, 4] <= 1e-2 * rows[:, 2])
    assert np.all(rows[:, 6] == 1)
    for t in (1.0, 5.0):
        mu = rows[rows[:, 0] == t][:, 2]
        assert np.all(np.diff(mu) < 0)


def test_energy_sweep_small_t_tends_to_zero(tmp_path):
    out = tmp_path / "sw.csv"
    cfg = tmp_path / "sw.json"
    cfg.write_text(json.dumps({"t_sweep": [1e-3], "p_sweep": [5.0]}))
    assert run_cli("energy-sweep", "--p", 5, "--s", 1, "--extents", "9x9",
                   "--targets", "0,0;1,0", "--config", cfg, "--out", out) == 0
    row = read_csv(out)[2][0]
    assert 0 < row[2] < 1e-5 and 0 < row[3] < 1e-5


def test_energy_sweep_flags_uncontrollable(tmp_path):
    out = tmp_path / "sw.csv"
    cfg = tmp_path / "sw.json"
    cfg.write_text(json.dumps({"t_sweep": [1.0], "p_sweep": [5.0]}))
    assert run_cli("energy-sweep", "--p", 5, "--s", 1, "--extents", "5x5",
                   "--targets", "1,0;-1,0", "--config", cfg, "--out", out) == 0
    row = read_csv(out)[2][0]
    assert row[6] == 0 and math.isnan(row[2])


def test_synthesize_finite(tmp_path):
    out = tmp_path / "syn.csv"
    assert run_cli("synthesize", *IV, "--extents", "21x21", "--targets", "0,0;1,0;1,1",
                   "--out", out) == 0
    report = json.loads((tmp_path / "syn.report.json").read_text())
    assert report["attainment_error"] < 1e-6
    assert report["relative_energy_gap"] < 1e-6
    _, header, rows = read_csv(out)
    assert header[:2] == ["t", "u_1"] and header[-1] == "y_3" and len(header) == 1 + 1 + 441 + 3
    assert rows[0][0] == 0.0 and rows[-1][0] == 5.0


def test_synthesize_free_evolution(tmp_path):
    cfg = tmp_path / "syn.json"
    cfg.write_text(json.dumps({"x0": {"nodes": [[0, 0]], "values": [0.0]}, "y_f": [0.0],
                               "steps": 200}))
    out = tmp_path / "syn.csv"
    assert run_cli("synthesize", *IV, "--extents", "5x5", "--targets", "1,0",
                   "--config", cfg, "--out", out) == 0
    report = json.loads((tmp_path / "syn.report.json").read_text())
    assert report["energy_predicted"] == 0.0 and report["energy_realized"] == 0.0


def test_trace_integrand(tmp_path):
    out = tmp_path / "tr.csv"
    assert run_cli("trace-integrand", "--p", 5, "--s", 1, "--out", out) == 0
    _, header, rows = read_csv(out)
    assert header == ["tau", "W_0_0_0_0", "W_1_0_1_0", "W_1_1_1_1", "W_2_0_2_0"]
    assert rows[0] == [0.0, 1.0, 0.0, 0.0, 0.0]
    vals = np.array(rows)
    assert np.all(vals[-1, 1:] < 1e-12)
    for k in range(2, 5):
        peak = np.argmax(vals[:, k])
        assert 0 < peak < len(rows) - 1
    _, _, cum = read_csv(tmp_path / "tr_cumulative.csv")
    cum = np.array(cum)
    assert np.all(np.diff(cum[:, 1:], axis=0) >= 0)
    assert cum[-1, 1] == pytest.approx(0.11053177860195958, rel=1e-8)


@pytest.mark.parametrize("argv,code", [
    (["gramian", *IV, "--pairs", "0,0:0,0", "--out", "/nonexistent/dir/x.csv"], EXIT_IO),
    (["gramian", "--config", "/nonexistent/cfg.json"], EXIT_IO),
    (["gramian", "--t", "5", "--pairs", "0,0:0,0"], EXIT_IO),
    (["compare", *IV, "--extents", "5x5", "--pairs", "3,0:0,0"], EXIT_INDEX),
    (["gramian-finite", *IV, "--extents", "5x5", "--targets", "0,9"], EXIT_INDEX),
    (["synthesize", *IV, "--extents", "5x5", "--targets", "1,0;-1,0"], EXIT_SINGULAR),
    (["gramian", *IV, "--pairs", "0,0:0,0", "--tol-rel", "1e-20", "--tol-abs", "1e-300"],
     EXIT_QUADRATURE),
])
def test_exit_codes(tmp_path, argv, code, capsys):
    if "--out" not in argv:
        argv = argv + ["--out", str(tmp_path / "x.csv")]
    assert run_cli(*argv) == code
    assert "error:" in capsys.readouterr().err
