import json
import subprocess
import sys

import numpy as np
import pytest

from optomech_link.cli import EXIT_BOUND, EXIT_OK, EXIT_USAGE, main, run
from optomech_link.config import ConfigError, load_config, parse_config
from optomech_link.results import ResultTable, parse_csv, parse_json


def invoke(tmp_path, command, doc=None, *extra):
    argv = [command, "--out", str(tmp_path / "out.txt"), *extra]
    if doc is not None:
        path = tmp_path / "config.json"
        path.write_text(json.dumps(doc))
        argv += ["--config", str(path)]
    status = main(argv)
    out = tmp_path / "out.txt"
    return status, (out.read_text() if out.exists() else "")


def data_section(text):
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith("# "))


def table_of(text):
    return parse_csv(text)


# ---------------------------------------------------------------------------
# epr


def test_epr_r_sweep_shapes(tmp_path):
    status, text = invoke(tmp_path, "epr")
    assert status == EXIT_OK
    t = table_of(text)
    assert t.columns == ["r", "delta_epr_ideal", "delta_epr_full"]
    ideal, full = np.array(t.column("delta_epr_ideal")), np.array(t.column("delta_epr_full"))
    assert np.all(np.diff(ideal) < 0)
    k = int(np.argmin(full))
    assert 0 < k < len(full) - 1


def test_epr_zero_squeezing_row(tmp_path):
    status, text = invoke(tmp_path, "epr", {"environment": {"n_T": 3.0}})
    row = table_of(text).rows[0]
    assert row[0] == 0.0
    assert row[1] == pytest.approx(8.0, abs=1e-12)
    assert row[2] == pytest.approx(8.0, abs=1e-12)


def test_epr_temperature_sweep_affine(tmp_path):
    doc = {"epr": {"r": 1.0}, "sweep": {"name": "temperature_K", "min": 0.5, "max": 5.0, "points": 10}}
    status, text = invoke(tmp_path, "epr", doc)
    assert status == EXIT_OK
    t = table_of(text)
    assert len(t.rows) == 50
    for damping in set(t.column("gamma_over_omega_m")):
        rows = np.array([r[2:] for r in t.rows if r[0] == damping], dtype=float)
        n_T, full = rows[:, 0], rows[:, 3]
        slope = np.diff(full) / np.diff(n_T)
        assert np.all(slope > 0)
        np.testing.assert_allclose(slope, slope[0], rtol=1e-9)


def test_epr_invalid_axis(tmp_path, capsys):
    status, _ = invoke(tmp_path, "epr", {"sweep": {"name": "x_in", "min": 0, "max": 1, "points": 3}})
    assert status == EXIT_USAGE
    assert "sweep axis" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# teleport


def test_teleport_x_sweep_decreasing(tmp_path):
    status, text = invoke(tmp_path, "teleport")
    assert status == EXIT_OK
    t = table_of(text)
    assert set(t.column("classical_bound")) == {0.5}
    assert set(t.column("no_cloning_bound")) == {2.0 / 3.0}
    for damping in set(t.column("gamma_over_omega_m")):
        fid = [r[4] for r in t.rows if r[0] == damping]
        assert np.all(np.diff(fid) < 0)


def test_teleport_ideal_limit(tmp_path):
    doc = {
        "environment": {"n_T": 0.0},
        "teleport": {"eta": 1.0, "r": 20.0, "gamma_over_omega_m_values": [0.0]},
    }
    _, text = invoke(tmp_path, "teleport", doc)
    assert min(table_of(text).column("fidelity")) > 0.999


def test_teleport_temperature_curves_ordered(tmp_path):
    doc = {"sweep": {"name": "temperature_K", "min": 0.01, "max": 2.0, "points": 8}}
    status, text = invoke(tmp_path, "teleport", doc)
    assert status == EXIT_OK
    t = table_of(text)
    curves = {}
    for row in t.rows:
        curves.setdefault(row[0], []).append(row[4])
    dampings = sorted(curves)
    assert len(dampings) == 5
    for d in dampings:
        assert np.all(np.diff(curves[d]) < 0)
    for lo, hi in zip(dampings, dampings[1:]):
        assert np.all(np.array(curves[lo]) > np.array(curves[hi]))
    assert max(curves[dampings[0]]) > 2.0 / 3.0


def test_teleport_invalid_block(tmp_path):
    status, _ = invoke(tmp_path, "teleport", {"teleport": {"eta": 1.5}})
    assert status == EXIT_USAGE


# ---------------------------------------------------------------------------
# transfer and optimize


def test_transfer_tau_sweep(tmp_path):
    status, text = invoke(tmp_path, "transfer")
    assert status == EXIT_OK
    t = table_of(text)
    assert t.columns == ["tau_kappa", "W_TA_sq", "W_D_sq", "W_TM_sq"]
    assert t.rows[0] == [0.0, 0.0, 0.0, 0.0]
    w_tm = np.array(t.column("W_TM_sq"))
    assert np.all(np.diff(w_tm) >= -1e-12)
    assert w_tm[-1] > 0.9


def test_transfer_gamma_sweep(tmp_path):
    doc = {"sweep": {"name": "gamma_over_omega_m", "min": 1e-8, "max": 1e-4, "points": 9, "scale": "log"}}
    _, text = invoke(tmp_path, "transfer", doc)
    assert np.all(np.diff(table_of(text).column("W_TM_sq")) < 0)


def test_transfer_pulse_shape_table(tmp_path):
    doc = {"transfer": {"table": "pulse_shape"}, "sweep": {"name": "tau_kappa", "min": 0, "max": 1, "points": 11}}
    _, text = invoke(tmp_path, "transfer", doc)
    t = table_of(text)
    assert t.columns == ["t_kappa", "S", "R"]
    assert len(t.rows) == 11
    assert t.rows[0][1:] == [0.0, 1.0]
    assert t.rows[-1][0] == pytest.approx(4000.0)


def test_optimize_r_opt(tmp_path):
    status, text = invoke(tmp_path, "optimize")
    assert status == EXIT_OK
    t = table_of(text)
    r = np.array(t.column("r_opt"))
    gaps = -np.diff(r)
    expected = np.log([10.0, 2.5, 2.0, 2.0]) / 4
    np.testing.assert_allclose(gaps, expected, atol=0.03)
    assert not any(t.column("plateau"))


def test_optimize_lossless_plateau(tmp_path):
    doc = {"optimize": {"gamma_over_omega_m_values": [0.0, 1e-7]}}
    _, text = invoke(tmp_path, "optimize", doc)
    assert table_of(text).column("plateau") == [True, False]


@pytest.mark.slow
def test_optimize_pulse_params(tmp_path):
    _, text = invoke(tmp_path, "optimize", {"optimize": {"target": "pulse_params"}})
    t = table_of(text)
    assert len(t.rows) == 1
    assert t.column("mu_S")[0] == pytest.approx(0.05, abs=0.02)
    assert t.column("mu_R")[0] == pytest.approx(0.22, abs=0.02)
    assert t.column("converged") == [True]


# ---------------------------------------------------------------------------
# oracle


def test_oracle_zero_coupling_at_floor(tmp_path):
    doc = {"oracle": {"sidebands": ["red"], "coupling_over_kappa_values": [0.0]}}
    status, text = invoke(tmp_path, "oracle", doc)
    assert status == EXIT_OK
    row = table_of(text).rows[0]
    assert row[4] < 1e-9 and row[5] < 1e-9


def test_oracle_exit_code_on_bound(tmp_path, capsys):
    doc = {
        "oracle": {
            "sidebands": ["red"],
            "coupling_over_kappa_values": [0.05],
            "kappa_dt": 0.04,
            "extrapolate": False,
            "k_bound_factor": {"red": 0.1, "blue": 0.1},
        }
    }
    status, text = invoke(tmp_path, "oracle", doc)
    assert status == EXIT_BOUND
    assert table_of(text).column("within_bounds") == [False]
    assert "above bound" in capsys.readouterr().err


def test_oracle_coarser_steps_still_reported(tmp_path):
    base = {"sidebands": ["red"], "coupling_over_kappa_values": [0.05], "extrapolate": False}
    _, fine = invoke(tmp_path, "oracle", {"oracle": {**base, "kappa_dt": 0.01}})
    status, coarse = invoke(tmp_path, "oracle", {"oracle": {**base, "kappa_dt": 0.04}})
    assert status == EXIT_OK
    a, b = table_of(fine).rows[0], table_of(coarse).rows[0]
    assert b[3] < a[3]
    assert b[4] > a[4]


@pytest.mark.slow
def test_oracle_default_suite(tmp_path):
    status, text = invoke(tmp_path, "oracle")
    assert status == EXIT_OK
    assert all(table_of(text).column("within_bounds"))


# ---------------------------------------------------------------------------
# configuration and output


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        main(["launch"])
    assert info.value.code == EXIT_USAGE
    assert main(["epr", "--threads", "0"]) == EXIT_USAGE
    assert main(["epr", "--config", str(tmp_path / "missing.json")]) == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["epr", "--config", str(bad)]) == EXIT_USAGE


@pytest.mark.parametrize(
    "doc",
    [
        {"epr": {}, "teleport": {}},
        {"teleport": {}},
        {"device": {"kappa_over_omega_m": -0.1}},
        {"device": {"mass": 1.0}},
        {"environment": {"temperature_K": 1.0, "n_T": 2.0}},
        {"colour": "blue"},
        {"sweep": {"name": "r", "min": 2, "max": 1, "points": 3}},
        {"sweep": {"name": "r", "min": 0, "max": 1, "points": 3, "scale": "log"}},
    ],
)
def test_config_validation(doc):
    with pytest.raises(ConfigError):
        parse_config(doc, "epr")


def test_describe(capsys):
    assert main(["describe"]) == EXIT_OK
    schema = json.loads(capsys.readouterr().out)
    assert schema["protocols"] == ["epr", "teleport", "transfer", "optimize", "oracle"]
    assert schema["defaults"]["transfer"]["mu_S"] == 0.05
    assert "temperature_K" in schema["sweep_axes"]["epr"]


def test_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "optomech_link.cli", "describe"], capture_output=True, text=True, check=True
    )
    assert json.loads(proc.stdout)["protocols"][0] == "epr"


def test_deterministic_data_section(tmp_path):
    doc = {"sweep": {"name": "temperature_K", "min": 0.1, "max": 3.0, "points": 6}}
    _, first = invoke(tmp_path, "teleport", doc)
    _, second = invoke(tmp_path, "teleport", doc)
    _, threaded = invoke(tmp_path, "teleport", doc, "--threads", "4")
    assert data_section(first) == data_section(second) == data_section(threaded)


def test_hash_tracks_config(tmp_path):
    _, a = invoke(tmp_path, "epr", {"environment": {"n_T": 1.0}})
    _, b = invoke(tmp_path, "epr", {"environment": {"n_T": 1.0}})
    _, c = invoke(tmp_path, "epr", {"environment": {"n_T": 1.5}})
    ha, hb, hc = (table_of(x).meta["config_sha256"] for x in (a, b, c))
    assert ha == hb != hc
    assert table_of(a).meta["protocol"] == "epr"
    assert "timestamp" in table_of(a).meta and "version" in table_of(a).meta


def test_csv_json_round_trip(tmp_path):
    cfg = load_config(None, "transfer")
    table, _ = run(cfg)
    for text, parse in ((table.to_csv(), parse_csv), (table.to_json(), parse_json)):
        back = parse(text)
        assert back.columns == table.columns
        assert back.rows == table.rows
        assert back.meta == {k: str(v) for k, v in table.meta.items()}


def test_json_output_format(tmp_path):
    status, text = invoke(tmp_path, "epr", None, "--format", "json")
    doc = json.loads(text)
    assert set(doc) == {"meta", "columns", "rows"}
    assert doc["columns"][0] == "r"


def test_nan_rows_carry_reason():
    t = ResultTable(["x", "y"], [[1.0, float("nan")], [2.0, 3.0]]).with_reasons(["diverged", "unused"])
    assert t.columns == ["x", "y", "reason"]
    assert t.rows[0][2] == "diverged" and t.rows[1][2] == ""
    back = parse_json(t.to_json())
    assert np.isnan(back.rows[0][1])
    assert parse_csv(t.to_csv()).rows[1] == [2.0, 3.0, ""]


def test_table_must_be_rectangular():
    with pytest.raises(ValueError):
        ResultTable(["a", "b"], [[1.0]])
    with pytest.raises(ValueError):
        ResultTable(["a", "a"], [])
