import copy
import json

import numpy as np
import pytest
from click.testing import CliRunner

from adiabaton.cli_io import (bundled_configs, compare_dirs, load_config, main, parse_config, read_config_text,
                              read_slice_csv, svg_line_plot, write_slice_csv)
from adiabaton.errors import ConfigInvalid, GridTooCoarse

SMALL = {
    "schema_version": 1,
    "name": "small",
    "scheme": {"kind": "lambda", "alpha": 10.0},
    "boundary": {
        "omega0": {"shape": "gaussian", "amplitude": 1.0, "center": 12.0, "width": 4.0},
        "omega1": {"shape": "constant", "amplitude": 1.5},
    },
    "grid": {"tau_min": 0.0, "tau_max": 40.0, "d_tau": 0.05, "z_max": 2.0, "d_z": 0.05,
             "snapshot_stride_z": 20},
    "diagnostics": {"enabled": True, "shape": {"combination": "omega0", "v_g": 2.25, "z_ref": 1.0,
                                               "z_probe": 2.0}},
    "plots": {"z": [0.0, 2.0]},
}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "small.json"
    p.write_text(json.dumps(SMALL))
    return p


def test_bundled_configs_parse():
    names = bundled_configs()
    assert {"lambda_fig2", "mtype_fig4", "dt_fig6"} <= set(names)
    for n in names:
        cfg = load_config(n)
        assert cfg.grid.d_tau > 0
        assert json.loads(read_config_text(n))["name"] == n


@pytest.mark.parametrize("mutate", [
    lambda c: c.update(schema_version=2),
    lambda c: c["scheme"].update(kind="vee"),
    lambda c: c["scheme"].update(delta1=0.1),
    lambda c: c["boundary"].pop("omega1"),
    lambda c: c["boundary"]["omega0"].update(width=-1.0),
    lambda c: c["grid"].update(d_tau=0.07),
    lambda c: c["plots"].update(z=[0.5]),
    lambda c: c.update(extra=1),
    lambda c: c["scheme"].update(gamma=0.0),
])
def test_invalid_configs(mutate):
    raw = copy.deepcopy(SMALL)
    mutate(raw)
    with pytest.raises(ConfigInvalid):
        parse_config(raw)


def test_missing_config():
    with pytest.raises(ConfigInvalid):
        read_config_text("no_such_config")


def test_csv_round_trip(tmp_path):
    tau = np.linspace(0, 1, 5)
    vals = np.exp(1j * np.outer(tau, [1.0, np.pi]))
    write_slice_csv(tmp_path / "a.csv", tau, vals, ["omega0", "omega1"])
    t, v, ids = read_slice_csv(tmp_path / "a.csv")
    assert ids == ["omega0", "omega1"]
    assert np.array_equal(t, tau) and np.array_equal(v, vals)


def test_svg_plot_is_wellformed():
    import xml.etree.ElementTree as ET

    x = np.linspace(0, 1, 20)
    svg = svg_line_plot([("a", x, x ** 2), ("b", x, np.sqrt(x))], "t", "x", "y")
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")


def test_simulate_oracle_diff(tmp_path, cfg_path):
    runner = CliRunner()
    run_dir, orc_dir = tmp_path / "run", tmp_path / "orc"
    res = runner.invoke(main, ["simulate", "--config", str(cfg_path), "--out", str(run_dir), "--emit-plots"])
    assert res.exit_code == 0, res.output
    meta = json.loads((run_dir / "metadata.json").read_text())
    assert meta["config"]["name"] == "small"
    assert sorted(meta["z"]) == [0.0, 1.0, 2.0]
    assert (run_dir / "diagnostics.json").exists() and any((run_dir / "plots").iterdir())
    fields = np.load(run_dir / "fields.npy")
    assert fields.shape == (3, 801, 2)

    res = runner.invoke(main, ["oracle", "--config", str(cfg_path), "--which", "lambda_analytic",
                               "--out", str(orc_dir)])
    assert res.exit_code == 0, res.output
    rows = compare_dirs(run_dir, orc_dir)
    assert rows[0]["max"] < 1e-12

    res = runner.invoke(main, ["diff", str(run_dir), str(orc_dir), "--tol", "0.5"])
    assert res.exit_code == 0 and res.output.startswith("z,omega0,omega1,max,status")
    res = runner.invoke(main, ["diff", str(run_dir), str(orc_dir), "--tol", "1e-9"])
    assert res.exit_code == 1


def test_simulate_is_deterministic(tmp_path, cfg_path):
    runner = CliRunner()
    for name in ("a", "b"):
        assert runner.invoke(main, ["simulate", "--config", str(cfg_path), "--out", str(tmp_path / name)]
                             ).exit_code == 0
    ma = json.loads((tmp_path / "a" / "metadata.json").read_text())["checksums"]
    mb = json.loads((tmp_path / "b" / "metadata.json").read_text())["checksums"]
    assert ma == mb


def test_bad_config_exit_code(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    res = CliRunner().invoke(main, ["simulate", "--config", str(bad), "--out", str(tmp_path / "o")])
    assert res.exit_code == 2
    err = json.loads((tmp_path / "o" / "error.json").read_text())
    assert err["error"] == "ConfigInvalid"


def test_runtime_error_exit_code(tmp_path):
    raw = copy.deepcopy(SMALL)
    raw["boundary"]["omega0"] = {"shape": "constant", "amplitude": 1e200}
    raw["boundary"]["omega1"] = {"shape": "constant", "amplitude": 1e200}
    p = tmp_path / "blow.json"
    p.write_text(json.dumps(raw))
    with np.errstate(all="ignore"), pytest.warns(GridTooCoarse):
        res = CliRunner().invoke(main, ["simulate", "--config", str(p), "--out", str(tmp_path / "o")])
    assert res.exit_code == 3
    assert json.loads((tmp_path / "o" / "error.json").read_text())["error"] == "NonFiniteDetected"


def test_mode_and_velocity_oracles(tmp_path):
    runner = CliRunner()
    res = runner.invoke(main, ["oracle", "--config", "dt_fig6", "--which", "dt_modes", "--out", str(tmp_path / "m")])
    assert res.exit_code == 0 and "slow: v_g = 1" in res.output and "fast: v_g = 4" in res.output
    res = runner.invoke(main, ["oracle", "--config", "mtype_fig4", "--which", "m_velocity",
                               "--out", str(tmp_path / "v")])
    assert res.exit_code == 0
    rows = json.loads((tmp_path / "v" / "m_velocity.json").read_text())["group_velocity"]
    assert [r["factor"] for r in rows] == pytest.approx([1.0, 1.44, 2.25])
    res = runner.invoke(main, ["oracle", "--config", "dt_fig6", "--which", "lambda_analytic",
                               "--out", str(tmp_path / "x")])
    assert res.exit_code == 2


def test_ratio_against_depth_output(tmp_path):
    raw = copy.deepcopy(SMALL)
    raw["plots"]["ratio_tau"] = 12.0
    p = tmp_path / "r.json"
    p.write_text(json.dumps(raw))
    res = CliRunner().invoke(main, ["simulate", "--config", str(p), "--out", str(tmp_path / "o"), "--emit-plots"])
    assert res.exit_code == 0, res.output
    data = np.loadtxt(tmp_path / "o" / "ratio_vs_z.csv", delimiter=",", skiprows=1)
    assert data.shape == (3, 3)
    assert data[0, 1] == pytest.approx(1.0 / 1.5)
    assert (tmp_path / "o" / "plots" / "ratio_vs_z.svg").exists()
