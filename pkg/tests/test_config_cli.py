import json
import math

import numpy as np
import pytest

from gpelattice.cli import main
from gpelattice.config import (ConfigError, config_from_dict, load_config,
                               parse_schedule, parse_time)
from gpelattice.pipeline import clear_ground_state_cache

TIME_UNIT = 24.32e-6


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


# small, fast system for CLI runs: stiff trap (~1/50), small box
SMALL = {
    "n_points": 1024,
    "box_length": 64.0,
    "trap_freq_hz": 0.02 / TIME_UNIT / (2 * math.pi),
}


def test_minimal_config_materializes_defaults(tmp_path):
    cfg = load_config(write_config(tmp_path / "c.json",
                                   {"depth_s": 2.5, "theta0_deg": 30.0}))
    assert cfg.depth_s == 2.5
    assert cfg.theta0_deg == 30.0
    assert cfg.n_points == 4096
    assert cfg.box_length == 256.0
    assert cfg.dt == 5e-3
    assert cfg.atom_mass_kg == pytest.approx(1.45e-25)
    grid = cfg.grid()
    assert grid.n_points == 4096


def test_invalid_values_name_the_keys(tmp_path):
    with pytest.raises(ConfigError) as err:
        load_config(write_config(tmp_path / "c.json",
                                 {"depth_s": -1.0, "beta": -2.0}))
    text = str(err.value)
    assert "depth_s" in text and "beta" in text


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError) as err:
        config_from_dict({"depth": 3.0, "lattice_nm": 532})
    assert "depth" in str(err.value) and "lattice_nm" in str(err.value)


def test_duplicate_keys_rejected(tmp_path):
    path = tmp_path / "dup.json"
    path.write_text('{"depth_s": 3.0, "depth_s": 3.5}')
    with pytest.raises(ConfigError, match="duplicate"):
        load_config(str(path))


def test_unparseable_config(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(ConfigError, match="JSON"):
        load_config(str(path))


def test_schedule_parsing():
    times = parse_schedule("0:130:5us", TIME_UNIT)
    assert len(times) == 27
    assert times[1] - times[0] == pytest.approx(5e-6 / TIME_UNIT)
    plain = parse_schedule("0:6:0.05", TIME_UNIT)
    assert len(plain) == 121
    assert plain[-1] == pytest.approx(6.0)
    assert parse_time("3ms", TIME_UNIT) == pytest.approx(3e-3 / TIME_UNIT)
    with pytest.raises(ConfigError):
        parse_schedule("5:1:1", TIME_UNIT)
    with pytest.raises(ConfigError):
        parse_schedule("0:10", TIME_UNIT)


def test_cli_requires_config(capsys):
    code = main(["evolve"])
    assert code == 2
    err = capsys.readouterr().err
    assert "requires --config" in err
    assert "usage" in err


def test_cli_rejects_bad_config(tmp_path, capsys):
    path = write_config(tmp_path / "c.json", {"depth_s": -4})
    code = main(["bands", "--config", path])
    assert code == 2
    assert "depth_s" in capsys.readouterr().err


def test_cli_bands(tmp_path, capsys):
    path = write_config(tmp_path / "c.json", {"depth_s": 3.21})
    out = tmp_path / "out"
    code = main(["bands", "--config", path, "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out
    assert "2 bound bands" in printed
    report = json.loads((out / "bands.json").read_text())
    assert report["bound_states"] == 2
    header = (out / "bands.csv").read_text().splitlines()[0]
    assert header.startswith("q,E0")
    assert (out / "manifest.json").exists()


def test_cli_classical(tmp_path, capsys):
    path = write_config(tmp_path / "c.json", {"depth_s": 3.21, "theta0_deg": 45.0})
    out = tmp_path / "out"
    code = main(["classical", "--config", path, "--out", str(out)])
    assert code == 0
    assert "classical period" in capsys.readouterr().out
    payload = json.loads((out / "classical.json").read_text())
    assert payload["period_closed_form"] == pytest.approx(payload["period_integrator"],
                                                          rel=1e-6)


def test_cli_calibrate_table(tmp_path, capsys):
    table = tmp_path / "table.csv"
    s = np.linspace(1.5, 6.0, 40)
    lines = ["s,period"] + [f"{float(v)!r},{10.0 / math.sqrt(float(v))!r}" for v in s]
    table.write_text("\n".join(lines) + "\n")
    period_us = 10.0 / math.sqrt(3.2) * TIME_UNIT * 1e6
    code = main(["calibrate", "--period-us", f"{period_us}", "--sigma", "0.5",
                 "--table", str(table)])
    assert code == 0
    printed = capsys.readouterr().out
    assert printed.startswith("s0 = 3.2")


def test_cli_calibrate_packaged_table(capsys):
    code = main(["calibrate", "--period-us", "106", "--sigma", "4"])
    assert code == 0
    printed = capsys.readouterr().out
    assert printed.startswith("s0 = ")
    s0 = float(printed.split()[2])
    sigma = float(printed.split()[4])
    assert s0 == pytest.approx(3.21, abs=0.10)
    assert 0.05 < sigma < 0.3


def test_cli_calibrate_out_of_range(capsys):
    code = main(["calibrate", "--period-us", "9999", "--sigma", "1"])
    assert code == 3
    assert "outside" in capsys.readouterr().err


def test_cli_evolve_and_rerun_reproducible(tmp_path, capsys):
    clear_ground_state_cache()
    cfg = dict(SMALL, depth_s=3.21, theta0_deg=45.0, snapshots="0:50:10us")
    path = write_config(tmp_path / "c.json", cfg)
    outs = []
    for label in ("a", "b"):
        out = tmp_path / label
        code = main(["evolve", "--config", path, "--out", str(out)])
        assert code == 0
        assert (out / "snapshot_000.csv").exists()
        assert (out / "snapshot_005.json").exists()
        assert (out / "final.field").exists()
        outs.append((out / "snapshot_005.csv").read_bytes())
    assert outs[0] == outs[1]
    assert "evolved 6 snapshots" in capsys.readouterr().out


def test_cli_scan_delay_small(tmp_path, capsys):
    clear_ground_state_cache()
    cfg = dict(SMALL, depth_s=3.21, scan_values=[40.0])
    path = write_config(tmp_path / "c.json", cfg)
    out = tmp_path / "out"
    code = main(["scan-delay", "--config", path, "--out", str(out)])
    assert code == 0
    lines = (out / "delay_vs_theta0.csv").read_text().splitlines()
    assert lines[0] == "theta0_deg,delay_us,sigma_us,status"
    assert lines[1].startswith("40.0,")
    assert "tunneling delay" in capsys.readouterr().out


def test_cli_mzi_small(tmp_path, capsys):
    clear_ground_state_cache()
    cfg = dict(SMALL, depth_s=3.21, theta0_deg=45.0)
    path = write_config(tmp_path / "c.json", cfg)
    out = tmp_path / "out"
    code = main(["mzi", "--config", path, "--out", str(out)])
    assert code == 0
    payload = json.loads((out / "mzi.json").read_text())
    assert 0.7 < payload["ratio"] <= 1.0
    assert "MZI ratio" in capsys.readouterr().out


def test_manifest_contents(tmp_path):
    path = write_config(tmp_path / "c.json", {"depth_s": 3.21})
    out = tmp_path / "out"
    main(["bands", "--config", path, "--out", str(out)])
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "bands"
    assert manifest["config"]["depth_s"] == 3.21
    assert manifest["config"]["n_points"] == 4096
    assert "version" in manifest and "threads" in manifest
