import json

import numpy as np
import pytest

from bohmarrival.app import (
    PRESETS,
    ConfigError,
    config_hash,
    dump_config,
    load_config,
    parse_config,
    preset,
    run,
)
from bohmarrival.app.cli import main
from bohmarrival.app.io import BOUNDARY_COLUMNS, EMPIRICAL_COLUMNS, read_csv, write_csv

SMALL = """
[scenario]
name = custom

[grid]
x_min = -30
x_max = 30
n_points = 1201

[time]
t_end = 4
dt = 0.01

[potential]
kind = barrier
a = 0
b = 0.5
height = 0.8

[detector]
a = 1
b = 2

[packet.0]
k0 = 1.2
x0 = -5
d = 1

[oracle]
samples = 300
seed = 5
stride = 5
n_eval = 20
export_trajectories = 10
"""


@pytest.fixture()
def small_cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def test_presets_validate():
    for tag in PRESETS:
        cfg = preset(tag)
        assert cfg.n_steps % cfg.stride == 0
        assert cfg.n_steps * cfg.time_step >= cfg.t_end
    assert preset("free").scenario == "free_six_gaussians"
    with pytest.raises(ConfigError):
        preset("harmonic")


def test_barrier_preset_starts_outside_detector():
    from bohmarrival.domain import build_grid, superpose
    from bohmarrival.observables import interval_probability

    cfg = preset("barrier")
    f = superpose(cfg.packets, build_grid(cfg.x_min, cfg.x_max, cfg.n_points))
    assert interval_probability(f, cfg.detector.a, cfg.detector.b) < 1e-6


def test_config_round_trip():
    for tag in PRESETS:
        cfg = preset(tag)
        again = parse_config(dump_config(cfg))
        assert again == cfg
        assert config_hash(again) == config_hash(cfg)


def test_config_overrides_preset():
    cfg = parse_config("[scenario]\npreset = step\n[oracle]\nsamples = 17\n")
    assert cfg.scenario == "step" and cfg.samples == 17
    assert cfg.potential == preset("step").potential


@pytest.mark.parametrize(
    "text",
    [
        "[grid]\nx_min = 1\n",
        "[scenario]\npreset = step\n[grid]\nx_min = 100\n",
        "[scenario]\npreset = step\n[potential]\nkind = harmonic\n",
        "[scenario]\npreset = step\n[packet.0]\nk0 = 1\nx0 = 0\nweight = 0.5\n",
        "[scenario]\npreset = step\n[grid]\nn_points = many\n",
        "not an ini file",
    ],
)
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.ini")


def test_csv_round_trip(tmp_path):
    data = [np.array([0.0, 0.1, 1 / 3]), np.array([1e-300, -2.5, np.pi])]
    path = write_csv(tmp_path / "x.csv", ("t", "y"), data, {"config_sha256": "abc"})
    meta, cols = read_csv(path)
    assert meta == {"config_sha256": "abc"}
    assert np.array_equal(cols["t"], data[0]) and np.array_equal(cols["y"], data[1])


def test_run_writes_everything_and_is_bit_stable(small_cfg, tmp_path):
    cfg = load_config(small_cfg)
    first = run(cfg, tmp_path / "a")
    second = run(cfg, tmp_path / "b")
    for name in ("boundary.csv", "arrival.csv", "empirical.csv", "trajectories.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    s = json.loads((tmp_path / "a" / "summary.json").read_text())
    for key in ("N", "P0", "mean_arrival_time", "variance_arrival_time", "tail_converged",
                "ensemble", "config", "config_sha256", "norm_drift"):
        assert key in s
    assert s["ensemble"]["seed"] == 5
    assert first.violations == []
    assert first.oracle_passed
    meta, cols = read_csv(tmp_path / "a" / "arrival.csv")
    assert meta["config_sha256"] == config_hash(cfg)
    assert np.all(np.diff(cols["P"]) >= 0)
    _, traj = read_csv(tmp_path / "a" / "trajectories.csv")
    assert np.unique(traj["trajectory_id"]).size == 10
    assert second.summary == first.summary


def test_cli_run_and_subcommands(small_cfg, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", str(small_cfg), "--out", str(out), "--samples", "200", "--seed", "3"]) == 0
    assert "oracle: 20/20" in capsys.readouterr().out
    assert main(["arrival", str(out / "boundary.csv"), "--out", str(tmp_path / "re")]) == 0
    assert (tmp_path / "re" / "arrival.csv").read_bytes() == (out / "arrival.csv").read_bytes()
    assert main(["compare", str(out / "arrival.csv"), str(out / "empirical.csv")]) == 0
    assert main(["trajectories", str(small_cfg), "--out", str(tmp_path / "tr"), "--samples", "50"]) == 0
    assert (tmp_path / "tr" / "empirical.csv").exists()


def test_cli_no_oracle(small_cfg, tmp_path):
    out = tmp_path / "n"
    assert main(["run", str(small_cfg), "--out", str(out), "--no-oracle", "--stride", "10"]) == 0
    assert not (out / "empirical.csv").exists()
    assert "comparison" not in json.loads((out / "summary.json").read_text())


def test_cli_config_errors(tmp_path, capsys):
    assert main(["run", "no-such-preset"]) == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[grid]\nx_min = 3\n")
    assert main(["run", str(bad)]) == 1
    missing = tmp_path / "m.csv"
    missing.write_text("t,j_a\n0,0\n")
    assert main(["arrival", str(missing)]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_invariant_violation(tmp_path):
    t = np.linspace(0.0, 1.0, 11)
    path = write_csv(tmp_path / "b.csv", BOUNDARY_COLUMNS, [t, 2.0 * np.ones(11), np.zeros(11)],
                     {"detector_a": "0.0", "detector_b": "1.0", "P0": "0.0"})
    assert main(["arrival", str(path)]) == 2


def test_cli_oracle_mismatch(small_cfg, tmp_path):
    out = tmp_path / "run"
    assert main(["run", str(small_cfg), "--out", str(out), "--samples", "100"]) == 0
    meta, cols = read_csv(out / "empirical.csv")
    shifted = np.clip(cols["P_hat"] + 0.3, 0.0, 1.0)
    write_csv(out / "bad.csv", EMPIRICAL_COLUMNS,
              [cols["t"], shifted, cols["stderr"], cols["samples"]], meta)
    assert main(["compare", str(out / "arrival.csv"), str(out / "bad.csv")]) == 3
