import csv
import io
import math

import numpy as np
import pytest

from otoc_qrt.cli import main, run
from otoc_qrt.config import PRESETS, ConfigError, Grid, RunConfig, parse_config


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


# ---------------------------------------------------------------- parsing


def test_parse_examples():
    cfg = parse_config("omega = 2.0  # Rabi\n\n# comment\nt1 = 0.8\n")
    assert cfg.emitter.omega == 2.0
    assert cfg.interferometer.t1 == 0.8
    assert cfg.interferometer.r1 == pytest.approx(0.6)
    cfg = parse_config("r2 = 0.6\nschedule = sp@0.3, sm@0\ndetector = A-minus-B\nnoise = off")
    assert cfg.interferometer.t2 == pytest.approx(0.8)
    assert cfg.schedule == (("sp", 0.3), ("sm", 0.0))
    assert (cfg.detector, cfg.noise) == ("A-minus-B", "off")


def test_parse_grids_and_defaults():
    cfg = parse_config("tau_min = 0\ntau_max = 1\ntau_step = 0.25\nT_max = 0.2", PRESETS["fig4"])
    np.testing.assert_allclose(cfg.tau_grid.values(), [0, 0.25, 0.5, 0.75, 1.0])
    np.testing.assert_allclose(cfg.T_grid.values(), [0, 0.1, 0.2])
    assert cfg.emitter.omega == 2.0  # inherited from the preset
    assert len(Grid(0, 4, 0.1).values()) == 41


@pytest.mark.parametrize(
    "text,line,fragment",
    [
        ("omega = 1\nnbar = -1", 2, "nbar"),
        ("omega = 1\n\nfoo = 3", 3, "unknown key"),
        ("gamma = abc", 1, "malformed"),
        ("omega 2", 1, "key = value"),
        ("t1 = 0.8\nr1 = 0.8", 2, "t1^2 + r1^2"),
        ("tau_step = 0", 1, "step"),
        ("precision = 40", 1, "precision"),
        ("schedule = sq@1", 1, "schedule"),
        ("detector = C", 1, "detector"),
        ("omega = inf", 1, "finite"),
    ],
)
def test_parse_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line
    assert fragment in str(info.value)
    assert str(info.value).startswith(f"line {line}:")


def test_presets():
    assert PRESETS["fig3"].emitter.omega == 2.0
    assert PRESETS["fig3-caption"].emitter.omega == 3.0
    assert PRESETS["fig5"].emitter.nbar == 1.0 and PRESETS["fig5"].emitter.omega == 0.0
    for name in ("fig4", "fig6"):
        assert len(PRESETS[name].tau_grid.values()) == 41
        assert len(PRESETS[name].T_grid.values()) == 41
    assert PRESETS["fig3"].interferometer.T == 1.0
    assert RunConfig().precision == 12


# ---------------------------------------------------------------- CLI


def test_steady_output(capsys):
    assert main(["steady", "--preset", "fig4"]) == 0
    rows = read_csv(capsys.readouterr().out)
    ee = next(r for r in rows if r["element"] == "ee")
    assert float(ee["re"]) == pytest.approx(4 / 9, abs=1e-11)


def test_config_file_and_byte_identical_output(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("omega = 2\nT = 1\ntau_max = 1.5\ntau_step = 0.25\n")
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}.csv"
        assert main(["g2-curve", "--config", str(conf), "--out", str(out), "--threads", str(1 + 2 * k)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert b"\r" not in outs[0]
    header = text.splitlines()[0].split(",")
    assert header[:5] == ["tau", "T", "g2_raw", "g2_no_noise", "g2_normalized"]
    rows = read_csv(text)
    assert len(rows) == 7
    assert all(r["omega"] == "2" and r["detector"] == "A" for r in rows)


def test_precision_flag(capsys):
    main(["steady", "--preset", "fig4", "--precision", "6"])
    ee = next(r for r in read_csv(capsys.readouterr().out) if r["element"] == "ee")
    assert ee["re"] == "0.444444"


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.conf"
    bad.write_text("omega = 1\nwhat = 2\n")
    assert main(["steady", "--config", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err
    assert main(["steady", "--config", str(tmp_path / "missing.conf")]) == 1
    assert main(["otoc"]) == 1  # no schedule configured
    assert main(["steady", "--threads", "0"]) == 1
    # a Hamiltonian without dissipation has no unique steady state
    zero = tmp_path / "zero.conf"
    zero.write_text("gamma = 1e-300\nomega = 1\n")
    assert main(["steady", "--config", str(zero)]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_otoc_and_oracle_compare_outputs():
    cfg = PRESETS["oracle"]
    row = read_csv(run("otoc", cfg))[0]
    assert row["schedule"] == "sp@0.24 sp@0 sm@0.24 sm@0"
    assert float(row["re"]) != float(row["no_noise_re"])
    table = read_csv(run("oracle-compare", cfg))
    assert [float(r["dt"]) for r in table] == [0.08, 0.04, 0.02]
    errs = [float(r["rel_error"]) for r in table]
    assert errs[0] > errs[1] > errs[2] and errs[2] < 0.05


@pytest.mark.slow
def test_g2_curve_fig5_shows_cusp():
    rows = read_csv(run("g2-curve", PRESETS["fig5"], threads=4))
    tau = np.array([float(r["tau"]) for r in rows])
    raw = np.array([float(r["g2_raw"]) for r in rows])
    assert tau[0] == 0 and tau[-1] == pytest.approx(8.0) and len(tau) == 401
    k = int(np.argmin(np.abs(tau - 1.0)))
    h = tau[1] - tau[0]
    left = (raw[k] - raw[k - 1]) / h
    right = (raw[k + 1] - raw[k]) / h
    # neighbouring one-sided slopes away from the cusp barely change
    smooth = abs((raw[k - 1] - raw[k - 2]) / h - left)
    assert abs(right - left) > 10 * smooth


def test_noise_diff_fig6_vanishes_for_tau_above_T(tmp_path):
    conf = tmp_path / "small.conf"
    conf.write_text("tau_max = 2\ntau_step = 0.25\nT_max = 2\nT_step = 0.5\n")
    out = tmp_path / "diff.csv"
    assert main(["noise-diff", "--preset", "fig6", "--config", str(conf), "--out", str(out)]) == 0
    rows = read_csv(out.read_text())
    assert len(rows) == 9 * 5
    above = [abs(float(r["noise_diff"])) for r in rows if float(r["tau"]) > float(r["T"])]
    below = [abs(float(r["noise_diff"])) for r in rows if float(r["tau"]) < float(r["T"])]
    assert max(above) < 1e-10
    assert max(below) > 1e-6


def test_g2_curve_t0_is_antibunched():
    cfg = parse_config("T = 0\ntau_max = 1\ntau_step = 0.5", PRESETS["fig3"])
    rows = read_csv(run("g2-curve", cfg))
    assert abs(float(rows[0]["g2_raw"])) < 1e-10
    assert float(rows[0]["g2_normalized"]) == pytest.approx(0, abs=1e-10)
    assert float(rows[2]["g2_raw"]) > 0


def test_map_and_difference_detector():
    cfg = parse_config("tau_max = 0.2\nT_max = 0.1\ndetector = A-minus-B\nnoise = on", PRESETS["fig6"])
    rows = read_csv(run("g2-map", cfg))
    assert [(r["T"], r["tau"]) for r in rows] == [
        ("0", "0"), ("0", "0.1"), ("0", "0.2"), ("0.1", "0"), ("0.1", "0.1"), ("0.1", "0.2")
    ]
    assert all(r["g2_normalized"] == "nan" for r in rows)
    assert all(math.isfinite(float(r["g2_raw"])) for r in rows)
