import json
import math
import subprocess
import sys

import numpy as np
import pytest

from blo_homodyne.analyzer import read_spectrum_csv
from blo_homodyne.cli import main
from blo_homodyne.config import load_config
from blo_homodyne.detection import BloConfig, blo_variance
from blo_homodyne.errors import ConfigError
from blo_homodyne.squeezing import LorentzianOpo
from blo_homodyne.synth import read_trace_bin

SMALL = """
[synth]
n_samples = 524288
[zero_span]
n_samples = 1048576
vbw_hz = 3e3
n_points = 201
[signal]
sweep_time_s =
vbw_hz = 30e3
"""


@pytest.fixture
def small_cfg(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return path


def _run(*argv):
    return main([str(a) for a in argv])


def _report(out, name):
    return json.loads((out / f"{name}_report.json").read_text())


def test_defaults_load():
    cfg = load_config()
    assert cfg.fit.r == pytest.approx(1.3567, abs=1e-3)
    assert cfg.blo.omega0_offset == 5e6 and cfg.blo.is_dual
    assert cfg.chain.visibility == 0.98
    assert cfg.annotations["pump_power_w"] == "0.04"


@pytest.mark.parametrize("text", ["[bogus]\nx = 1\n", "[chain]\nefficiency = 0.9\n",
                                  "[chain]\neta = lots\n", "not an ini file"])
def test_bad_config_exit_2(tmp_path, text, capsys):
    path = tmp_path / "bad.ini"
    path.write_text(text)
    assert _run("spectrum", "--analytic", "--config", path, "--out-dir", tmp_path) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_config_exit_2(tmp_path):
    assert _run("spectrum", "--analytic", "--config", tmp_path / "none.ini") == 2


def test_invalid_values_rejected():
    with pytest.raises(ConfigError):
        load_config(overrides={"chain.visibility": "1.5", "model.source": "direct"})
    with pytest.raises(ConfigError):
        load_config(overrides={"blo.mode": "both"})
    with pytest.raises(ConfigError):
        load_config(overrides={"nope.key": "1"})


def test_fit_command(tmp_path, capsys):
    assert _run("fit", "-4.1", "10.1", "--out-dir", tmp_path) == 0
    assert "eta_eff" in capsys.readouterr().out
    h = _report(tmp_path, "fit")["headline"]
    # dB inputs are rounded, so the linear pair differs slightly from (0.39, 10.2)
    assert h["r"] == pytest.approx(1.357, abs=2e-3)
    assert h["eta_eff"] == pytest.approx(0.653, abs=2e-3)


def test_fit_lossless_symmetric(tmp_path):
    assert _run("fit", "-3.01", "3.01", "--out-dir", tmp_path) == 0
    h = _report(tmp_path, "fit")["headline"]
    assert h["eta_eff"] == pytest.approx(1.0, abs=2e-3)
    assert h["r"] == pytest.approx(math.log(2) / 2, abs=1e-3)


@pytest.mark.parametrize("pair", [("1", "3"), ("--", "-1", "-3"), ("-10", "0.5")])
def test_fit_infeasible_exit_3(pair, capsys):
    assert _run("fit", *pair) == 3
    assert "infeasible" in capsys.readouterr().err


def test_infeasible_config_exit_3(tmp_path):
    assert _run("spectrum", "--analytic", "--out-dir", tmp_path, "--config",
                _write(tmp_path, "[chain]\nvisibility = 0.5\n")) == 3


def test_io_error_exit_4(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert _run("fit", "-4.1", "10.1", "--out-dir", blocker / "sub") == 4


def _write(tmp_path, text, name="extra.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_spectrum_analytic(tmp_path):
    assert _run("spectrum", "--analytic", "--out-dir", tmp_path) == 0
    rep = _report(tmp_path, "spectrum")
    assert rep["headline"]["squeezing_db"] == pytest.approx(-4.09, abs=0.005)
    assert all(c["passed"] for c in rep["checks"])
    for name in ("theta0", "theta90", "snl"):
        settings, f, p = read_spectrum_csv(tmp_path / f"spectrum_{name}.csv")
        assert f.min() >= 1.5e6 and f.max() <= 8.5e6
        assert settings["reference"] == "analytic"


def test_spectrum_vacuum_config(tmp_path):
    cfg = _write(tmp_path, "[model]\nsource = direct\nr = 0\n[chain]\neta = 0.9\n")
    assert _run("spectrum", "--analytic", "--config", cfg, "--out-dir", tmp_path) == 0
    for name in ("theta0", "theta90"):
        _, _, p = read_spectrum_csv(tmp_path / f"spectrum_{name}.csv")
        np.testing.assert_allclose(p, 0.0, atol=1e-12)


def test_spectrum_lorentzian_edges(tmp_path):
    cfg = _write(tmp_path, "[model]\nkind = lorentzian\ngamma_hz = 35e6\n")
    assert _run("spectrum", "--analytic", "--config", cfg, "--out-dir", tmp_path) == 0
    _, f, p = read_spectrum_csv(tmp_path / "spectrum_theta90.csv")
    loaded = load_config([cfg])
    model = loaded.model
    assert isinstance(model, LorentzianOpo)
    oracle = [10 * math.log10(blo_variance(model, loaded.chain,
                                           BloConfig(5e6, theta=math.pi / 2), w)
                              / (1 + loaded.chain.dark_noise_rel_snl)) for w in (1.5e6, 8.5e6)]
    assert abs(oracle[1] - oracle[0]) < 0.3
    assert abs(p[-1] - p[0]) < 0.3
    assert p[0] == pytest.approx(np.interp(f[0], [1.5e6, 8.5e6], oracle), abs=0.05)


def test_spectrum_statistical_matches_analytic(tmp_path, small_cfg):
    a, s = tmp_path / "a", tmp_path / "s"
    assert _run("spectrum", "--analytic", "--config", small_cfg, "--out-dir", a) == 0
    assert _run("spectrum", "--config", small_cfg, "--out-dir", s) == 0
    ha, hs = _report(a, "spectrum")["headline"], _report(s, "spectrum")["headline"]
    for key in ("squeezing_db", "antisqueezing_db", "snl_db"):
        assert hs[key] == pytest.approx(ha[key], abs=0.3)


def test_rerun_byte_identical(tmp_path, small_cfg):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert _run("spectrum", "--config", small_cfg, "--seed", "42", "--out-dir", out) == 0
    for name in ("theta0", "theta90", "snl"):
        assert (a / f"spectrum_{name}.csv").read_bytes() == \
            (b / f"spectrum_{name}.csv").read_bytes()
    c = tmp_path / "c"
    assert _run("spectrum", "--config", small_cfg, "--seed", "43", "--out-dir", c) == 0
    assert (a / "spectrum_theta90.csv").read_bytes() != (c / "spectrum_theta90.csv").read_bytes()


def test_zero_span_analytic(tmp_path):
    assert _run("zero-span", "--analytic", "--out-dir", tmp_path) == 0
    h = _report(tmp_path, "zero_span")["headline"]
    assert h["dual_min_db"] == pytest.approx(-4.09, abs=0.01)
    assert h["dual_max_db"] == pytest.approx(10.09, abs=0.01)
    assert h["upper_mean_db"] == pytest.approx(h["lower_mean_db"])
    assert h["upper_phase_flatness_db"] == 0.0


def test_zero_span_small_run(tmp_path, small_cfg):
    assert _run("zero-span", "--config", small_cfg, "--out-dir", tmp_path) == 0
    rep = _report(tmp_path, "zero_span")
    assert {"dual_min_db", "upper_mean_db", "lower_mean_db"} <= set(rep["headline"])
    settings, t, p = read_spectrum_csv(tmp_path / "zero_span_upper.csv")
    assert settings["mode"] == "zero_span" and settings["center_hz"] == "5000000.0"
    assert np.mean(p) == pytest.approx(7.24, abs=0.5)


def test_signal_analytic(tmp_path):
    assert _run("signal", "--analytic", "--out-dir", tmp_path) == 0
    rep = _report(tmp_path, "signal")
    h = rep["headline"]
    assert h["peak_frequencies_hz"] == pytest.approx([5e6], abs=30e3)
    assert h["beatnote_hz"] == pytest.approx(10e6, abs=30e3)
    assert h["snr_gain_db"][0] == pytest.approx(4.09, abs=0.05)
    assert all(c["passed"] for c in rep["checks"])


def test_signal_modulated(tmp_path, small_cfg):
    extra = _write(tmp_path, "[signal]\nf_mod_hz = 1e6\n")
    assert _run("signal", "--config", small_cfg, "--config", extra, "--out-dir", tmp_path) == 0
    h = _report(tmp_path, "signal")["headline"]
    assert h["expected_peaks_hz"] == [4e6, 6e6]
    assert h["peak_frequencies_hz"] == pytest.approx([4e6, 6e6], abs=30e3)


def test_signal_out_of_band_exit_3(tmp_path):
    extra = _write(tmp_path, "[signal]\nf_mod_hz = 6e6\n")
    assert _run("signal", "--analytic", "--config", extra, "--out-dir", tmp_path) == 3


def test_synth_export(tmp_path):
    cfg = _write(tmp_path, "[synth]\nn_samples = 16384\n")
    assert _run("synth", "--config", cfg, "--format", "both", "--seed", "7",
                "--out-dir", tmp_path) == 0
    tr = read_trace_bin(tmp_path / "trace.bin")
    assert len(tr) == 16384 and tr.seed == 7 and tr.sample_rate == 40e6
    rows = (tmp_path / "trace.csv").read_text().splitlines()
    assert len(rows) == 16385
    assert float(rows[1].split(",")[1]) == tr.samples[0]


def test_synth_nyquist_exit_3(tmp_path):
    cfg = _write(tmp_path, "[synth]\nsample_rate_hz = 8e6\nn_samples = 16384\n")
    assert _run("synth", "--config", cfg, "--out-dir", tmp_path) == 3


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "blo_homodyne", "fit", "-4.1", "10.1"],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0 and "eta_eff" in res.stdout


def test_svg_output(tmp_path):
    pytest.importorskip("matplotlib")
    assert _run("spectrum", "--analytic", "--svg", "--out-dir", tmp_path) == 0
    assert (tmp_path / "spectrum.svg").read_text().lstrip().startswith("<?xml")
