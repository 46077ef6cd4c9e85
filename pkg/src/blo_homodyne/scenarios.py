"""Figure-reproduction scenarios behind the CLI subcommands.

Each command writes CSV artifacts plus ``<scenario>_report.json`` into the
output directory and returns a :class:`RunReport`. Pass/fail ranges come from
the ``[expect]`` section of the configuration. With ``analytic=True`` the
closed-form curves replace synthesized records; the file layout is the same.

Run seeds are offsets from the configured seed so that every record,
including the SNL calibration run, has its own stream.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import analyzer
from .analyzer import SnlReference, Spectrum, SweepMode
from .config import ScenarioConfig
from .detection import (
    BloConfig,
    beatnote_frequency,
    beatnote_power,
    blo_variance,
    heterodyne_variance,
    signal_peak_frequencies,
)
from .errors import InfeasibleFitError
from .squeezing import Flat, fit_loss_and_r
from .synth import (
    SignalTone,
    squeezed_floor,
    synthesize,
    synthesize_phase_ramp,
    tone_powers,
    write_trace_bin,
    write_trace_csv,
)

VACUUM = Flat(0.0)

# seed offsets per record
_SEED_SPECTRUM = {"theta0": 0, "theta90": 1, "snl": 2}
_SEED_ZERO_SPAN = {"dual": 10, "upper": 11, "lower": 12, "snl": 19}
_SEED_SIGNAL = {"squeezed": 20, "antisqueezed": 21, "vacuum": 22, "snl": 23}


def _seed(base: int, offset: int) -> int:
    return (base + offset) % 2**64


def db(x: float) -> float:
    return 10 * math.log10(x)


@dataclass
class Check:
    name: str
    value: float
    expected: float
    tolerance: float
    passed: bool
    kind: str = "within"

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        if self.kind == "below":
            return f"[{tag}] {self.name}: {self.value:.3f} (must be < {self.expected:.3f})"
        return (f"[{tag}] {self.name}: {self.value:.3f} "
                f"(expected {self.expected:.3f} +/- {self.tolerance:.3f})")


def within(name, value, expected, tol) -> Check:
    return Check(name, value, expected, tol, abs(value - expected) <= tol)


def below(name, value, limit) -> Check:
    return Check(name, value, limit, 0.0, value < limit, "below")


@dataclass
class RunReport:
    scenario: str
    headline: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    artifacts: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def render(self) -> str:
        lines = [f"scenario: {self.scenario}"]
        for k, v in self.headline.items():
            lines.append(f"  {k}: {_fmt(v)}")
        lines += ["  " + c.line() for c in self.checks]
        lines += [f"  wrote {a}" for a in self.artifacts]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "headline": self.headline,
            "checks": [c.__dict__ for c in self.checks],
            "artifacts": self.artifacts,
        }

    def write(self, out_dir: Path) -> Path:
        path = Path(out_dir) / f"{self.scenario}_report.json"
        self.artifacts.append(str(path))
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n")
        return path


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def _out_dir(cfg: ScenarioConfig) -> Path:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    return cfg.out_dir


def _emit(report: RunReport, out: Path, name: str, spec: Spectrum, extra=None):
    path = out / name
    spec.to_csv(path, extra)
    report.artifacts.append(str(path))


def _common_settings(cfg: ScenarioConfig, seed=None) -> dict:
    out = {"model": repr(cfg.model), "chain": repr(cfg.chain)}
    if seed is not None:
        out["seed"] = seed
    return out


def _snl_rel(cfg: ScenarioConfig, linear_rel_pure_snl):
    """Express powers relative to the calibrated SNL, which includes dark noise."""
    return np.asarray(linear_rel_pure_snl) / (1.0 + cfg.chain.dark_noise_rel_snl)


def _analytic_grid(rbw, fs, n, f_lo, f_hi):
    nper = analyzer.rbw_segment_length(rbw, fs, n)
    f = np.fft.rfftfreq(nper, 1.0 / fs)
    return f[(f >= f_lo) & (f <= f_hi) & (f > 0)]


def _calibrate(cfg: ScenarioConfig, blo: BloConfig, fs: float, n: int, seed: int):
    """SNL from a dedicated vacuum-input run with the LO beatnote suppressed."""
    quiet_blo = replace(blo, balance_epsilon=0.0)
    trace = synthesize(VACUUM, cfg.chain, quiet_blo, None, n / fs, fs, seed)
    return SnlReference.from_trace(trace), trace


def cmd_spectrum(cfg: ScenarioConfig, analytic: bool = False) -> RunReport:
    """Squeezed and antisqueezed noise spectra over the analysis band."""
    s, syn, exp = cfg.section("spectrum"), cfg.section("synth"), cfg.expect
    out = _out_dir(cfg)
    fs, n = syn["sample_rate_hz"], syn["n_samples"]
    band = (s["f_lo_hz"], s["f_hi_hz"])
    blo = cfg.blo.dual()
    report = RunReport("spectrum")

    spectra = {}
    if analytic:
        f = _analytic_grid(s["rbw_hz"], fs, n, *band)
        for name, theta in (("theta0", 0.0), ("theta90", math.pi / 2)):
            v = _snl_rel(cfg, blo_variance(cfg.model, cfg.chain, blo.with_theta(theta), f))
            spectra[name] = Spectrum(f, 10 * np.log10(v), s["rbw_hz"], s["vbw_hz"],
                                     reference="analytic")
        spectra["snl"] = Spectrum(f, np.zeros_like(f), s["rbw_hz"], s["vbw_hz"],
                                  reference="analytic")
    else:
        ref, vac = _calibrate(cfg, blo, fs, n, _seed(cfg.seed, _SEED_SPECTRUM["snl"]))
        for name, theta in (("theta0", 0.0), ("theta90", math.pi / 2)):
            trace = synthesize(cfg.model, cfg.chain, blo.with_theta(theta), None, n / fs, fs,
                               _seed(cfg.seed, _SEED_SPECTRUM[name]))
            spectra[name] = analyzer.swept_spectrum(trace, s["rbw_hz"], s["vbw_hz"], ref, band,
                                                    s["sweep_time_s"])
        spectra["snl"] = analyzer.swept_spectrum(vac, s["rbw_hz"], s["vbw_hz"], ref, band,
                                                 s["sweep_time_s"])

    for name, spec in spectra.items():
        seed = None if analytic else _seed(cfg.seed, _SEED_SPECTRUM[name])
        _emit(report, out, f"spectrum_{name}.csv", spec, _common_settings(cfg, seed))

    sq = analyzer.band_average_db(spectra["theta90"], *band)
    anti = analyzer.band_average_db(spectra["theta0"], *band)
    snl = analyzer.band_average_db(spectra["snl"], *band)
    low = spectra["theta90"]
    edge_lo = db(float(np.mean(low.linear[low.freqs <= band[0] + 0.1 * (band[1] - band[0])])))
    edge_hi = db(float(np.mean(low.linear[low.freqs >= band[1] - 0.1 * (band[1] - band[0])])))
    dark = analyzer.dark_noise_floor(SnlReference.analytic(fs, cfg.chain), cfg.chain)
    report.headline.update({
        "analytic": analytic,
        "squeezing_db": sq,
        "antisqueezing_db": anti,
        "snl_db": snl,
        "squeezing_low_edge_db": edge_lo,
        "squeezing_high_edge_db": edge_hi,
        "dark_noise_db": dark if isinstance(dark, float) else dark.value,
        "r": getattr(cfg.model, "r", getattr(cfg.model, "r0", None)),
        "eta_eff": cfg.chain.eta_eff,
    })
    report.checks += [
        within("squeezing_db", sq, exp["squeezing_db"], exp["level_tol_db"]),
        within("antisqueezing_db", anti, exp["antisqueezing_db"], exp["level_tol_db"]),
        within("snl_db", snl, 0.0, exp["level_tol_db"]),
    ]
    report.write(out)
    return report


def _ramp_rate(fs, n):
    """One full LO-phase turn over the record."""
    return 2 * math.pi * fs / n


def _thetas_at(spec: Spectrum, blo: BloConfig, rate: float) -> np.ndarray:
    return blo.theta + rate * spec.freqs


def _phase_binned_db(spec: Spectrum, thetas: np.ndarray, bins: int) -> np.ndarray:
    idx = np.floor(np.mod(thetas, 2 * math.pi) / (2 * math.pi) * bins).astype(int) % bins
    lin = spec.linear
    return np.array([db(float(np.mean(lin[idx == b]))) for b in range(bins) if np.any(idx == b)])


def cmd_zero_span(cfg: ScenarioConfig, analytic: bool = False) -> RunReport:
    """Zero-span traces at the centre frequency during a full LO-phase ramp."""
    z, syn, exp = cfg.section("zero_span"), cfg.section("synth"), cfg.expect
    out = _out_dir(cfg)
    fs, n = z["sample_rate_hz"], z["n_samples"]
    rate = _ramp_rate(fs, n)
    center = z["center_hz"]
    report = RunReport("zero_span")
    report.headline["analytic"] = analytic

    ref = None
    if not analytic:
        ref, _ = _calibrate(cfg, cfg.blo.dual(), fs, n, _seed(cfg.seed, _SEED_ZERO_SPAN["snl"]))

    means = {}
    for mode in z["modes"]:
        blo = cfg.blo.dual() if mode == "dual" else cfg.blo.single(mode)
        blo = replace(blo, balance_epsilon=0.0)
        seed = _seed(cfg.seed, _SEED_ZERO_SPAN[mode])
        if analytic:
            t = np.linspace(0.0, n / fs, z["n_points"], endpoint=False)
            block_t = syn["block_len"] / fs
            thetas = blo.theta + rate * np.floor(t / block_t) * block_t
            if mode == "dual":
                v = np.array([blo_variance(cfg.model, cfg.chain, blo.with_theta(th), center)
                              for th in thetas])
            else:
                v = np.full_like(t, heterodyne_variance(cfg.model, cfg.chain, blo, center))
            spec = Spectrum(t, 10 * np.log10(_snl_rel(cfg, v)), z["rbw_hz"], z["vbw_hz"],
                            SweepMode.ZERO_SPAN, center, "analytic")
            seed = None
        else:
            trace = synthesize_phase_ramp(cfg.model, cfg.chain, blo, rate, syn["block_len"],
                                          n / fs, fs, seed)
            spec = analyzer.zero_span(trace, center, z["rbw_hz"], z["vbw_hz"], ref, z["n_points"])
            del trace
        settings = _common_settings(cfg, seed)
        settings["theta_rate_rad_s"] = rate
        _emit(report, out, f"zero_span_{mode}.csv", spec, settings)

        if mode == "dual":
            lo, hi = float(spec.power_db_rel_snl.min()), float(spec.power_db_rel_snl.max())
            report.headline["dual_min_db"] = lo
            report.headline["dual_max_db"] = hi
            report.checks += [
                within("dual_min_db", lo, exp["squeezing_db"], exp["zero_span_tol_db"]),
                within("dual_max_db", hi, exp["antisqueezing_db"], exp["zero_span_tol_db"]),
            ]
        else:
            mean = analyzer.band_average_db(spec)
            binned = _phase_binned_db(spec, _thetas_at(spec, blo, rate), z["phase_bins"])
            flat = float(binned.max() - binned.min())
            means[mode] = mean
            report.headline[f"{mode}_mean_db"] = mean
            report.headline[f"{mode}_phase_flatness_db"] = flat
            report.checks += [
                within(f"{mode}_mean_db", mean, exp["heterodyne_db"], exp["heterodyne_tol_db"]),
                below(f"{mode}_phase_flatness_db", flat, exp["phase_flatness_max_db"]),
            ]
    if "upper" in means and "lower" in means:
        report.checks.append(within("sideband_symmetry_db", means["upper"] - means["lower"],
                                    0.0, exp["sideband_symmetry_tol_db"]))
    report.write(out)
    return report


def _signal_analytic(cfg, blo, model, f, rbw, tones):
    v = blo_variance(model, cfg.chain, blo, f)
    # Gaussian RBW power response with ENBW = rbw
    sd = rbw / math.sqrt(2 * math.pi)
    for ft, p in tones.items():
        v = v + p / rbw * np.exp(-0.5 * ((f - ft) / sd) ** 2)
    return Spectrum(f, 10 * np.log10(_snl_rel(cfg, v)), rbw, cfg.section("signal")["vbw_hz"],
                    reference="analytic")


def cmd_signal(cfg: ScenarioConfig, analytic: bool = False) -> RunReport:
    """Baseband signal shifted to Omega0 on squeezed, antisqueezed and vacuum floors."""
    g, syn, exp = cfg.section("signal"), cfg.section("synth"), cfg.expect
    out = _out_dir(cfg)
    fs, n = syn["sample_rate_hz"], syn["n_samples"]
    rbw = g["rbw_hz"]
    band = (g["f_lo_hz"], g["f_hi_hz"])
    blo = replace(cfg.blo.dual(), balance_epsilon=g["balance_epsilon"])
    omega0 = blo.omega0_offset

    peaks = sorted(signal_peak_frequencies(blo, g["f_mod_hz"]))
    floor_ref = squeezed_floor(cfg.model, cfg.chain, blo, omega0)
    tone = SignalTone(g["f_mod_hz"], g["snr_db"], bandwidth=rbw, reference_floor=floor_ref)
    report = RunReport("signal")

    runs = {"squeezed": (cfg.model, math.pi / 2), "antisqueezed": (cfg.model, 0.0),
            "vacuum": (VACUUM, math.pi / 2)}
    spectra = {}
    if analytic:
        f = _analytic_grid(rbw, fs, n, *band)
        tones = tone_powers(tone, cfg.model, cfg.chain, blo, fs, n)
        if beatnote_power(blo) > 0:
            tones[beatnote_frequency(blo)] = tones.get(beatnote_frequency(blo), 0.0) \
                + beatnote_power(blo)
        for name, (model, theta) in runs.items():
            spectra[name] = _signal_analytic(cfg, blo.with_theta(theta), model, f, rbw, tones)
    else:
        ref, _ = _calibrate(cfg, blo, fs, n, _seed(cfg.seed, _SEED_SIGNAL["snl"]))
        for name, (model, theta) in runs.items():
            trace = synthesize(model, cfg.chain, blo.with_theta(theta), tone, n / fs, fs,
                               _seed(cfg.seed, _SEED_SIGNAL[name]))
            spectra[name] = analyzer.swept_spectrum(trace, rbw, g["vbw_hz"], ref, band,
                                                    g["sweep_time_s"])
    for name, spec in spectra.items():
        seed = None if analytic else _seed(cfg.seed, _SEED_SIGNAL[name])
        _emit(report, out, f"signal_{name}.csv", spec, _common_settings(cfg, seed))

    inner, outer = 10 * rbw, 1e6
    snr = {}
    found = []
    for name in ("squeezed", "vacuum"):
        spec = spectra[name]
        vals = []
        for fp in peaks:
            f_peak, p_peak = analyzer.peak_near(spec, fp, 2 * rbw)
            floor = analyzer.floor_near(spec, fp, inner, outer)
            vals.append((f_peak, p_peak, floor))
        snr[name] = vals
        if name == "squeezed":
            found = [v[0] for v in vals]
    gains = [db((p_sq - fl_sq) / fl_sq) - db((p_vac - fl_vac) / fl_vac)
             for (_, p_sq, fl_sq), (_, p_vac, fl_vac) in zip(snr["squeezed"], snr["vacuum"])]
    sq_floor = db(snr["squeezed"][0][2])
    vac_floor = db(snr["vacuum"][0][2])
    anti_floor = db(analyzer.floor_near(spectra["antisqueezed"], peaks[0], inner, outer))

    report.headline.update({
        "analytic": analytic,
        "expected_peaks_hz": peaks,
        "peak_frequencies_hz": found,
        "squeezed_floor_db": sq_floor,
        "antisqueezed_floor_db": anti_floor,
        "vacuum_floor_db": vac_floor,
        "snr_gain_db": gains,
    })
    for fp, ff in zip(peaks, found):
        report.checks.append(within(f"peak_at_{fp / 1e6:g}MHz", ff, fp, rbw))
    report.checks.append(within("squeezed_floor_db", sq_floor, exp["squeezing_db"],
                                exp["level_tol_db"]))
    report.checks.append(within("vacuum_floor_db", vac_floor, 0.0, exp["level_tol_db"]))
    for fp, gain in zip(peaks, gains):
        report.checks.append(within(f"snr_gain_at_{fp / 1e6:g}MHz_db", gain,
                                    exp["snr_gain_db"], exp["snr_gain_tol_db"]))

    if beatnote_power(blo) > 0:
        f_beat = beatnote_frequency(blo)
        spec = spectra["squeezed"]
        fb, pb = analyzer.peak_near(spec, f_beat, 2 * rbw)
        beat_floor = analyzer.floor_near(spec, f_beat, inner, outer)
        report.headline["beatnote_hz"] = fb
        report.headline["beatnote_above_floor_db"] = db(pb / beat_floor)
        report.checks.append(within("beatnote_hz", fb, f_beat, rbw))
    report.write(out)
    return report


def cmd_fit(v_sq_db: float, v_anti_db: float, out_dir: Optional[Path] = None,
            dark_noise_db: Optional[float] = None) -> RunReport:
    """Fit ``r`` and ``eta_eff`` to a measured squeezing/antisqueezing pair in dB."""
    if not (v_sq_db < 0 < v_anti_db):
        raise InfeasibleFitError(
            f"need squeezing < 0 dB < antisqueezing, got {v_sq_db} dB and {v_anti_db} dB"
        )
    dark = 0.0 if dark_noise_db is None else 10 ** (dark_noise_db / 10)
    fit = fit_loss_and_r(10 ** (v_sq_db / 10), 10 ** (v_anti_db / 10), dark_noise_rel_snl=dark)
    report = RunReport("fit")
    report.headline.update({
        "v_sq_db": v_sq_db,
        "v_anti_db": v_anti_db,
        "r": fit.r,
        "eta_eff": fit.eta_eff,
        "pure_squeezing_db": db(math.exp(-2 * fit.r)),
        "pure_antisqueezing_db": db(math.exp(2 * fit.r)),
    })
    if out_dir is not None:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        report.write(Path(out_dir))
    return report


def cmd_synth(cfg: ScenarioConfig, fmt: str = "bin") -> RunReport:
    """Export one raw record with the ``[blo]`` phase and LO mode."""
    syn = cfg.section("synth")
    out = _out_dir(cfg)
    fs, n = syn["sample_rate_hz"], syn["n_samples"]
    trace = synthesize(cfg.model, cfg.chain, cfg.blo, None, n / fs, fs, cfg.seed)
    report = RunReport("synth")
    if fmt in ("bin", "both"):
        path = out / "trace.bin"
        write_trace_bin(path, trace)
        report.artifacts.append(str(path))
    if fmt in ("csv", "both"):
        path = out / "trace.csv"
        write_trace_csv(path, trace)
        report.artifacts.append(str(path))
    report.headline.update({
        "n_samples": len(trace),
        "sample_rate_hz": fs,
        "seed": cfg.seed,
        "variance": float(np.var(trace.samples)),
    })
    report.write(out)
    return report
