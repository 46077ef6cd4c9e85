"""Spectrum-analyzer emulation for synthesized photocurrent records.

Swept mode is a Welch average whose Gaussian window has an equivalent noise
bandwidth (ENBW) equal to the RBW. The video filter is a moving average of
linear power over ``1/VBW`` seconds of the sweep, which spans
``(f_hi - f_lo) / (sweep_time * vbw)`` Hz of the trace. Zero span
mixes the centre frequency to DC, applies a Gaussian low-pass with the same
ENBW, detects ``|y|**2`` and averages it over ``1/VBW``. Both report power
over an SNL reference in dB, with RMS detection throughout.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import optimize, signal
from scipy.ndimage import uniform_filter1d

from .errors import ConfigError, OutOfBandError
from .squeezing import DetectionChain
from .synth import Trace


class SweepMode(enum.Enum):
    SWEPT = "swept"
    ZERO_SPAN = "zero_span"


class DarkNoise(enum.Enum):
    ABSENT = "no dark noise"


@dataclass
class Spectrum:
    """Analyzer trace.

    ``freqs`` holds frequencies in Hz for swept spectra and times in seconds
    for zero-span traces.
    """

    freqs: np.ndarray
    power_db_rel_snl: np.ndarray
    rbw: float
    vbw: float
    mode: SweepMode = SweepMode.SWEPT
    center: Optional[float] = None
    reference: str = ""

    def __post_init__(self):
        self.freqs = np.asarray(self.freqs, dtype=float)
        self.power_db_rel_snl = np.asarray(self.power_db_rel_snl, dtype=float)
        if self.freqs.shape != self.power_db_rel_snl.shape or self.freqs.ndim != 1:
            raise ValueError("freqs and power values must be 1-D and of equal length")
        if len(self.freqs) > 1 and np.any(np.diff(self.freqs) <= 0):
            raise ValueError("spectrum axis must be strictly increasing")
        if not (self.rbw > 0 and self.vbw > 0):
            raise ConfigError("rbw and vbw must be > 0")
        if self.vbw > self.rbw:
            raise ConfigError(f"vbw ({self.vbw}) must not exceed rbw ({self.rbw})")
        if not np.all(np.isfinite(self.power_db_rel_snl)):
            raise ValueError("spectrum contains non-finite power values")
        if self.mode is SweepMode.ZERO_SPAN and self.center is None:
            raise ValueError("zero-span spectrum needs a centre frequency")

    @property
    def linear(self) -> np.ndarray:
        return 10 ** (self.power_db_rel_snl / 10)

    def axis_name(self) -> str:
        return "time_s" if self.mode is SweepMode.ZERO_SPAN else "freq_hz"

    def settings(self) -> dict:
        out = {"mode": self.mode.value, "rbw_hz": self.rbw, "vbw_hz": self.vbw}
        if self.center is not None:
            out["center_hz"] = self.center
        out["reference"] = self.reference
        return out

    def to_csv(self, path, extra: Optional[dict] = None) -> None:
        """Write ``#``-prefixed settings, a header row, then one row per point."""
        settings = self.settings()
        settings.update(extra or {})
        with open(path, "w", newline="") as fh:
            for k, v in settings.items():
                fh.write(f"# {k} = {v}\n")
            w = csv.writer(fh)
            w.writerow([self.axis_name(), "power_db_rel_snl"])
            for f, p in zip(self.freqs, self.power_db_rel_snl):
                w.writerow([repr(float(f)), repr(float(p))])


def read_spectrum_csv(path):
    """Return ``(settings, axis, power_db)`` from a file written by ``Spectrum.to_csv``."""
    settings, rows = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition("=")
                settings[k.strip()] = v.strip()
            else:
                rows.append(line)
    data = list(csv.reader(rows))
    body = np.array(data[1:], dtype=float).reshape(-1, 2)
    return settings, body[:, 0], body[:, 1]


@dataclass(frozen=True)
class SnlReference:
    """Shot-noise calibration: one-sided vacuum PSD in trace units per Hz."""

    level: float
    derivation: str = "analytic"
    seed: Optional[int] = None

    def __post_init__(self):
        if not (math.isfinite(self.level) and self.level > 0):
            raise ConfigError(f"SNL level must be > 0, got {self.level}")

    @classmethod
    def analytic(cls, sample_rate: float, chain: Optional[DetectionChain] = None):
        """Vacuum level of a synthesized record, including the chain's dark noise."""
        dark = chain.dark_noise_rel_snl if chain is not None else 0.0
        return cls(2.0 * (1.0 + dark) / sample_rate, "analytic")

    @classmethod
    def from_trace(cls, trace: Trace, nperseg: int = 1024):
        """Calibrate on a vacuum-input record.

        Uses the median of a Hann-window Welch PSD between 5 % and 95 % of
        Nyquist, which ignores LO beatnotes and other narrow lines.
        """
        f, p = signal.welch(trace.samples, trace.sample_rate, window="hann",
                            nperseg=min(nperseg, len(trace.samples)), detrend=False)
        nyq = trace.sample_rate / 2
        sel = (f > 0.05 * nyq) & (f < 0.95 * nyq)
        return cls(float(np.median(p[sel])), "vacuum_trace", trace.seed)

    def describe(self) -> str:
        if self.derivation == "vacuum_trace":
            return f"vacuum_trace(seed={self.seed})"
        return "analytic"


def enbw(window: np.ndarray, sample_rate: float) -> float:
    """Equivalent noise bandwidth of a window or FIR, in Hz."""
    w = np.asarray(window, dtype=float)
    return sample_rate * float(np.sum(w**2)) / float(np.sum(w)) ** 2


def gaussian_window(rbw: float, sample_rate: float, length: int, sym: bool = False) -> np.ndarray:
    """Gaussian window of ``length`` samples whose ENBW equals ``rbw``."""
    def mismatch(log_std):
        w = signal.windows.gaussian(length, math.exp(log_std), sym=sym)
        return math.log(enbw(w, sample_rate) / rbw)

    lo, hi = math.log(0.5), math.log(50.0 * length)
    if mismatch(lo) * mismatch(hi) > 0:
        raise OutOfBandError(
            f"no Gaussian window of {length} samples has ENBW {rbw} Hz at {sample_rate} Hz"
        )
    log_std = optimize.brentq(mismatch, lo, hi, xtol=1e-12)
    return signal.windows.gaussian(length, math.exp(log_std), sym=sym)


def rbw_segment_length(rbw: float, sample_rate: float, n_samples: int) -> int:
    """Power-of-two Welch segment covering about +/-4.5 std of the RBW window."""
    # untruncated Gaussian: ENBW = fs / (2 sqrt(pi) std)
    std = sample_rate / (2 * math.sqrt(math.pi) * rbw)
    return int(min(n_samples, 2 ** math.ceil(math.log2(9 * std))))


def _check_rbw_vbw(trace: Trace, rbw: float, vbw: float):
    if not (rbw > 0 and vbw > 0):
        raise ConfigError("rbw and vbw must be > 0")
    if vbw > rbw:
        raise ConfigError(f"vbw ({vbw}) must not exceed rbw ({rbw})")
    resolution = trace.sample_rate / len(trace.samples)
    if rbw < 2 * resolution:
        raise OutOfBandError(
            f"rbw {rbw} Hz is finer than twice the record resolution {resolution} Hz"
        )


def welch_psd(trace: Trace, rbw: float):
    """One-sided Welch PSD (trace units / Hz) with a Gaussian RBW window."""
    nper = rbw_segment_length(rbw, trace.sample_rate, len(trace.samples))
    w = gaussian_window(rbw, trace.sample_rate, nper)
    return signal.welch(trace.samples, trace.sample_rate, window=w, noverlap=nper // 2,
                        detrend=False, scaling="density")


def periodogram(trace: Trace):
    """Rectangular-window one-sided periodogram; sums exactly to the mean square."""
    return signal.periodogram(trace.samples, trace.sample_rate, window="boxcar",
                              detrend=False, scaling="density")


def swept_spectrum(trace: Trace, rbw: float, vbw: float, ref: SnlReference,
                   band: tuple, sweep_time: Optional[float] = None) -> Spectrum:
    """Noise-power spectrum over ``band = (f_lo, f_hi)`` in dB relative to ``ref``.

    ``sweep_time`` defaults to the record duration.
    """
    _check_rbw_vbw(trace, rbw, vbw)
    f_lo, f_hi = map(float, band)
    nyq = trace.sample_rate / 2
    if not (0 <= f_lo < f_hi < nyq):
        raise OutOfBandError(f"band {band} must satisfy 0 <= f_lo < f_hi < Nyquist = {nyq} Hz")
    if sweep_time is None:
        sweep_time = trace.duration
    if not sweep_time > 0:
        raise ConfigError("sweep_time must be > 0")

    f, p = welch_psd(trace, rbw)
    df = f[1] - f[0]
    width = (f_hi - f_lo) / (sweep_time * vbw)
    nbins = max(1, int(round(width / df)))
    nbins += 1 - nbins % 2
    if nbins > 1:
        p = uniform_filter1d(p, nbins, mode="nearest")

    sel = (f >= f_lo) & (f <= f_hi)
    return Spectrum(f[sel], 10 * np.log10(p[sel] / ref.level), rbw, vbw,
                    SweepMode.SWEPT, None, ref.describe())


def zero_span(trace: Trace, center: float, rbw: float, vbw: float, ref: SnlReference,
              n_points: int = 1001) -> Spectrum:
    """Power in an ``rbw``-wide band around ``center`` versus time."""
    _check_rbw_vbw(trace, rbw, vbw)
    fs = trace.sample_rate
    if not (center - rbw / 2 > 0 and center + rbw / 2 < fs / 2):
        raise OutOfBandError(f"zero-span band {center} +/- {rbw / 2} Hz leaves (0, Nyquist)")

    std = fs / (2 * math.sqrt(math.pi) * rbw)
    half = int(math.ceil(4.5 * std))
    taps = gaussian_window(rbw, fs, 2 * half + 1, sym=True)
    taps /= taps.sum()
    n = len(trace.samples)
    n_avg = max(1, int(round(fs / vbw)))
    if n - 2 * half < n_avg + 1:
        raise OutOfBandError("record too short for the requested rbw/vbw")

    lo = trace.samples * np.exp(-2j * math.pi * center * np.arange(n) / fs)
    y = signal.oaconvolve(lo, taps, mode="same")[half:n - half]
    del lo
    # E|y|**2 of vacuum = (level / 2) * ENBW with unit-DC-gain taps
    power = (y.real**2 + y.imag**2) / (0.5 * ref.level * enbw(taps, fs))
    del y

    csum = np.concatenate(([0.0], np.cumsum(power)))
    video = (csum[n_avg:] - csum[:-n_avg]) / n_avg
    t = (half + np.arange(len(video)) + (n_avg - 1) / 2) / fs

    idx = np.unique(np.linspace(0, len(video) - 1, min(n_points, len(video))).round().astype(int))
    return Spectrum(t[idx], 10 * np.log10(video[idx]), rbw, vbw,
                    SweepMode.ZERO_SPAN, float(center), ref.describe())


def dark_noise_floor(ref: SnlReference, chain: DetectionChain) -> Union[float, DarkNoise]:
    """Dark-noise level in dB relative to the shot-noise level.

    Returns ``DarkNoise.ABSENT`` for a chain without dark noise.
    """
    if chain.dark_noise_rel_snl == 0:
        return DarkNoise.ABSENT
    return 10 * math.log10(chain.dark_noise_rel_snl)


def band_average_db(spec: Spectrum, f_lo: float = -math.inf, f_hi: float = math.inf) -> float:
    """Mean linear power over an axis range, in dB."""
    sel = (spec.freqs >= f_lo) & (spec.freqs <= f_hi)
    if not np.any(sel):
        raise ValueError(f"no spectrum points in [{f_lo}, {f_hi}]")
    return 10 * math.log10(float(np.mean(spec.linear[sel])))


def peak_near(spec: Spectrum, f_expected: float, search: float):
    """``(frequency, linear power)`` of the largest point within ``search`` Hz."""
    sel = np.abs(spec.freqs - f_expected) <= search
    if not np.any(sel):
        raise ValueError(f"no spectrum points within {search} Hz of {f_expected} Hz")
    i = np.flatnonzero(sel)[np.argmax(spec.linear[sel])]
    return float(spec.freqs[i]), float(spec.linear[i])


def floor_near(spec: Spectrum, f: float, inner: float, outer: float) -> float:
    """Median linear power in ``inner < |freq - f| <= outer``."""
    d = np.abs(spec.freqs - f)
    sel = (d > inner) & (d <= outer)
    if not np.any(sel):
        raise ValueError(f"no floor points around {f} Hz")
    return float(np.median(spec.linear[sel]))
