"""Seeded synthesis of difference-photocurrent records.

Samples are in shot-noise units: a vacuum input through a lossless,
dark-noise-free chain gives white noise of unit variance per sample, i.e. a
one-sided PSD of ``2 / sample_rate``. Noise is shaped in the frequency domain
(white complex Gaussian spectrum times the square root of the target PSD,
inverse real FFT); deterministic tones and white dark noise are added after.

Random streams come from ``numpy.random.Philox`` keyed by
``SeedSequence(seed, spawn_key=(k,))``: k=0 in-phase noise, k=1 quadrature
noise, k=2 dark noise.
"""

from __future__ import annotations

import csv
import math
import struct
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .detection import (
    BloConfig,
    beatnote_frequency,
    beatnote_power,
    blo_variance,
    quadrature_spectra,
    signal_peak_frequencies,
)
from .errors import ConfigError, OutOfBandError
from .squeezing import DetectionChain, SqueezingModel

MIN_SAMPLES = 2**14
DEFAULT_BLOCK_LEN = 1024

TRACE_MAGIC = b"BLOTRACE"
TRACE_VERSION = 1
# magic, version, header size, sample rate, length, seed, padding
_HEADER = struct.Struct("<8sIIdQQ24x")
assert _HEADER.size == 64

_STREAM_X, _STREAM_Y, _STREAM_DARK = 0, 1, 2


@dataclass
class Trace:
    sample_rate: float
    samples: np.ndarray
    seed: int
    annotations: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate

    def times(self) -> np.ndarray:
        return np.arange(len(self.samples)) / self.sample_rate


@dataclass(frozen=True)
class SignalTone:
    """Baseband signal injected at ``w0 + f_mod``.

    ``snr_target_db`` is the tone power over the squeezed (theta = pi/2) noise
    floor at each peak, measured in ``bandwidth`` Hz. ``bandwidth=None`` means
    one bin of the synthesized record (``sample_rate / n``). Pass
    ``reference_floor`` (linear, relative to SNL) to pin the absolute tone
    power across runs with different noise floors.
    """

    f_mod: float = 0.0
    snr_target_db: float = 10.0
    bandwidth: Optional[float] = None
    reference_floor: Optional[float] = None

    def __post_init__(self):
        if not self.f_mod >= 0:
            raise ConfigError(f"f_mod must be >= 0, got {self.f_mod}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError("tone reference bandwidth must be > 0")
        if self.reference_floor is not None and not self.reference_floor > 0:
            raise ConfigError("reference floor must be > 0")


def squeezed_floor(model: SqueezingModel, chain: DetectionChain, cfg: BloConfig,
                   omega: float) -> float:
    """BLO noise floor in the squeezed quadrature, whatever the LO mode of ``cfg``."""
    # powers cancel in SNL units; any equal pair will do
    dual = replace(cfg, sidebands_enabled=(True, True), power_upper=1.0, power_lower=1.0,
                   theta=math.pi / 2)
    return blo_variance(model, chain, dual, omega)


def tone_powers(tone: SignalTone, model: SqueezingModel, chain: DetectionChain, cfg: BloConfig,
                sample_rate: float, n_samples: int) -> dict:
    """Map peak frequency -> tone power relative to the SNL density (Hz)."""
    bandwidth = tone.bandwidth if tone.bandwidth is not None else sample_rate / n_samples
    gain = 10 ** (tone.snr_target_db / 10)
    out = {}
    for f in sorted(signal_peak_frequencies(cfg, tone.f_mod)):
        floor = tone.reference_floor
        if floor is None:
            floor = squeezed_floor(model, chain, cfg, f)
        out[f] = gain * floor * bandwidth
    return out


def tone_amplitude(power_rel_snl: float, sample_rate: float) -> float:
    """Sample-domain amplitude of a tone with the given SNL-relative power."""
    # mean-square A**2 / 2 over the vacuum density 2 / fs
    return 2.0 * math.sqrt(power_rel_snl / sample_rate)


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream,))))


def _shaped_noise(rng: np.random.Generator, psd: np.ndarray, n: int) -> np.ndarray:
    nb = n // 2 + 1
    g = rng.standard_normal((2, nb))
    spec = (g[0] + 1j * g[1]) * math.sqrt(0.5)
    spec[0] = g[0, 0]
    if n % 2 == 0:
        spec[-1] = g[0, -1]
    spec *= np.sqrt(psd)
    return np.fft.irfft(spec, n=n, norm="ortho")


def _check_request(cfg, duration, sample_rate, seed, tone_freqs=()):
    if not (math.isfinite(sample_rate) and sample_rate > 0):
        raise ConfigError(f"sample_rate must be > 0, got {sample_rate}")
    if not (math.isfinite(duration) and duration > 0):
        raise ConfigError("zero-length or invalid duration")
    if not (isinstance(seed, (int, np.integer)) and 0 <= int(seed) < 2**64):
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
    n = int(round(duration * sample_rate))
    if n < MIN_SAMPLES:
        raise ConfigError(f"record of {n} samples is shorter than the minimum {MIN_SAMPLES}")
    highest = max([cfg.omega0_offset, *tone_freqs])
    if beatnote_power(cfg) > 0:
        highest = max(highest, beatnote_frequency(cfg))
    if not sample_rate > 2 * highest:
        raise OutOfBandError(
            f"sample rate {sample_rate} Hz violates Nyquist for content at {highest} Hz"
        )
    return n


def _deterministic_tones(n, sample_rate, freqs_powers):
    t = np.arange(n) / sample_rate
    out = np.zeros(n)
    for f, p in freqs_powers.items():
        if p > 0:
            out += tone_amplitude(p, sample_rate) * np.cos(2 * math.pi * f * t)
    return out


def _annotations(**kw):
    return {k: repr(v) for k, v in kw.items()}


def synthesize(model: SqueezingModel, chain: DetectionChain, cfg: BloConfig,
               tone: Optional[SignalTone], duration: float, sample_rate: float,
               seed: int) -> Trace:
    """Stationary photocurrent record at the fixed LO phase ``cfg.theta``.

    The PSD converges to ``blo_variance`` (dual LO) or ``heterodyne_variance``
    (single tone) times the vacuum level.
    """
    tone_pw = {}
    if tone is not None:
        n_guess = int(round(duration * sample_rate)) or 1
        tone_pw = tone_powers(tone, model, chain, cfg, sample_rate, n_guess)
    n = _check_request(cfg, duration, sample_rate, seed, tone_pw.keys())

    quiet = replace(chain, dark_noise_rel_snl=0.0)
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    px, py = quadrature_spectra(model, quiet, cfg, freqs)
    c2, s2 = math.cos(cfg.theta) ** 2, math.sin(cfg.theta) ** 2
    x = _shaped_noise(_rng(seed, _STREAM_X), c2 * np.asarray(px) + s2 * np.asarray(py), n)

    tones = dict(tone_pw)
    bp = beatnote_power(cfg)
    if bp > 0:
        f_beat = beatnote_frequency(cfg)
        tones[f_beat] = tones.get(f_beat, 0.0) + bp
    if tones:
        x += _deterministic_tones(n, sample_rate, tones)
    if chain.dark_noise_rel_snl > 0:
        x += math.sqrt(chain.dark_noise_rel_snl) * _rng(seed, _STREAM_DARK).standard_normal(n)

    return Trace(sample_rate, x, int(seed), _annotations(
        kind="stationary", model=model, chain=chain, blo=cfg, tone=tone,
        tone_powers=tones, n_samples=n))


def phase_ramp_thetas(cfg: BloConfig, theta_rate: float, block_len: int, n: int,
                      sample_rate: float) -> np.ndarray:
    """LO phase held in each block, sampled at the block start."""
    starts = np.arange(0, n, block_len)
    return cfg.theta + theta_rate * starts / sample_rate


def synthesize_phase_ramp(model: SqueezingModel, chain: DetectionChain, cfg: BloConfig,
                          theta_rate: float, block_len: int, duration: float,
                          sample_rate: float, seed: int) -> Trace:
    """Record with the LO phase advancing at ``theta_rate`` rad/s in steps.

    The photocurrent is ``cos(theta) x_X(t) + sin(theta) x_Y(t)`` with
    independent stationary components of PSD ``P_X`` and ``P_Y``; ``theta`` is
    constant inside each block of ``block_len`` samples, so each block is
    exactly stationary and the underlying noise stays continuous across block
    edges.
    """
    n = _check_request(cfg, duration, sample_rate, seed)
    if not (isinstance(block_len, (int, np.integer)) and 0 < block_len <= n // 4):
        raise ConfigError(f"block_len must be a positive integer well below {n}, got {block_len}")
    if not math.isfinite(theta_rate):
        raise ConfigError("theta_rate must be finite")

    quiet = replace(chain, dark_noise_rel_snl=0.0)
    freqs = np.fft.rfftfreq(n, 1.0 / sample_rate)
    px, py = quadrature_spectra(model, quiet, cfg, freqs)
    thetas = phase_ramp_thetas(cfg, theta_rate, block_len, n, sample_rate)
    c = np.repeat(np.cos(thetas), block_len)[:n]
    s = np.repeat(np.sin(thetas), block_len)[:n]

    x = c * _shaped_noise(_rng(seed, _STREAM_X), np.broadcast_to(px, freqs.shape), n)
    x += s * _shaped_noise(_rng(seed, _STREAM_Y), np.broadcast_to(py, freqs.shape), n)
    bp = beatnote_power(cfg)
    if bp > 0:
        x += _deterministic_tones(n, sample_rate, {beatnote_frequency(cfg): bp})
    if chain.dark_noise_rel_snl > 0:
        x += math.sqrt(chain.dark_noise_rel_snl) * _rng(seed, _STREAM_DARK).standard_normal(n)

    return Trace(sample_rate, x, int(seed), _annotations(
        kind="phase_ramp", model=model, chain=chain, blo=cfg, theta_rate=theta_rate,
        block_len=block_len, n_samples=n))


def write_trace_bin(path, trace: Trace) -> None:
    """Little-endian float64 samples after a 64-byte ``BLOTRACE`` header."""
    header = _HEADER.pack(TRACE_MAGIC, TRACE_VERSION, _HEADER.size, float(trace.sample_rate),
                          len(trace.samples), int(trace.seed))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.asarray(trace.samples, dtype="<f8").tobytes())


def read_trace_bin(path) -> Trace:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError(f"{path}: truncated trace header")
    magic, version, hsize, fs, length, seed = _HEADER.unpack_from(data)
    if magic != TRACE_MAGIC:
        raise ValueError(f"{path}: not a BLOTRACE file")
    if version != TRACE_VERSION:
        raise ValueError(f"{path}: unsupported trace version {version}")
    body = data[hsize:]
    if len(body) != 8 * length:
        raise ValueError(f"{path}: expected {length} samples, found {len(body) // 8}")
    return Trace(fs, np.frombuffer(body, dtype="<f8").astype(float), seed)


def write_trace_csv(path, trace: Trace, max_rows: int = 2**20) -> None:
    if len(trace.samples) > max_rows:
        raise ValueError(
            f"trace has {len(trace.samples)} samples; CSV export is limited to {max_rows}"
        )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "value"])
        for i, v in enumerate(trace.samples):
            w.writerow([repr(i / trace.sample_rate), repr(float(v))])
