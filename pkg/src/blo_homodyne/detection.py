"""Balanced homodyne detection with a bichromatic local oscillator (BLO).

The BLO has two equal tones at ``w0 +/- Omega0``. At analysis frequency
``Omega`` the difference photocurrent samples the signal quadrature at angle
``theta`` from two sideband pairs, ``+/-|Omega0 - Omega|`` and
``+/-(Omega0 + Omega)``, each with weight 1/2 in power. Blocking one LO tone
turns the measurement into heterodyne detection: each sideband is seen
without its partner, so the phase information is lost and the noise is the
mean of the two quadrature variances.

All results are noise powers normalised to the shot-noise level (SNL). The
LO amplitude cancels in that normalisation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import constants

from .errors import ConfigError, DegenerateFrequencyError, DomainError, OutOfBandError
from .squeezing import DetectionChain, SqueezingModel, detected_variance, ideal_variances

# relative power mismatch tolerated for the dual-tone (balanced) mode
EQUAL_POWER_RTOL = 1e-9


@dataclass(frozen=True)
class BloConfig:
    """Local-oscillator settings.

    ``omega0_offset`` is half the tone separation in Hz and ``theta`` the
    relative phase between LO and signal in radians (0 selects X, pi/2 selects
    Y). ``balance_epsilon`` is the fractional common-mode leakage of the
    photocurrent subtraction; it only produces the LO beatnote at
    ``2 * omega0_offset``.
    """

    omega0_offset: float
    power_upper: float = 2e-3
    power_lower: float = 2e-3
    theta: float = 0.0
    balance_epsilon: float = 0.0
    sidebands_enabled: tuple = (True, True)
    wavelength: float = 1064e-9

    def __post_init__(self):
        if not (math.isfinite(self.omega0_offset) and self.omega0_offset > 0):
            raise ConfigError(f"omega0_offset must be > 0, got {self.omega0_offset}")
        if self.power_upper < 0 or self.power_lower < 0:
            raise ConfigError("LO powers must be >= 0")
        if self.power_upper == 0 and self.power_lower == 0:
            raise ConfigError("LO powers cannot both be zero")
        if not math.isfinite(self.theta):
            raise ConfigError("theta must be finite")
        if not (math.isfinite(self.balance_epsilon) and self.balance_epsilon >= 0):
            raise ConfigError(f"balance_epsilon must be >= 0, got {self.balance_epsilon}")
        if len(self.sidebands_enabled) != 2:
            raise ConfigError("sidebands_enabled must be an (upper, lower) pair")
        if not self.wavelength > 0:
            raise ConfigError("wavelength must be > 0")
        object.__setattr__(self, "sidebands_enabled", tuple(bool(s) for s in self.sidebands_enabled))

    @property
    def n_enabled(self) -> int:
        return sum(self.sidebands_enabled)

    @property
    def is_dual(self) -> bool:
        return self.n_enabled == 2

    @property
    def upper_power(self) -> float:
        return self.power_upper if self.sidebands_enabled[0] else 0.0

    @property
    def lower_power(self) -> float:
        return self.power_lower if self.sidebands_enabled[1] else 0.0

    def with_theta(self, theta: float) -> "BloConfig":
        return replace(self, theta=theta)

    def single(self, which: str) -> "BloConfig":
        """Copy with only the ``"upper"`` or ``"lower"`` tone enabled."""
        if which == "upper":
            return replace(self, sidebands_enabled=(True, False))
        if which == "lower":
            return replace(self, sidebands_enabled=(False, True))
        raise ConfigError(f"unknown sideband {which!r}")

    def dual(self) -> "BloConfig":
        return replace(self, sidebands_enabled=(True, True))


@dataclass(frozen=True)
class SidebandPairSelection:
    pair_low: float
    pair_high: float


def select_pairs(cfg: BloConfig, omega: float) -> SidebandPairSelection:
    """Sideband pairs ``(|Omega0 - Omega|, Omega0 + Omega)`` read out at ``omega``."""
    if not omega >= 0:
        raise DomainError(f"analysis frequency must be >= 0, got {omega}")
    return SidebandPairSelection(abs(cfg.omega0_offset - omega), cfg.omega0_offset + omega)


def _pairs(cfg: BloConfig, omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(~np.isfinite(omega)) or np.any(omega < 0):
        raise DomainError("analysis frequency must be finite and >= 0")
    return np.abs(cfg.omega0_offset - omega), cfg.omega0_offset + omega


def _check_dual(cfg: BloConfig):
    if not cfg.is_dual:
        raise ConfigError("BLO variance needs both LO tones enabled")
    total = cfg.power_upper + cfg.power_lower
    if abs(cfg.power_upper - cfg.power_lower) / total >= EQUAL_POWER_RTOL:
        raise ConfigError(
            f"BLO tones must have equal power, got {cfg.power_upper} W and {cfg.power_lower} W"
        )


def _check_single(cfg: BloConfig):
    if cfg.n_enabled != 1:
        raise ConfigError(
            f"heterodyne detection needs exactly one LO tone, {cfg.n_enabled} enabled"
        )


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _quadrature_variance(model, chain, nu, theta):
    vx, vy = ideal_variances(model, nu)
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    return detected_variance(c2 * vx + s2 * vy, chain)


def blo_variance(model: SqueezingModel, chain: DetectionChain, cfg: BloConfig, omega):
    """Detected BLO noise power at ``omega`` (Hz) relative to the SNL.

    Mean of the detected variances of the two sideband pairs at the LO phase
    ``cfg.theta``; the pairs are distinct modes for ``omega > 0`` and add with
    zero covariance. ``omega`` may be an array.
    """
    _check_dual(cfg)
    omega_arr = np.asarray(omega, dtype=float)
    if np.any(omega_arr == 0):
        raise DegenerateFrequencyError(
            "at Omega = 0 both sideband pairs coincide at Omega0 and are not "
            "independent; evaluate at Omega > 0"
        )
    low, high = _pairs(cfg, omega_arr)
    v_low = _quadrature_variance(model, chain, low, cfg.theta)
    v_high = _quadrature_variance(model, chain, high, cfg.theta)
    return _scalar(0.5 * (np.asarray(v_low) + np.asarray(v_high)))


def heterodyne_variance(model: SqueezingModel, chain: DetectionChain, cfg: BloConfig, omega):
    """Noise power with a single LO tone; independent of ``cfg.theta``."""
    _check_single(cfg)
    low, high = _pairs(cfg, omega)
    total = 0.0
    for nu in (low, high):
        vx, vy = ideal_variances(model, nu)
        total = total + 0.5 * (np.asarray(detected_variance(vx, chain))
                               + np.asarray(detected_variance(vy, chain)))
    return _scalar(0.5 * total)


def phase_scan(model: SqueezingModel, chain: DetectionChain, cfg: BloConfig, omega: float,
               thetas: Sequence[float]) -> list:
    """``blo_variance`` at ``omega`` for each LO phase in ``thetas``."""
    thetas = list(thetas)
    if not thetas:
        raise ConfigError("thetas must be non-empty")
    return [blo_variance(model, chain, cfg.with_theta(t), omega) for t in thetas]


def quadrature_spectra(model: SqueezingModel, chain: DetectionChain, cfg: BloConfig, omega):
    """Photocurrent spectra of the in-phase and quadrature components.

    Returns ``(P_X, P_Y)`` such that the noise power at LO phase ``theta`` is
    ``cos(theta)**2 P_X + sin(theta)**2 P_Y``. In single-tone mode both equal
    the heterodyne level. ``omega = 0`` is accepted and evaluated with the
    coincident pairs treated as independent, which is only meaningful as a
    value for a DC bin.
    """
    if cfg.is_dual:
        _check_dual(cfg)
        low, high = _pairs(cfg, omega)
        px = 0.5 * (np.asarray(_quadrature_variance(model, chain, low, 0.0))
                    + np.asarray(_quadrature_variance(model, chain, high, 0.0)))
        py = 0.5 * (np.asarray(_quadrature_variance(model, chain, low, math.pi / 2))
                    + np.asarray(_quadrature_variance(model, chain, high, math.pi / 2)))
        return _scalar(px), _scalar(py)
    p = heterodyne_variance(model, chain, cfg, omega)
    return p, p


def signal_peak_frequencies(cfg: BloConfig, f_mod: float) -> set:
    """Photocurrent frequencies of a signal tone at ``w0 + f_mod``.

    The upper LO tone down-converts it to ``Omega0 - f_mod`` and the lower one
    to ``Omega0 + f_mod``; with ``f_mod = 0`` both land on ``Omega0``.
    """
    if not (0 <= f_mod < cfg.omega0_offset):
        raise OutOfBandError(
            f"signal offset must satisfy 0 <= f_mod < Omega0 = {cfg.omega0_offset} Hz, got {f_mod}"
        )
    peaks = set()
    if cfg.sidebands_enabled[0]:
        peaks.add(cfg.omega0_offset - f_mod)
    if cfg.sidebands_enabled[1]:
        peaks.add(cfg.omega0_offset + f_mod)
    return peaks


def beatnote_frequency(cfg: BloConfig) -> float:
    return 2.0 * cfg.omega0_offset


def beatnote_power(cfg: BloConfig) -> float:
    """Power of the LO beatnote at ``2 * Omega0`` relative to the SNL density.

    The two tones beat in each detector's photocurrent; subtraction leaves a
    fraction ``balance_epsilon`` of the amplitude. Relative to the shot-noise
    density of the total LO photocurrent (unit quantum efficiency) the tone
    power is ``eps**2 * P_u * P_l / ((P_u + P_l) * h * nu)``, in Hz: divide by
    a resolution bandwidth to get the displayed level.
    """
    pu, pl = cfg.upper_power, cfg.lower_power
    if cfg.balance_epsilon == 0 or pu == 0 or pl == 0:
        return 0.0
    photon_energy = constants.h * constants.c / cfg.wavelength
    return cfg.balance_epsilon**2 * pu * pl / ((pu + pl) * photon_energy)
