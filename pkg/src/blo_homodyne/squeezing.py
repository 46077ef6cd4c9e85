"""Squeezed-vacuum input field and the detection-loss chain.

All variances are linear and normalised to the vacuum (shot-noise) level, so
vacuum has variance 1 in every quadrature. ``Y`` is the squeezed quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .errors import ConfigError, DomainError, InfeasibleFitError

# product tolerance for fits that sit exactly on the pure-state boundary
_PURITY_SLACK = 1e-12


@dataclass(frozen=True)
class Flat:
    """Frequency-independent squeezing, ``V_X = e^{2r}``, ``V_Y = e^{-2r}``."""

    r: float

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0):
            raise ConfigError(f"squeezing parameter r must be finite and >= 0, got {self.r}")


@dataclass(frozen=True)
class LorentzianOpo:
    """Below-threshold OPO output spectrum.

    ``r0`` fixes the on-resonance squeezing (``V_Y(0) = e^{-2 r0}``) and
    ``gamma`` is the cavity half-bandwidth in Hz.
    """

    r0: float
    gamma: float

    def __post_init__(self):
        if not (math.isfinite(self.r0) and self.r0 >= 0):
            raise ConfigError(f"r0 must be finite and >= 0, got {self.r0}")
        if not (math.isfinite(self.gamma) and self.gamma > 0):
            raise ConfigError(f"gamma must be finite and > 0, got {self.gamma}")

    @property
    def pump_parameter(self) -> float:
        """Normalised pump amplitude ``x`` in [0, 1).

        Solves ``((1 - x) / (1 + x))**2 = e^{-2 r0}`` in closed form.
        """
        return math.tanh(self.r0 / 2.0)


SqueezingModel = Union[Flat, LorentzianOpo]


@dataclass(frozen=True)
class DetectionChain:
    """Efficiency budget between the squeezer and the analyser.

    Parameters
    ----------
    eta : float
        Propagation and detector efficiency in (0, 1].
    visibility : float
        Fringe visibility of signal and LO in (0, 1]; enters squared.
    dark_noise_rel_snl : float
        Electronic noise power as a linear fraction of the shot-noise level.
    """

    eta: float = 1.0
    visibility: float = 1.0
    dark_noise_rel_snl: float = 0.0

    def __post_init__(self):
        if not (0 < self.eta <= 1):
            raise ConfigError(f"eta must lie in (0, 1], got {self.eta}")
        if not (0 < self.visibility <= 1):
            raise ConfigError(f"visibility must lie in (0, 1], got {self.visibility}")
        if not (math.isfinite(self.dark_noise_rel_snl) and self.dark_noise_rel_snl >= 0):
            raise ConfigError(
                f"dark_noise_rel_snl must be finite and >= 0, got {self.dark_noise_rel_snl}"
            )

    @property
    def eta_eff(self) -> float:
        return self.eta * self.visibility**2

    @classmethod
    def from_eta_eff(cls, eta_eff: float, visibility: float = 1.0,
                     dark_noise_rel_snl: float = 0.0) -> "DetectionChain":
        """Build a chain whose ``eta * visibility**2`` equals ``eta_eff``."""
        return cls(eta=eta_eff / visibility**2, visibility=visibility,
                   dark_noise_rel_snl=dark_noise_rel_snl)


class LossFit(NamedTuple):
    r: float
    eta_eff: float


def wrap_angle(theta: float) -> float:
    """Reduce a quadrature angle to [0, 2*pi)."""
    return math.fmod(math.fmod(theta, 2 * math.pi) + 2 * math.pi, 2 * math.pi)


def ideal_variances(model: SqueezingModel, nu):
    """Pre-loss quadrature variances ``(V_X, V_Y)`` at sideband frequency ``nu`` (Hz).

    ``nu`` may be a scalar or an array; the result has the same shape.
    """
    nu_arr = np.asarray(nu, dtype=float)
    if np.any(~np.isfinite(nu_arr)) or np.any(nu_arr < 0):
        raise DomainError("sideband frequency must be finite and >= 0")

    if isinstance(model, Flat):
        vx = np.full_like(nu_arr, math.exp(2 * model.r))
        vy = np.full_like(nu_arr, math.exp(-2 * model.r))
    elif isinstance(model, LorentzianOpo):
        x = model.pump_parameter
        u2 = (nu_arr / model.gamma) ** 2
        vx = 1.0 + 4 * x / ((1 - x) ** 2 + u2)
        vy = 1.0 - 4 * x / ((1 + x) ** 2 + u2)
    else:
        raise TypeError(f"unsupported squeezing model {model!r}")

    if vx.ndim == 0:
        return float(vx), float(vy)
    return vx, vy


def detected_variance(v_ideal, chain: DetectionChain):
    """Map an ideal variance through loss, mode mismatch and dark noise."""
    v = np.asarray(v_ideal, dtype=float)
    if np.any(v <= 0):
        raise DomainError("ideal variance must be > 0")
    eta = chain.eta_eff
    out = eta * v + (1.0 - eta) + chain.dark_noise_rel_snl
    return float(out) if out.ndim == 0 else out


def fit_loss_and_r(v_sq_meas: float, v_anti_meas: float,
                   dark_noise_rel_snl: float = 0.0) -> LossFit:
    """Invert a measured (squeezed, antisqueezed) pair for ``r`` and ``eta_eff``.

    Solves ``eta (a - 1) = V_anti - 1`` and ``eta (1 - 1/a) = 1 - V_sq``
    exactly, with ``a = e^{2r}``. Dividing the two gives
    ``a = (V_anti - 1) / (1 - V_sq)``.

    When ``dark_noise_rel_snl`` is non-zero the inputs are taken as ratios to a
    shot-noise reference that itself contains the dark noise (the usual
    blocked-signal calibration); they are converted to pure shot-noise units
    before fitting.
    """
    s, a_meas = float(v_sq_meas), float(v_anti_meas)
    if not (math.isfinite(s) and math.isfinite(a_meas)):
        raise InfeasibleFitError("measured variances must be finite")
    if dark_noise_rel_snl:
        s = s * (1 + dark_noise_rel_snl) - dark_noise_rel_snl
        a_meas = a_meas * (1 + dark_noise_rel_snl) - dark_noise_rel_snl
    if not (0 < s < 1 < a_meas):
        raise InfeasibleFitError(
            f"need 0 < V_sq < 1 < V_anti, got V_sq={s:.6g}, V_anti={a_meas:.6g}"
        )
    if s * a_meas < 1 - _PURITY_SLACK:
        raise InfeasibleFitError(
            f"V_sq * V_anti = {s * a_meas:.12g} < 1 violates the uncertainty bound "
            "of a lossy pure squeezed state"
        )
    excess = a_meas - 1.0
    a = excess / (1.0 - s)
    if a <= 1.0:
        raise InfeasibleFitError("fit degenerates to vacuum (e^{2r} <= 1)")
    r = 0.5 * math.log(a)
    eta_eff = min(excess / (a - 1.0), 1.0)
    return LossFit(r=r, eta_eff=eta_eff)
