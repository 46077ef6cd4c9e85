"""Scenario configuration: INI-style ``key = value`` files layered on the defaults."""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .detection import BloConfig
from .errors import BloError, ConfigError, InfeasibleFitError
from .squeezing import DetectionChain, Flat, LorentzianOpo, LossFit, fit_loss_and_r


def _float(s):
    return float(s)


def _opt_float(s):
    return None if s.strip() == "" else float(s)


def _int(s):
    return int(float(s)) if "e" in s.lower() else int(s)


def _str(s):
    return s.strip()


def _list(s):
    return [p.strip() for p in s.split(",") if p.strip()]


def _dark(s):
    return None if s.strip().lower() in ("off", "none") else float(s)


SCHEMA = {
    "run": {"seed": _int, "out_dir": _str},
    "model": {"kind": _str, "source": _str, "fit_v_sq": _float, "fit_v_anti": _float,
              "r": _float, "gamma_hz": _float},
    "chain": {"eta": _float, "visibility": _float, "dark_noise_db": _dark},
    "blo": {"omega0_hz": _float, "power_upper_w": _float, "power_lower_w": _float,
            "wavelength_m": _float, "balance_epsilon": _float, "theta_deg": _float,
            "mode": _str},
    "synth": {"sample_rate_hz": _float, "n_samples": _int, "block_len": _int},
    "spectrum": {"rbw_hz": _float, "vbw_hz": _float, "f_lo_hz": _float, "f_hi_hz": _float,
                 "sweep_time_s": _opt_float},
    "zero_span": {"center_hz": _float, "rbw_hz": _float, "vbw_hz": _float,
                  "sample_rate_hz": _float, "n_samples": _int, "n_points": _int,
                  "modes": _list, "phase_bins": _int},
    "signal": {"f_mod_hz": _float, "snr_db": _float, "rbw_hz": _float, "vbw_hz": _float,
               "sweep_time_s": _opt_float, "f_lo_hz": _float, "f_hi_hz": _float,
               "balance_epsilon": _float},
    "expect": {k: _float for k in (
        "squeezing_db", "antisqueezing_db", "level_tol_db", "heterodyne_db",
        "heterodyne_tol_db", "phase_flatness_max_db", "sideband_symmetry_tol_db",
        "zero_span_tol_db", "snr_gain_db", "snr_gain_tol_db")},
}
FREE_SECTIONS = ("annotations",)


@dataclass
class ScenarioConfig:
    model: object
    chain: DetectionChain
    blo: BloConfig
    raw: dict
    seed: int
    out_dir: Path
    fit: Optional[LossFit] = None
    annotations: dict = field(default_factory=dict)

    def section(self, name: str) -> dict:
        return self.raw[name]

    @property
    def expect(self) -> dict:
        return self.raw["expect"]


def _read_layers(paths):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    parser.optionxform = str
    default = resources.files("blo_homodyne").joinpath("default.ini").read_text("utf-8")
    parser.read_string(default, source="<default>")
    for path in paths:
        try:
            text = Path(path).read_text("utf-8")
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        extra = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
        extra.optionxform = str
        try:
            extra.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        for sec in extra.sections():
            if sec not in SCHEMA and sec not in FREE_SECTIONS:
                raise ConfigError(f"{path}: unknown section [{sec}]")
            for key, value in extra[sec].items():
                if sec in SCHEMA and key not in SCHEMA[sec]:
                    raise ConfigError(f"{path}: unknown key {key!r} in [{sec}]")
                if not parser.has_section(sec):
                    parser.add_section(sec)
                parser[sec][key] = value
    return parser


def _typed(parser) -> dict:
    raw = {}
    for sec, keys in SCHEMA.items():
        raw[sec] = {}
        for key, conv in keys.items():
            try:
                raw[sec][key] = conv(parser[sec][key])
            except KeyError as exc:
                raise ConfigError(f"missing key {key!r} in [{sec}]") from exc
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key}: {exc}") from exc
    return raw


def build(raw: dict, annotations: Optional[dict] = None) -> ScenarioConfig:
    """Construct the physical objects from typed sections."""
    m, c, b = raw["model"], raw["chain"], raw["blo"]
    dark = 0.0 if c["dark_noise_db"] is None else 10 ** (c["dark_noise_db"] / 10)
    if not math.isfinite(dark):
        raise ConfigError("dark_noise_db must be finite or 'off'")

    fit = None
    if m["source"] == "fit":
        # raises InfeasibleFitError (a physics error) for impossible pairs
        fit = fit_loss_and_r(m["fit_v_sq"], m["fit_v_anti"], dark_noise_rel_snl=dark)
        r = fit.r
        try:
            chain = DetectionChain.from_eta_eff(fit.eta_eff, c["visibility"], dark)
        except ConfigError as exc:
            raise InfeasibleFitError(
                f"fitted efficiency {fit.eta_eff:.4g} exceeds visibility**2: {exc}") from exc
    elif m["source"] == "direct":
        r = m["r"]
        chain = DetectionChain(c["eta"], c["visibility"], dark)
    else:
        raise ConfigError(f"[model] source must be 'fit' or 'direct', got {m['source']!r}")

    if m["kind"] == "flat":
        model = Flat(r)
    elif m["kind"] == "lorentzian":
        model = LorentzianOpo(r, m["gamma_hz"])
    else:
        raise ConfigError(f"[model] kind must be 'flat' or 'lorentzian', got {m['kind']!r}")

    blo = BloConfig(b["omega0_hz"], b["power_upper_w"], b["power_lower_w"],
                    math.radians(b["theta_deg"]), b["balance_epsilon"], (True, True),
                    b["wavelength_m"])
    if b["mode"] in ("upper", "lower"):
        blo = blo.single(b["mode"])
    elif b["mode"] != "dual":
        raise ConfigError(f"[blo] mode must be dual, upper or lower, got {b['mode']!r}")

    for mode in raw["zero_span"]["modes"]:
        if mode not in ("dual", "upper", "lower"):
            raise ConfigError(f"[zero_span] unknown mode {mode!r}")
    seed = raw["run"]["seed"]
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed}")

    return ScenarioConfig(model, chain, blo, raw, seed, Path(raw["run"]["out_dir"]), fit,
                          dict(annotations or {}))


def load_config(paths=(), overrides: Optional[dict] = None) -> ScenarioConfig:
    """Load the defaults, layer ``paths`` on top, then apply ``overrides``.

    ``overrides`` maps ``"section.key"`` to a string value, as it would appear
    in a file.
    """
    parser = _read_layers([p for p in paths if p is not None])
    for dotted, value in (overrides or {}).items():
        sec, _, key = dotted.partition(".")
        if sec not in SCHEMA or key not in SCHEMA[sec]:
            raise ConfigError(f"unknown override {dotted!r}")
        parser[sec][key] = str(value)
    raw = _typed(parser)
    annotations = dict(parser["annotations"]) if parser.has_section("annotations") else {}
    try:
        return build(raw, annotations)
    except BloError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
