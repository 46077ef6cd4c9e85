"""Balanced homodyne detection of squeezed vacuum with a bichromatic local oscillator."""

from .analyzer import (
    DarkNoise,
    SnlReference,
    Spectrum,
    SweepMode,
    dark_noise_floor,
    swept_spectrum,
    zero_span,
)
from .detection import (
    BloConfig,
    SidebandPairSelection,
    beatnote_power,
    blo_variance,
    heterodyne_variance,
    phase_scan,
    select_pairs,
    signal_peak_frequencies,
)
from .errors import (
    BloError,
    ConfigError,
    DegenerateFrequencyError,
    DomainError,
    InfeasibleFitError,
    OutOfBandError,
    PhysicsError,
)
from .squeezing import (
    DetectionChain,
    Flat,
    LorentzianOpo,
    LossFit,
    detected_variance,
    fit_loss_and_r,
    ideal_variances,
)
from .synth import SignalTone, Trace, synthesize, synthesize_phase_ramp

__version__ = "0.1.0"
