import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blo_homodyne.errors import ConfigError, DomainError, InfeasibleFitError
from blo_homodyne.squeezing import (
    DetectionChain,
    Flat,
    LorentzianOpo,
    detected_variance,
    fit_loss_and_r,
    ideal_variances,
    wrap_angle,
)

models = st.one_of(
    st.builds(Flat, st.floats(0, 3)),
    st.builds(LorentzianOpo, st.floats(0, 3), st.floats(1e5, 1e9)),
)
freqs = st.floats(0, 1e9)
chains = st.builds(DetectionChain, st.floats(0.01, 1), st.floats(0.1, 1), st.floats(0, 1))


def _bisect_pump(r0):
    # V_Y(0) = ((1 - x) / (1 + x))**2 is decreasing in x on (0, 1)
    target = math.exp(-2 * r0)
    lo, hi = 0.0, 1.0
    while hi - lo > 1e-14:
        mid = 0.5 * (lo + hi)
        if ((1 - mid) / (1 + mid)) ** 2 > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_vacuum_flat():
    assert ideal_variances(Flat(0.0), 3e6) == (1.0, 1.0)


def test_flat_fitted_values():
    vx, vy = ideal_variances(Flat(1.3568), 2e6)
    assert vx == pytest.approx(math.exp(2.7136))
    assert vx == pytest.approx(15.08, abs=0.01)
    assert vy == pytest.approx(0.0663, abs=1e-4)


def test_lorentzian_rolloff():
    m = LorentzianOpo(1.0, 35e6)
    _, vy0 = ideal_variances(m, 0.0)
    _, vyg = ideal_variances(m, 35e6)
    assert vy0 < vyg < 1


def test_lorentzian_on_resonance_matches_r0():
    m = LorentzianOpo(0.8, 35e6)
    vx, vy = ideal_variances(m, 0.0)
    assert vy == pytest.approx(math.exp(-1.6), rel=1e-12)
    assert vx == pytest.approx(math.exp(1.6), rel=1e-12)


@pytest.mark.parametrize("r0", [0.0, 0.01, 0.5, 1.3568, 3.0])
def test_pump_parameter_matches_bisection(r0):
    assert LorentzianOpo(r0, 1e6).pump_parameter == pytest.approx(_bisect_pump(r0), abs=1e-12)


def test_array_input_shape():
    vx, vy = ideal_variances(LorentzianOpo(1.0, 35e6), np.linspace(0, 1e8, 7))
    assert vx.shape == vy.shape == (7,)


def test_negative_frequency_rejected():
    with pytest.raises(DomainError):
        ideal_variances(Flat(1.0), -1.0)


@pytest.mark.parametrize("bad", [lambda: Flat(-0.1), lambda: LorentzianOpo(1.0, 0.0),
                                 lambda: LorentzianOpo(-1.0, 1e6),
                                 lambda: DetectionChain(eta=0.0),
                                 lambda: DetectionChain(eta=1.2),
                                 lambda: DetectionChain(visibility=0.0),
                                 lambda: DetectionChain(dark_noise_rel_snl=math.inf),
                                 lambda: DetectionChain(dark_noise_rel_snl=-1)])
def test_invalid_parameters(bad):
    with pytest.raises(ConfigError):
        bad()


@given(models, freqs)
def test_uncertainty_bound(model, nu):
    vx, vy = ideal_variances(model, nu)
    assert vx * vy >= 1 - 1e-12
    assert vy <= 1 <= vx
    if isinstance(model, Flat):
        assert vx * vy == pytest.approx(1.0, rel=1e-12)


def test_lorentzian_product_strictly_above_one_off_resonance():
    vx, vy = ideal_variances(LorentzianOpo(1.0, 35e6), 20e6)
    assert vx * vy > 1.0


def test_detected_variance_examples(measured_fit):
    chain = DetectionChain(eta=0.653 / 0.98**2, visibility=0.98)
    assert chain.eta_eff == pytest.approx(0.653)
    assert detected_variance(0.0663, chain) == pytest.approx(0.390, abs=5e-4)
    assert detected_variance(15.08, chain) == pytest.approx(10.19, abs=5e-3)
    assert detected_variance(1.0, chain) == 1.0


@given(chains, st.floats(1e-3, 100))
def test_loss_is_affine_and_weakens_squeezing(chain, v):
    out = detected_variance(v, chain)
    quiet = DetectionChain(chain.eta, chain.visibility)
    q = detected_variance(v, quiet)
    assert abs(q - 1) <= abs(v - 1) + 1e-12
    assert out == pytest.approx(q + chain.dark_noise_rel_snl, rel=1e-12, abs=1e-12)


@given(chains)
def test_vacuum_fixed_point(chain):
    assert detected_variance(1.0, chain) == pytest.approx(1.0 + chain.dark_noise_rel_snl,
                                                          rel=1e-15)


def test_fit_measured_pair():
    fit = fit_loss_and_r(0.39, 10.2)
    a = 9.2 / 0.61
    assert math.exp(2 * fit.r) == pytest.approx(a, rel=1e-14)
    assert fit.r == pytest.approx(1.3568, abs=1e-4)
    assert fit.eta_eff == pytest.approx(0.6533, abs=1e-4)
    # substitute back
    chain = DetectionChain(eta=fit.eta_eff)
    vx, vy = ideal_variances(Flat(fit.r), 1e6)
    assert detected_variance(vy, chain) == pytest.approx(0.39, rel=1e-12)
    assert detected_variance(vx, chain) == pytest.approx(10.2, rel=1e-12)


def test_fit_lossless_pair():
    fit = fit_loss_and_r(math.exp(-1.0), math.exp(1.0))
    assert fit.r == pytest.approx(0.5, rel=1e-12)
    assert fit.eta_eff == pytest.approx(1.0, rel=1e-12)


def test_fit_near_vacuum_continuity():
    r = 1e-4
    fit = fit_loss_and_r(math.exp(-2 * r), math.exp(2 * r))
    assert fit.r == pytest.approx(r, rel=1e-8)
    assert fit.eta_eff == pytest.approx(1.0, rel=1e-8)


def test_fit_rejects_sub_uncertainty_pair():
    # 0.9999 * 1.0001 = 1 - 1e-8: below the pure-state bound
    with pytest.raises(InfeasibleFitError):
        fit_loss_and_r(0.9999, 1.0001)


@pytest.mark.parametrize("pair", [(1.2, 3.0), (0.5, 0.9), (0.0, 2.0), (0.3, 2.0), (math.nan, 2)])
def test_fit_infeasible(pair):
    with pytest.raises(InfeasibleFitError):
        fit_loss_and_r(*pair)


def test_fit_with_dark_reference():
    dark = 10 ** -1.4
    fit = fit_loss_and_r(0.39, 10.2, dark_noise_rel_snl=dark)
    chain = DetectionChain(eta=fit.eta_eff, dark_noise_rel_snl=dark)
    vx, vy = ideal_variances(Flat(fit.r), 1e6)
    assert detected_variance(vy, chain) / (1 + dark) == pytest.approx(0.39, rel=1e-12)
    assert detected_variance(vx, chain) / (1 + dark) == pytest.approx(10.2, rel=1e-12)


@settings(max_examples=300)
@given(st.floats(0.01, 2), st.floats(0.05, 1))
def test_fit_round_trip(r, eta):
    chain = DetectionChain(eta=eta)
    vx, vy = ideal_variances(Flat(r), 0.0)
    fit = fit_loss_and_r(detected_variance(vy, chain), detected_variance(vx, chain))
    assert fit.r == pytest.approx(r, rel=1e-10)
    assert fit.eta_eff == pytest.approx(eta, rel=1e-10)


def test_wrap_angle():
    assert wrap_angle(-math.pi / 2) == pytest.approx(3 * math.pi / 2)
    assert wrap_angle(5 * math.pi) == pytest.approx(math.pi)
