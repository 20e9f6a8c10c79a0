import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pfgate.circuit import CircuitParams, load_preset
from pfgate.zz import (
    ROOT_TOLERANCE_KHZ, _bracket_zeros, conditional_phase_fringe, critical_amplitude,
    decoupling_frequency, find_idle_point, fit_exponents, fit_power_law, freedom_amplitude,
    freedom_curve, freedom_map_2d, higher_order_opposes, small_drive_factors, static_zz,
    static_zz_sweep, synthetic_exponent_check, total_zz,
)


# --- zero bracketing ----------------------------------------------------------

def test_smooth_sign_change_is_type_one():
    f = lambda x: 40 * (x - 0.3)
    x = np.linspace(0, 1, 11)
    (z,) = _bracket_zeros(x, f(x), f, 1e-9)
    assert z.kind == "I" and z.location == pytest.approx(0.3, abs=1e-8)


def test_divergent_sign_flip_is_type_two():
    f = lambda x: 100 / (x - 0.55)
    x = np.linspace(0, 1, 11)
    (z,) = _bracket_zeros(x, f(x), f, 1e-9)
    assert z.kind == "II" and 0.5 < z.location < 0.6


def test_masked_samples_are_skipped():
    x = np.linspace(0, 1, 5)
    y = np.array([1.0, np.nan, -1.0, -2.0, -3.0])
    assert _bracket_zeros(x, y, lambda v: 1 - 4 * v, 1e-9) == []


# --- static sweeps --------------------------------------------------------------

def test_no_coupling_no_zz():
    dev = load_preset(2)
    p = dev.params.replace(g12=0.0, g1c=0.0, g2c=0.0)
    sweep = static_zz_sweep(p, np.linspace(4.5, 7.0, 26), with_geff=False)
    assert np.all(np.abs(sweep.column("zz_kHz")) < 1e-8)


def test_sweep_requires_increasing_grid():
    with pytest.raises(ValueError):
        static_zz_sweep(load_preset(2), [5.0, 4.9])


def test_sweep_csv_is_deterministic():
    grid = np.linspace(5.0, 6.0, 11)
    a = static_zz_sweep(load_preset(3), grid).to_csv()
    b = static_zz_sweep(load_preset(3), grid).to_csv()
    assert a == b and a.splitlines()[0] == "omegaC_GHz,zz_kHz,geff_MHz,masked"


def test_swt_method_returns_nan_on_pole():
    p = load_preset(2).at(5.5)
    p = p.replace(omega1=p.omega2 + p.delta2 * 1e-3)   # Delta12 = delta2
    assert math.isnan(static_zz(p, "swt"))


@settings(max_examples=20, deadline=None)
@given(st.floats(3.8, 4.8), st.floats(3.8, 4.8), st.floats(5.0, 7.5),
       st.floats(-350, -150), st.floats(-350, -150), st.floats(0, 120), st.floats(0, 120))
def test_zz_invariant_under_qubit_exchange(w1, w2, wc, d1, d2, g1, g2):
    p = CircuitParams(w1, w2, wc, d1, d2, -100.0, 5.0, g1, g2)
    q = CircuitParams(w2, w1, wc, d2, d1, -100.0, 5.0, g2, g1)
    try:
        a, b = static_zz(p), static_zz(q)
    except Exception:
        return
    assert a == pytest.approx(b, abs=1e-6)


# --- idle points ----------------------------------------------------------------

def test_closed_form_decoupling_frequency():
    dev = load_preset(2)
    cap = dev.capacitance
    r = 2 * cap.alpha1 * cap.alpha2 / cap.alpha12
    assert decoupling_frequency(dev) == pytest.approx((4.25 + 4.2) / (2 * math.sqrt(1 - r)))


def test_device_one_has_no_idle_point():
    ip = find_idle_point(load_preset(1))
    assert ip.absent and ip.omegaCIPerturbative is None


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_idle_point_invariants(n):
    # decoupled exchange, and the closed form within 60 MHz of the numeric point
    ip = find_idle_point(load_preset(n))
    assert abs(ip.residualGeff) < 0.1
    assert abs(ip.omegaCI - ip.omegaCIPerturbative) < 0.060


def test_idle_point_has_small_residual_zz():
    ip = find_idle_point(load_preset(5))
    assert abs(ip.residualZZ) < ROOT_TOLERANCE_KHZ


# --- drive ------------------------------------------------------------------------

def test_zero_drive_has_no_dynamic_part():
    d = total_zz(load_preset(2).at(5.0), 0.0)
    assert d.zz_dynamic == pytest.approx(0.0, abs=1e-9)
    assert d.zx == pytest.approx(0.0, abs=1e-12)


def test_freedom_roots_are_polished():
    dev = load_preset(1)
    roots = freedom_amplitude(dev, 5.0, (0.0, 60.0))
    assert roots
    for O in roots:
        assert abs(total_zz(dev.at(5.0), O).zz) < ROOT_TOLERANCE_KHZ


def test_idle_point_is_a_freedom_amplitude():
    dev = load_preset(2)
    ip = find_idle_point(dev)
    assert freedom_amplitude(dev, ip.omegaCI, (0.0, 10.0))[0] == 0.0


def test_freedom_amplitude_range_validation():
    with pytest.raises(ValueError):
        freedom_amplitude(load_preset(2), 5.0, (10.0, 5.0))


def test_freedom_curve_reports_gap():
    curve = freedom_curve(load_preset(6), [5.3, 5.35], (0.0, 100.0), step=2.0)
    assert not curve.samples
    (gap,) = curve.gaps
    assert gap.start == 5.3 and gap.end == 5.35
    assert isinstance(gap.opposing_higher_order, bool)


def test_higher_order_opposition_sign_rule():
    p = load_preset(6).at(5.5)
    eta2, _ = small_drive_factors(p)
    d = total_zz(p, 100.0)
    quad = eta2 * 100.0**2
    expected = (d.zz_dynamic - quad) * (quad + d.zz_static) < 0
    assert higher_order_opposes(p, 100.0) is bool(expected)


def test_critical_amplitude_requires_count_change():
    with pytest.raises(ValueError):
        critical_amplitude(load_preset(2), np.arange(6.4, 6.8, 0.05), 1.0, 2.0)


# --- exponents ---------------------------------------------------------------------

def test_synthetic_exponent_recovered():
    fit = synthetic_exponent_check(-0.01, 2e-7, 5.0, np.geomspace(5, 60, 16))
    assert fit.reliable and fit.exponent == pytest.approx(5.0, abs=0.1)


def test_power_law_flags_sign_changes():
    x = np.geomspace(1, 10, 10)
    r = x**3 * np.where(x > 4, 1, -1)
    assert not fit_power_law(x, r, 2.0, 1e-12).reliable


def test_fit_needs_a_decade_of_samples():
    with pytest.raises(ValueError):
        fit_exponents(load_preset(6), 4.8, np.linspace(5, 20, 10))


def test_small_drive_factors_match_finite_difference():
    p = load_preset(2).at(4.8)
    eta2, mu1 = small_drive_factors(p)
    d = total_zz(p, 0.5)
    assert d.zz_dynamic / 0.25 == pytest.approx(eta2, rel=0.01)
    assert d.zx / 0.5 == pytest.approx(mu1, rel=0.01)


# --- fringes and maps ----------------------------------------------------------------

def test_fringe_arithmetic():
    assert conditional_phase_fringe(100.0, 5.0) == pytest.approx(-1.0)
    assert conditional_phase_fringe(0.0, 7.3) == 1.0
    assert conditional_phase_fringe(250.0, 1.0) == pytest.approx(0.0, abs=1e-12)


def test_map_flags_divergent_detunings():
    sweep, bounds = freedom_map_2d(load_preset(2), [0.0, 0.05, 0.125], [5.0, 5.5])
    near = sweep.column("near_divergence").reshape(3, 2)[:, 0]
    assert list(near) == [1.0, 0.0, 1.0]
    assert {b.kind for b in bounds} == {"I", "II", "geff"}
