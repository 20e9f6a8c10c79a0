"""Acceptance criteria 1-11, each check marked with its criterion number.

The terminal summary prints one PASS/FAIL line per criterion.  Tolerances are
the stated ones; several checks fail on this model and are kept failing on
purpose (see the README for the measured values).

Set ``PFGATE_LITERAL_NS=1`` to read the benchmark coherence times as
nanoseconds; criterion 9 then checks the analytic coherence floor instead.
"""

import math
import os
import time

import numpy as np
import pytest

from pfgate.circuit import TruncationSpec, load_preset
from pfgate.dynamics import (
    CoherenceSpec, PulseSchedule, RampEnvelope, ZXTable, amplitude_for_gate_length,
    calibrate_zx90, coherence_floor, cycle_at_duration, effective_drive_gate, evolve_closed,
    evolve_open, full_pf_cycle, ramp_fidelities, step_refinement, zx90_gate_error,
)
from pfgate.effective import (
    PAIRED_TRANSITIONS, numeric_transition_rates, symmetrized, transition_rates,
)
from pfgate.zz import (
    critical_amplitude, decoupling_frequency, exchange_free_frequency, find_idle_point,
    fit_exponents, freedom_amplitude, higher_order_opposes, numeric_effective_coupling,
    small_drive_factors, static_zz, static_zz_sweep, total_zz, zz_free_frequencies,
)

T = TruncationSpec(3, 3, 3)
ENTANGLING = 4.8                      # GHz, coupler frequency during the drive
LITERAL_NS = os.environ.get("PFGATE_LITERAL_NS", "") not in ("", "0")

acceptance = pytest.mark.acceptance


@pytest.fixture(scope="module")
def idle_points():
    start = time.perf_counter()
    points = {n: find_idle_point(load_preset(n)) for n in range(1, 7)}
    return points, time.perf_counter() - start


# --- 1: idle points ---------------------------------------------------------------

NUMERIC_IDLE = {2: 6.577, 3: 6.643, 4: 6.577, 5: 5.261, 6: 5.532}
CLOSED_IDLE = {2: 6.522, 3: 6.522, 4: 6.522, 5: 5.278, 6: 5.536}


@acceptance(1)
@pytest.mark.parametrize("n", sorted(NUMERIC_IDLE))
def test_c1_numeric_idle_point(idle_points, n):
    assert idle_points[0][n].omegaCI == pytest.approx(NUMERIC_IDLE[n], abs=0.010)


@acceptance(1)
@pytest.mark.parametrize("n", sorted(CLOSED_IDLE))
def test_c1_closed_form_idle_point(n):
    assert round(decoupling_frequency(load_preset(n)), 3) == CLOSED_IDLE[n]


@acceptance(1)
def test_c1_device_one_absent_and_runtime(idle_points):
    points, elapsed = idle_points
    assert points[1].absent
    assert elapsed < 120.0


# --- 2: method agreement -------------------------------------------------------------

@acceptance(2)
def test_c2_npad_matches_exact():
    dev = load_preset(2)
    diffs = [abs(static_zz(dev.at(w), "exact") - static_zz(dev.at(w), "npad"))
             for w in np.linspace(4.5, 7.5, 100)]
    assert max(diffs) < 0.1


@acceptance(2)
def test_c2_swt_within_ten_percent_above_6p5():
    dev = load_preset(2)
    bad = []
    for w in np.linspace(6.5, 7.5, 51):
        exact, swt = static_zz(dev.at(w), "exact"), static_zz(dev.at(w), "swt")
        if not abs(swt - exact) <= 0.1 * abs(exact):
            bad.append((round(w, 3), exact, swt))
    assert not bad, f"{len(bad)} points outside 10%: {bad[:4]}"


# --- 3: static zero structure ----------------------------------------------------------

@acceptance(3)
def test_c3_device_one_single_zero():
    dev = load_preset(1)
    sweep = static_zz_sweep(dev, np.arange(4.4, 7.5 + 1e-9, 0.01), with_geff=False)
    (zero,) = sweep.zeros
    assert 4.4 <= zero.location <= 4.6
    assert abs(numeric_effective_coupling(dev.at(zero.location))) > 1.0


@acceptance(3)
@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_c3_zero_near_exchange_free_point(n):
    dev = load_preset(n)
    grid = np.arange(4.4, 7.5 + 1e-9, 0.01)
    geff_zeros = exchange_free_frequency(dev, (4.4, 7.5))
    zz_zeros = [z.location for z in static_zz_sweep(dev, grid, with_geff=False).zeros]
    assert geff_zeros and zz_zeros
    gap = min(abs(a - b) for a in geff_zeros for b in zz_zeros)
    assert gap < 0.020, f"nearest ZZ zero is {gap * 1e3:.0f} MHz from g_eff = 0"


# --- 4: leading scaling --------------------------------------------------------------

@acceptance(4)
def test_c4_leading_exponents():
    p = load_preset(2).at(ENTANGLING)
    Om = np.geomspace(0.5, 4.0, 12)
    data = [total_zz(p, O) for O in Om]
    zx_slope = np.polyfit(np.log(Om), np.log([abs(d.zx) for d in data]), 1)[0]
    zz_slope = np.polyfit(np.log(Om), np.log([abs(d.zz_dynamic) for d in data]), 1)[0]
    assert zx_slope == pytest.approx(1.0, abs=0.05)
    assert zz_slope == pytest.approx(2.0, abs=0.1)


# --- 5: beyond-leading exponents and the gap --------------------------------------------

GAP_POINTS = np.linspace(5.06, 5.42, 5)     # inside the device 6 gap


@acceptance(5)
def test_c5_exponents_at_low_coupler_frequency():
    fit = fit_exponents(load_preset(6), 4.5, np.geomspace(5.0, 60.0, 16))
    assert fit.a == pytest.approx(4.0, abs=0.3)
    assert fit.b == pytest.approx(3.0, abs=0.3)


@acceptance(5)
def test_c5_gap_has_no_freedom_amplitude():
    dev = load_preset(6)
    assert all(freedom_amplitude(dev, w, (0.0, 100.0)) == [] for w in GAP_POINTS)


@acceptance(5)
def test_c5_higher_order_term_opposes_in_gap():
    dev = load_preset(6)
    signs = {round(w, 2): higher_order_opposes(dev.at(w), O)
             for w in GAP_POINTS for O in (40.0, 100.0)}
    assert all(signs.values()), f"same-sign points: {[k for k, v in signs.items() if not v]}"


# --- 6: sign of the quadratic factor ---------------------------------------------------

@acceptance(6)
@pytest.mark.parametrize("n", range(1, 7))
def test_c6_quadratic_factor_sign(idle_points, n):
    dev = load_preset(n)
    ip = idle_points[0][n]
    expected = -1 if n <= 4 else 1
    wrong = []
    for w in np.arange(4.5, 7.0 + 1e-9, 0.05):
        if ip.omegaCI is not None and abs(w - ip.omegaCI) <= 0.4:
            continue
        eta2, _ = small_drive_factors(dev.at(w))
        if np.sign(eta2) != expected:
            wrong.append((round(w, 2), eta2))
    assert not wrong


# --- 7: critical amplitude ------------------------------------------------------------

FRINGE_GRID = np.arange(4.5, 7.0 + 1e-9, 0.005)


@acceptance(7)
def test_c7_device_two_merge_amplitude():
    O, n_lo, n_hi = critical_amplitude(load_preset(2), FRINGE_GRID, 30.0, 60.0, xtol=0.25)
    assert n_lo > n_hi
    assert O == pytest.approx(47.0, abs=2.0)


@acceptance(7)
def test_c7_only_idle_frequency_left_at_60():
    dev = load_preset(2)
    zeros = zz_free_frequencies(dev, FRINGE_GRID, 60.0)
    ip = find_idle_point(dev)
    assert len(zeros) == 1 and abs(zeros[0] - ip.omegaCI) < 0.1


@acceptance(7)
def test_c7_device_six_gains_zeros():
    O, n_lo, n_hi = critical_amplitude(load_preset(6), FRINGE_GRID, 30.0, 70.0, xtol=0.25)
    assert n_hi > n_lo
    assert O == pytest.approx(42.3, abs=2.0)


# --- 8: ramp leakage ------------------------------------------------------------------

@pytest.fixture(scope="module")
def device2_idle(idle_points):
    return idle_points[0][2].omegaCI


@acceptance(8)
@pytest.mark.parametrize("round_trip", [False, True], ids=["one_way", "round_trip"])
def test_c8_ramp_fidelity_at_35ns(device2_idle, round_trip):
    ramp = RampEnvelope("tanh", 35.0, device2_idle, ENTANGLING)
    F = ramp_fidelities(load_preset(2), ramp, T, round_trip=round_trip)
    assert min(F["01"], F["10"], F["11"]) > 0.999


@acceptance(8)
def test_c8_fidelity_non_decreasing_in_ramp_time(device2_idle):
    start = time.perf_counter()
    dev = load_preset(2)
    worst = []
    for tau0 in np.linspace(5.0, 50.0, 10):
        F = ramp_fidelities(dev, RampEnvelope("tanh", tau0, device2_idle, ENTANGLING), T)
        worst.append(min(F["01"], F["10"], F["11"]))
    assert np.all(np.diff(worst) >= -1e-4), worst
    assert time.perf_counter() - start < 600.0


# --- 9: gate error ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def error_curves():
    if LITERAL_NS:
        pytest.skip("literal-ns reading enabled")
    coherence = CoherenceSpec.benchmark()
    return {n: zx90_gate_error(load_preset(n), ENTANGLING, coherence) for n in range(2, 7)}


@acceptance(9)
@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_c9_single_interior_minimum(error_curves, n):
    curve = error_curves[n]
    feasible = np.flatnonzero(curve.feasible)
    minima = curve.local_minima()
    assert len(minima) == 1
    assert feasible[0] < minima[0] < feasible[-1]


@acceptance(9)
def test_c9_device_five_fastest_optimum(error_curves):
    best = {n: c.minimum()[0] for n, c in error_curves.items()}
    assert min(best, key=best.get) == 5, best


@acceptance(9)
def test_c9_device_six_cycle_at_145ns(idle_points):
    if LITERAL_NS:
        pytest.skip("literal-ns reading enabled")
    scan = cycle_at_duration(load_preset(6), 145.0, idle_points[0][6].omegaCI, ENTANGLING,
                             CoherenceSpec.benchmark(), [60.0, 70.0, 80.0, 90.0, 100.0])
    assert scan.result.idleToIdleError < 0.003


@acceptance(9)
@pytest.mark.skipif(not LITERAL_NS, reason="microsecond reading in use")
@pytest.mark.parametrize("tg", [60.0, 100.0])
def test_c9_literal_ns_coherence_floor(tg):
    table = ZXTable.build(load_preset(6).at(ENTANGLING), Omega_max=200.0)
    c = CoherenceSpec.benchmark(literal_ns=True)
    O = amplitude_for_gate_length(table, tg)
    res = effective_drive_gate(table, calibrate_zx90(table, O), c)
    assert res.idleToIdleError == pytest.approx(coherence_floor(tg, c), rel=0.2)


# --- 10: numerical hygiene --------------------------------------------------------------

@pytest.fixture(scope="module")
def device6_setup(idle_points):
    dev = load_preset(6)
    table = ZXTable.build(dev.at(ENTANGLING), Omega_max=200.0)
    seg = calibrate_zx90(table, amplitude_for_gate_length(table, 80.0))
    sched = PulseSchedule.cycle(RampEnvelope("tanh", 30.0, idle_points[0][6].omegaCI, ENTANGLING),
                                seg)
    return dev, table, seg, sched


@acceptance(10)
def test_c10_closed_norm(device6_setup):
    dev, _, _, sched = device6_setup
    psi = np.zeros(T.dimension, complex)
    psi[T.index((1, 0, 1))] = psi[T.index((0, 0, 0))] = 1 / math.sqrt(2)
    out = evolve_closed(dev, sched, psi, T)
    assert abs(np.linalg.norm(out) - 1.0) < 1e-8


@acceptance(10)
def test_c10_open_trace(device6_setup):
    dev, _, _, sched = device6_setup
    psi = np.zeros(T.dimension, complex)
    psi[T.index((1, 0, 0))] = psi[T.index((0, 0, 1))] = 1 / math.sqrt(2)
    rho = evolve_open(dev, sched, CoherenceSpec.uniform(20.0, 30.0), np.outer(psi, psi.conj()), T)
    assert abs(np.trace(rho).real - 1.0) < 1e-8


@acceptance(10)
def test_c10_step_halving(device6_setup, device2_idle):
    dev, table, seg, sched = device6_setup
    coherence = CoherenceSpec.benchmark()
    ramp = RampEnvelope("tanh", 35.0, device2_idle, ENTANGLING)

    def report():
        return np.array([
            *ramp_fidelities(load_preset(2), ramp, T).values(),
            1 - effective_drive_gate(table, seg, coherence).idleToIdleError,
            1 - full_pf_cycle(dev, sched, coherence, T).idleToIdleError,
        ])

    base = report()
    with step_refinement():
        fine = report()
    assert np.max(np.abs(fine - base)) < 1e-5


# --- 11: transition-rate oracle -----------------------------------------------------------

@pytest.fixture(scope="module")
def rates(idle_points):
    p = symmetrized(load_preset(2).at(idle_points[0][2].omegaCI))
    return transition_rates(p), numeric_transition_rates(p, T, Omega=1.0)


@acceptance(11)
@pytest.mark.parametrize("k", range(1, 12))
def test_c11_transition_rate(rates, k):
    closed, numeric = rates
    if k in PAIRED_TRANSITIONS:
        # signs of paired rates are phase-independent
        assert numeric[k] == pytest.approx(closed[k], rel=0.1)
    else:
        assert abs(numeric[k]) == pytest.approx(abs(closed[k]), rel=0.1)
