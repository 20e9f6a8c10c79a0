import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from pfgate.circuit import TruncationSpec, build_static_hamiltonian, load_preset
from pfgate.dynamics import (
    ZX90_AREA, CoherenceSpec, DriveSegment, ErrorCurve, PulseSchedule, RampEnvelope,
    ScheduleError, ZXTable, amplitude_for_gate_length, average_gate_fidelity,
    best_virtual_z, calibrate_zx90, coherence_floor, config_hash, default_step,
    effective_drive_gate, evolve_closed, evolve_open, full_pf_cycle, gate_length_cutoff,
    magnus_step, process_fidelity, propagator, step_refinement, zx90,
)
from pfgate.effective import diagonalize_exact

T = TruncationSpec(3, 3, 3)


def channel_of(U):
    """``R[i, j] = U |i><j| U^+`` for a 4x4 unitary."""
    return np.einsum("ai,bj->ijab", U, U.conj())


# --- envelopes and schedules ----------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.floats(1, 200), st.floats(4.5, 7.0), st.floats(4.5, 7.0), st.floats(0.5, 5.0),
       st.sampled_from(["tanh", "flatTopGaussian"]))
def test_envelope_endpoints(tau0, a, b, k, shape):
    r = RampEnvelope(shape, tau0, a, b, steepness=k, edgeWidth=0.3)
    assert abs(r(0.0) - a) < 1e-4 and abs(r(tau0) - b) < 1e-4   # 0.1 MHz
    back = r.reversed()
    assert abs(back(0.0) - b) < 1e-4 and abs(back(tau0) - a) < 1e-4


@settings(max_examples=30, deadline=None)
@given(st.floats(1, 200), st.floats(0.5, 5.0))
def test_tanh_is_monotone(tau0, k):
    r = RampEnvelope("tanh", tau0, 6.5, 4.8, steepness=k)
    w = r(np.linspace(0, tau0, 501))
    assert np.all(np.diff(w) <= 1e-15)


def test_gaussian_edge_is_flat_at_the_entangling_point():
    r = RampEnvelope("flatTopGaussian", 30.0, 6.5, 4.8)
    slope_end = (r(30.0) - r(30.0 - 1e-6)) / 1e-6
    slope_mid = (r(15.005) - r(14.995)) / 0.01
    assert abs(slope_end) < 1e-3 * abs(slope_mid)


def test_envelope_validation():
    with pytest.raises(ScheduleError):
        RampEnvelope("square", 10, 6.5, 4.8)
    with pytest.raises(ScheduleError):
        RampEnvelope("tanh", 0, 6.5, 4.8)


def test_drive_segment_shape():
    seg = DriveSegment(30.0, 50.0)
    assert seg.tg == 90.0
    assert seg(0.0) == 0.0 and seg(90.0) == pytest.approx(0.0, abs=1e-12)
    assert seg(45.0) == 30.0 and seg(10.0) == pytest.approx(15.0)
    with pytest.raises(ScheduleError):
        DriveSegment(-1.0, 10.0)


def test_schedule_rejects_wrong_order():
    ramp = RampEnvelope("tanh", 20, 6.5, 4.8)
    drive = DriveSegment(20.0, 10.0)
    with pytest.raises(ScheduleError):
        PulseSchedule.from_segments([drive, ramp, ramp.reversed()])
    with pytest.raises(ScheduleError):
        PulseSchedule.from_segments([ramp, ramp.reversed(), drive])
    with pytest.raises(ScheduleError):
        PulseSchedule(ramp, drive, RampEnvelope("tanh", 20, 5.0, 6.5))


def test_schedule_round_trips_through_json():
    s = PulseSchedule.cycle(RampEnvelope("tanh", 25, 6.58, 4.8), DriveSegment(30.0, 12.5))
    assert PulseSchedule.from_json(s.to_json()) == s
    assert s.duration == 25 + 52.5 + 25
    assert config_hash(s) == config_hash(PulseSchedule.from_json(s.to_json()))


# --- coherence -----------------------------------------------------------------

def test_coherence_physicality():
    with pytest.raises(ScheduleError):
        CoherenceSpec.uniform(100.0, 250.0)
    with pytest.raises(ScheduleError):
        CoherenceSpec.uniform(100.0, 100.0, unit="s")
    ok = CoherenceSpec.uniform(100.0, 200.0)
    assert ok.rates()[0][1] == 0.0         # T2 = 2 T1: no pure dephasing


def test_coherence_units():
    us = CoherenceSpec.benchmark().rates()[0]
    ns = CoherenceSpec.benchmark(literal_ns=True).rates()[0]
    assert us[0] == pytest.approx(1 / 200e3) and ns[0] == pytest.approx(1 / 200)


def test_coherence_floor_limits():
    c = CoherenceSpec.uniform(50.0, 70.0)
    assert coherence_floor(0.0, c) == 0.0
    # short-time slope: sum over qubits of (d / (d + 1)) * (1/T1 / 2 + 1/T2) * t / 2
    t = 1.0
    g1, g2 = 1 / 50e3, 1 / 70e3
    slope = 2 * (4 / 5) * 0.25 * (g1 + 2 * g2)
    assert coherence_floor(t, c) == pytest.approx(slope * t, rel=1e-3)


# --- integrators -----------------------------------------------------------------

def test_magnus_step_exact_for_constant_hamiltonian():
    H = build_static_hamiltonian(load_preset(2).at(5.0), T)
    U = magnus_step(H, H, 0.3)
    assert np.allclose(U, scipy.linalg.expm(-2j * np.pi * 0.3 * H), atol=1e-12)


def test_propagator_composes():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(5, 5))
    B = rng.normal(size=(5, 5))
    A, B = A + A.T, B + B.T
    H = lambda t: A + math.sin(t) * B
    full = propagator(H, 2.0, 0.01)
    half = propagator(lambda t: H(t + 1.0), 1.0, 0.01) @ propagator(H, 1.0, 0.01)
    assert np.allclose(full, half, atol=1e-12)
    assert np.allclose(full.conj().T @ full, np.eye(5), atol=1e-12)


def test_step_refinement_scales_steps():
    base = default_step(5.0)
    with step_refinement():
        assert default_step(5.0) == pytest.approx(base / 2)
    assert default_step(5.0) == base


def test_stationary_state_is_kept():
    dev = load_preset(2)
    p = dev.at(5.5)
    spec = diagonalize_exact(build_static_hamiltonian(p, T), T)
    psi = spec.state((1, 0, 1))
    still = RampEnvelope("tanh", 10.0, 5.5, 5.5)
    out = evolve_closed(dev, still, psi, T)
    assert abs(np.vdot(psi, out)) == pytest.approx(1.0, abs=1e-9)


def test_closed_evolution_preserves_norm():
    dev = load_preset(2)
    psi = np.zeros(T.dimension, complex)
    psi[T.index((1, 0, 1))] = 1.0
    out = evolve_closed(dev, RampEnvelope("tanh", 8.0, 6.58, 4.8), psi, T)
    assert abs(np.linalg.norm(out) - 1) < 1e-8


def test_open_evolution_closed_limit():
    dev = load_preset(2)
    psi = np.zeros(T.dimension, complex)
    psi[T.index((1, 0, 0))] = psi[T.index((0, 0, 1))] = 1 / math.sqrt(2)
    ramp = RampEnvelope("tanh", 6.0, 6.58, 4.8)
    closed = evolve_closed(dev, ramp, psi, T)
    inf = CoherenceSpec.uniform(math.inf, math.inf)
    rho = evolve_open(dev, ramp, inf, np.outer(psi, psi.conj()), T)
    assert np.allclose(rho, np.outer(closed, closed.conj()), atol=1e-10)


def test_relaxation_matches_exponential_decay():
    p = load_preset(2).at(5.5).replace(g12=0.0, g1c=0.0, g2c=0.0)
    t1 = 0.4                                   # us
    c = CoherenceSpec(t1, 2 * t1, math.inf, math.inf)
    rho = np.zeros((T.dimension, T.dimension), complex)
    i = T.index((1, 0, 0))
    rho[i, i] = 1.0
    duration = 200.0
    out = evolve_open(p, RampEnvelope("tanh", duration, 5.5, 5.5), c, rho, T, dt=0.02)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-8)
    assert np.linalg.eigvalsh(out).min() > -1e-8
    assert out[i, i].real == pytest.approx(math.exp(-duration / (t1 * 1e3)), rel=1e-3)


# --- fidelities --------------------------------------------------------------------

def test_fidelity_of_ideal_channel():
    U = zx90()
    R = channel_of(U)
    assert process_fidelity(R, U) == pytest.approx(1.0)
    assert average_gate_fidelity(R, U) == pytest.approx(1.0)
    assert average_gate_fidelity(R, np.eye(4)) == pytest.approx((4 * 0.5 + 1) / 5)


def test_virtual_z_recovers_frame_phases():
    z1 = np.array([1, 1, -1, -1])
    z2 = np.array([1, -1, 1, -1])
    post = np.exp(-0.5j * (0.7 * z1 - 1.1 * z2))
    U = post[:, None] * zx90()
    fit = best_virtual_z(channel_of(U), zx90())
    assert fit.fidelity == pytest.approx(1.0, abs=1e-10)


def test_no_drive_cycle_is_near_identity():
    dev = load_preset(2)
    sched = PulseSchedule.cycle(RampEnvelope("tanh", 60.0, 6.5794, 4.8))
    res = full_pf_cycle(dev, sched, None, T)
    assert res.idleToIdleError < 1e-3
    assert 0 <= res.leakage < 1e-3
    assert all(0 <= f <= 1 + 1e-12 for f in res.stateFidelities.values())


# --- ZX90 calibration ------------------------------------------------------------------

@pytest.fixture(scope="module")
def table6():
    return ZXTable.build(load_preset(6).at(4.8), Omega_max=100.0)


def test_calibrated_pulse_has_quarter_turn_area(table6):
    seg = calibrate_zx90(table6, 40.0)
    assert abs(table6.area(40.0, seg.rise, seg.fall, seg.flatTop)) == pytest.approx(ZX90_AREA)
    assert seg.tg == pytest.approx(40.0 + seg.flatTop)


def test_gate_length_cutoff(table6):
    cut = gate_length_cutoff(table6)
    assert amplitude_for_gate_length(table6, cut - 1.0) is None
    O = amplitude_for_gate_length(table6, cut + 5.0)
    assert calibrate_zx90(table6, O).tg == pytest.approx(cut + 5.0, abs=1e-4)


def test_effective_gate_closed_is_accurate(table6):
    O = amplitude_for_gate_length(table6, 80.0)
    res = effective_drive_gate(table6, calibrate_zx90(table6, O))
    assert res.idleToIdleError < 1e-3


def test_effective_gate_literal_ns_floor(table6):
    # T1 = T2 = 200 ns: the gate error is dominated by decoherence
    O = amplitude_for_gate_length(table6, 80.0)
    c = CoherenceSpec.benchmark(literal_ns=True)
    res = effective_drive_gate(table6, calibrate_zx90(table6, O), c)
    assert res.idleToIdleError == pytest.approx(coherence_floor(80.0, c), rel=0.2)


def test_error_curve_minima():
    c = ErrorCurve(np.arange(6.0), np.ones(6), np.array([5, 3, 2, 4, 1, 6.0]),
                   np.array([True] * 6))
    assert c.local_minima() == [2, 4]
    assert c.minimum() == (4.0, 1.0)


def test_csv_rows_are_plain_numbers():
    c = ErrorCurve(np.array([40.05, 41.0]), np.array([150.0, np.nan]),
                   np.array([1e-3, np.nan]), np.array([True, False]))
    rows = [line.split(",") for line in c.to_csv().splitlines()[1:]]
    assert [[float(x) for x in r] for r in rows][0] == [40.05, 150.0, 1e-3, 1.0]
    assert rows[1][1] == "nan"
