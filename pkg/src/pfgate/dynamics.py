"""Time-domain simulation of the idle -> entangled -> idle cycle.

A schedule is a coupler ramp down, an optional cross-resonance drive
segment, and the mirrored ramp back up.  Ramps run in the lab frame on the
bare basis with couplings following the coupler through the capacitance
model.  The drive segment runs in the dressed frame at the entangling
coupler frequency, co-rotating with the drive; the classical target
crosstalk (IX, IY, ZY) and the target Stark shift (IZ) are removed ideally,
the control Z rotation is left to the virtual-Z frame.

Integrators
-----------
* unitary part: fourth-order Magnus steps on two Gauss points; each step
  exponentiates a Hermitian matrix exactly, so norm drift is round-off only
* dissipation: constant Lindblad superoperator (sparse) Strang-split
  between unitary chunks, second-order Taylor per chunk; trace-exact

Times are in ns, frequencies in GHz, drive amplitudes and rates in MHz.
"""

from __future__ import annotations

import contextlib
import hashlib
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq, minimize, minimize_scalar

from .circuit import (
    COMPUTATIONAL_LABELS,
    DEFAULT_TRUNCATION,
    CircuitParams,
    Device,
    TruncationSpec,
    annihilation,
    build_drive_operator,
    build_static_hamiltonian,
    number_operator,
)
from .effective import (
    LabelingError,
    PAULI,
    diagonalize_exact,
    driven_coefficients,
    target_frequency,
)
from .zz import TYPE_II_THRESHOLD_KHZ

TWO_PI = 2 * np.pi
ZX90_AREA = 250.0          # MHz ns: flat-top ZX rate times duration for a pi/2 rotation
DISSIPATION_CHUNK = 0.25   # ns between dissipator applications
EFFECTIVE_STEP = 0.05      # ns, two-qubit block-frame evolution
_REFINE = [1.0]
DRIVE_CORRECTIONS = ("IX", "IY", "ZY")


class ScheduleError(ValueError):
    pass


# ---------------------------------------------------------------------------
# envelopes


@dataclass(frozen=True)
class RampEnvelope:
    """Coupler frequency moved from ``omegaStart`` to ``omegaEnd`` (GHz) in ``tau0`` ns.

    ``tanh``: ``(1 + tanh(k (2u - 1)) / tanh k) / 2`` with ``u = t / tau0``,
    exact endpoints and monotone.  ``flatTopGaussian``: a Gaussian edge of
    width ``edgeWidth * tau0`` arriving flat at the entangling point (the
    flat top of the cycle); ``mirror`` gives the matching departing edge.
    """

    shape: str
    tau0: float
    omegaStart: float
    omegaEnd: float
    steepness: float = 2.0
    edgeWidth: float = 0.3
    mirror: bool = False

    def __post_init__(self):
        if self.shape not in ("tanh", "flatTopGaussian"):
            raise ScheduleError(f"unknown ramp shape {self.shape!r}")
        if not self.tau0 > 0:
            raise ScheduleError("tau0 must be positive")
        if self.steepness <= 0 or self.edgeWidth <= 0:
            raise ScheduleError("steepness and edgeWidth must be positive")
        if min(self.omegaStart, self.omegaEnd) <= 0:
            raise ScheduleError("ramp frequencies must be positive")

    @property
    def duration(self) -> float:
        return self.tau0

    def _profile(self, u):
        if self.shape == "tanh":
            k = self.steepness
            return 0.5 * (1 + np.tanh(k * (2 * u - 1)) / np.tanh(k))
        w = self.edgeWidth
        e0 = math.exp(-1 / (2 * w * w))
        return (np.exp(-((u - 1) ** 2) / (2 * w * w)) - e0) / (1 - e0)

    def profile(self, u):
        """Fraction of the way from start to end, ``u`` in [0, 1]."""
        u = np.clip(np.asarray(u, float), 0.0, 1.0)
        return 1 - self._profile(1 - u) if self.mirror else self._profile(u)

    def __call__(self, t):
        return self.omegaStart + (self.omegaEnd - self.omegaStart) * self.profile(
            np.asarray(t, float) / self.tau0)

    def reversed(self) -> "RampEnvelope":
        """The time-mirrored ramp back to ``omegaStart``."""
        return RampEnvelope(self.shape, self.tau0, self.omegaEnd, self.omegaStart,
                            self.steepness, self.edgeWidth, not self.mirror)


def _sin2_edge(x):
    return np.sin(0.5 * np.pi * np.clip(x, 0.0, 1.0)) ** 2


def _sin2_scalar(seg, t: float) -> float:
    """Scalar fast path of ``DriveSegment.shape``."""
    if t < 0 or t > seg.tg:
        return 0.0
    if t < seg.rise:
        return math.sin(0.5 * math.pi * t / seg.rise) ** 2
    if t > seg.rise + seg.flatTop:
        return math.sin(0.5 * math.pi * (seg.tg - t) / seg.fall) ** 2
    return 1.0


@dataclass(frozen=True)
class DriveSegment:
    """Round-square drive: ``sin^2`` rise, flat top, ``sin^2`` fall (ns); amplitude in MHz."""

    Omega: float
    flatTop: float
    rise: float = 20.0
    fall: float = 20.0

    def __post_init__(self):
        if self.Omega < 0 or self.flatTop < 0 or self.rise < 0 or self.fall < 0:
            raise ScheduleError("drive amplitude and durations must be non-negative")

    @property
    def tg(self) -> float:
        return self.rise + self.flatTop + self.fall

    @property
    def duration(self) -> float:
        return self.tg

    def shape(self, t):
        """Envelope as a fraction of ``Omega``."""
        t = np.asarray(t, float)
        s = np.ones_like(t)
        if self.rise > 0:
            s = np.where(t < self.rise, _sin2_edge(t / self.rise), s)
        if self.fall > 0:
            s = np.where(t > self.rise + self.flatTop,
                         _sin2_edge((self.tg - t) / self.fall), s)
        return np.where((t < 0) | (t > self.tg), 0.0, s)

    def __call__(self, t):
        return self.Omega * self.shape(t)


@dataclass(frozen=True)
class CoherenceSpec:
    """Per-qubit T1 and T2 in ``unit`` (``"us"`` or ``"ns"``); ``math.inf`` disables a channel."""

    t1q1: float
    t2q1: float
    t1q2: float
    t2q2: float
    unit: str = "us"

    def __post_init__(self):
        if self.unit not in ("us", "ns"):
            raise ScheduleError("coherence unit must be 'us' or 'ns'")
        for t1, t2 in ((self.t1q1, self.t2q1), (self.t1q2, self.t2q2)):
            if not (t1 > 0 and t2 > 0):
                raise ScheduleError("coherence times must be positive")
            if t2 > 2 * t1 * (1 + 1e-12):
                raise ScheduleError(f"T2 = {t2} exceeds 2 T1 = {2 * t1}")

    @classmethod
    def uniform(cls, t1: float, t2: float, unit: str = "us") -> "CoherenceSpec":
        return cls(t1, t2, t1, t2, unit)

    @classmethod
    def benchmark(cls, literal_ns: bool = False) -> "CoherenceSpec":
        """T1 = T2 = 200 for both qubits, in microseconds unless ``literal_ns``."""
        return cls.uniform(200.0, 200.0, "ns" if literal_ns else "us")

    def rates(self) -> list[tuple[float, float]]:
        """``(1/T1, 1/Tphi)`` per qubit in 1/ns."""
        scale = 1e3 if self.unit == "us" else 1.0
        out = []
        for t1, t2 in ((self.t1q1, self.t2q1), (self.t1q2, self.t2q2)):
            g1 = 0.0 if math.isinf(t1) else 1.0 / (t1 * scale)
            g2 = 0.0 if math.isinf(t2) else 1.0 / (t2 * scale)
            out.append((g1, max(g2 - 0.5 * g1, 0.0)))
        return out


@dataclass(frozen=True)
class PulseSchedule:
    """Ramp down, optional drive at the bottom, ramp back up.

    Segments are validated in order: the drive sits between two ramps whose
    ends meet at the entangling coupler frequency, and the second ramp
    returns to where the first started.
    """

    rampDown: RampEnvelope
    drive: DriveSegment | None
    rampUp: RampEnvelope

    def __post_init__(self):
        if not isinstance(self.rampDown, RampEnvelope) or not isinstance(self.rampUp, RampEnvelope):
            raise ScheduleError("schedule must start and end with coupler ramps")
        if self.drive is not None and not isinstance(self.drive, DriveSegment):
            raise ScheduleError("middle segment must be a drive segment")
        if abs(self.rampDown.omegaEnd - self.rampUp.omegaStart) > 1e-12:
            raise ScheduleError("drive must sit at a fixed coupler frequency between ramps")
        if abs(self.rampUp.omegaEnd - self.rampDown.omegaStart) > 1e-12:
            raise ScheduleError("cycle must return to its starting coupler frequency")

    @classmethod
    def from_segments(cls, segments) -> "PulseSchedule":
        """Build from ``[ramp, drive, ramp]`` or ``[ramp, ramp]``; any other order is rejected."""
        segs = list(segments)
        kinds = [type(s).__name__ for s in segs]
        if kinds == ["RampEnvelope", "RampEnvelope"]:
            return cls(segs[0], None, segs[1])
        if kinds == ["RampEnvelope", "DriveSegment", "RampEnvelope"]:
            return cls(segs[0], segs[1], segs[2])
        raise ScheduleError(f"segments must be ramp, drive, ramp; got {kinds}")

    @classmethod
    def cycle(cls, ramp: RampEnvelope, drive: DriveSegment | None = None) -> "PulseSchedule":
        return cls(ramp, drive, ramp.reversed())

    @property
    def omegaCI(self) -> float:
        return self.rampDown.omegaStart

    @property
    def omegaCE(self) -> float:
        return self.rampDown.omegaEnd

    @property
    def duration(self) -> float:
        return self.rampDown.tau0 + (self.drive.tg if self.drive else 0.0) + self.rampUp.tau0

    def to_dict(self) -> dict:
        return {"rampDown": asdict(self.rampDown),
                "drive": None if self.drive is None else asdict(self.drive),
                "rampUp": asdict(self.rampUp)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "PulseSchedule":
        drive = data.get("drive")
        return cls(RampEnvelope(**data["rampDown"]),
                   None if drive is None else DriveSegment(**drive),
                   RampEnvelope(**data["rampUp"]))

    @classmethod
    def from_json(cls, text: str) -> "PulseSchedule":
        return cls.from_dict(json.loads(text))


def config_hash(obj) -> str:
    """Short SHA-256 of the canonical JSON form of ``obj``."""
    text = json.dumps(obj, sort_keys=True, default=_plain)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def _plain(v):
    if hasattr(v, "to_dict"):
        return v.to_dict()
    if hasattr(v, "__dataclass_fields__"):
        return asdict(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(type(v))


# ---------------------------------------------------------------------------
# Hamiltonians


class RampHamiltonian:
    """Lab-frame ``H(omega_c)`` (GHz) split into constant, coupler and coupling parts."""

    def __init__(self, system, trunc: TruncationSpec = DEFAULT_TRUNCATION):
        self.system = system
        self.trunc = trunc
        p = system.params if isinstance(system, Device) else system
        bare = p.replace(omegaC=1.0, g1c=0.0, g2c=0.0)
        self.Nc = number_operator(1, trunc)
        self.H_fixed = build_static_hamiltonian(bare, trunc) - self.Nc
        zero = build_static_hamiltonian(bare.replace(g12=0.0), trunc)
        self.C1 = (build_static_hamiltonian(bare.replace(g12=0.0, g1c=1.0), trunc) - zero)
        self.C2 = (build_static_hamiltonian(bare.replace(g12=0.0, g2c=1.0), trunc) - zero)

    def params_at(self, omega_c: float) -> CircuitParams:
        if isinstance(self.system, Device):
            return self.system.at(omega_c)
        return self.system.replace(omegaC=float(omega_c))

    def __call__(self, omega_c: float) -> np.ndarray:
        p = self.params_at(omega_c)
        return self.H_fixed + omega_c * self.Nc + p.g1c * self.C1 + p.g2c * self.C2


@dataclass
class DriveFrame:
    """Dressed, co-rotating frame at a fixed coupler frequency.

    ``H(s) = diag + s * linear - s^2 * quadratic`` with ``s`` the envelope
    fraction; basis columns are the dressed states ordered like the labels.
    """

    params: CircuitParams
    trunc: TruncationSpec
    omega_d: float
    Omega: float
    dressed: np.ndarray
    diag: np.ndarray
    linear: np.ndarray
    quadratic: np.ndarray
    excitations: np.ndarray
    zx: float

    def hamiltonian(self, s: float) -> np.ndarray:
        return np.diag(self.diag) + s * self.linear - s * s * self.quadratic


def _embed_block(block4: np.ndarray, transform, n: int) -> np.ndarray:
    out = np.zeros((n, n), dtype=complex)
    idx = np.array(transform.block)
    out[np.ix_(idx, idx)] = block4
    T = transform.unitary
    return T @ out @ T.conj().T


def drive_frame(params: CircuitParams, Omega: float,
                trunc: TruncationSpec = DEFAULT_TRUNCATION,
                omega_d: float | None = None, cancel: bool = True) -> DriveFrame:
    """Rotating-frame drive Hamiltonian with the ideal crosstalk cancellation tone."""
    H0 = build_static_hamiltonian(params, trunc)
    spec = diagonalize_exact(H0, trunc)
    if omega_d is None:
        omega_d = target_frequency(spec)
    N = trunc.excitations()
    V = spec.eigenvectors
    M = V.conj().T @ build_drive_operator(0, trunc) @ V
    mask = np.abs(N[:, None] - N[None, :]) == 1
    linear = 0.5 * Omega * 1e-3 * np.where(mask, M, 0.0).astype(complex)
    linear = 0.5 * (linear + linear.conj().T)
    quadratic = np.zeros_like(linear)
    zx = 0.0
    if Omega > 0:
        res = driven_coefficients(H0, Omega, trunc, spec, omega_d)
        zx = res.coefficients.zx
        if cancel:
            c = res.components
            lin = sum(c[k] * np.kron(PAULI[k[0]], PAULI[k[1]]) for k in DRIVE_CORRECTIONS)
            quad = c["IZ"] * np.kron(PAULI["I"], PAULI["Z"])
            n = H0.shape[0]
            linear = linear - _embed_block(lin, res.transform, n)
            quadratic = _embed_block(quad, res.transform, n)
            quadratic = 0.5 * (quadratic + quadratic.conj().T)
            linear = 0.5 * (linear + linear.conj().T)
    return DriveFrame(params, trunc, omega_d, Omega, V, spec.eigenvalues - omega_d * N,
                      linear, quadratic, N, zx)


# ---------------------------------------------------------------------------
# integrators

_G1 = 0.5 - math.sqrt(3) / 6
_G2 = 0.5 + math.sqrt(3) / 6
_C4 = math.sqrt(3) / 12


def magnus_step(H1: np.ndarray, H2: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order Magnus propagator from ``H`` (GHz) at the two Gauss points of a step."""
    K = (np.pi * dt) * (H1 + H2) - 1j * (_C4 * (TWO_PI * dt) ** 2) * (H2 @ H1 - H1 @ H2)
    w, V = np.linalg.eigh(K)
    return (V * np.exp(-1j * w)) @ V.conj().T


def _steps(duration: float, dt: float) -> tuple[int, float]:
    n = max(1, int(math.ceil(duration / dt - 1e-9)))
    return n, duration / n


def propagator(hamiltonian, duration: float, dt: float) -> np.ndarray:
    """Time-ordered propagator over ``[0, duration]`` for ``hamiltonian(t)``."""
    n, h = _steps(duration, dt)
    U = None
    for k in range(n):
        t = k * h
        step = magnus_step(hamiltonian(t + _G1 * h), hamiltonian(t + _G2 * h), h)
        U = step if U is None else step @ U
    return U


def lindblad_superoperator(collapse) -> sp.csr_matrix:
    """Dissipator acting on row-major ``vec(rho)``: ``sum L rho L^+ - {L^+ L, rho} / 2``."""
    ops = [np.asarray(L) for L in collapse]
    n = ops[0].shape[0]
    eye = sp.identity(n, format="csr")
    S = sp.csr_matrix((n * n, n * n), dtype=complex)
    for L in ops:
        Ls = sp.csr_matrix(L)
        LdL = sp.csr_matrix(L.conj().T @ L)
        S = S + sp.kron(Ls, Ls.conj()) - 0.5 * sp.kron(LdL, eye) - 0.5 * sp.kron(eye, LdL.T)
    return S.tocsr()


def _dissipate(S, rhos: np.ndarray, tau: float) -> np.ndarray:
    """``exp(tau S)`` to second order on a batch of density matrices."""
    shape = rhos.shape
    X = rhos.reshape(shape[0], -1).T
    SX = S @ X
    X = X + tau * SX + 0.5 * tau * tau * (S @ SX)
    return X.T.reshape(shape)


@contextlib.contextmanager
def step_refinement(factor: float = 2.0):
    """Divide every default time step and dissipation chunk by ``factor`` inside the block."""
    _REFINE.append(_REFINE[-1] * factor)
    try:
        yield
    finally:
        _REFINE.pop()


def evolve_batch(hamiltonian, duration: float, rhos: np.ndarray, dt: float,
                 dissipator=None, chunk: float | None = None) -> np.ndarray:
    """Evolve a batch of operators ``rho -> U rho U^+`` with optional Strang-split dissipation."""
    rhos = np.asarray(rhos, complex)
    chunk = chunk or DISSIPATION_CHUNK / _REFINE[-1]
    if dissipator is None:
        U = propagator(hamiltonian, duration, dt)
        return U @ rhos @ U.conj().T
    n_chunks, c = _steps(duration, chunk)
    for k in range(n_chunks):
        t0 = k * c
        U = propagator(lambda t: hamiltonian(t0 + t), c, dt)
        rhos = _dissipate(dissipator, rhos, 0.5 * c)
        rhos = U @ rhos @ U.conj().T
        rhos = _dissipate(dissipator, rhos, 0.5 * c)
    return rhos


# ---------------------------------------------------------------------------
# frames and collapse operators


def default_step(max_frequency: float) -> float:
    """Step resolving the fastest transition: ``1 / (20 f_max)`` ns."""
    return 1.0 / (20.0 * max_frequency * _REFINE[-1])


def lab_collapse(coherence: CoherenceSpec, trunc: TruncationSpec) -> list[np.ndarray]:
    ops = []
    for which, (g1, gphi) in zip((0, 2), coherence.rates()):
        if g1 > 0:
            ops.append(math.sqrt(g1) * annihilation(which, trunc))
        if gphi > 0:
            ops.append(math.sqrt(2 * gphi) * number_operator(which, trunc))
    return ops


def _frame_collapse(ops, frame: DriveFrame):
    """Collapse operators in the dressed rotating frame, keeping their co-rotating parts."""
    V, N = frame.dressed, frame.excitations
    out = []
    for L in ops:
        Ld = V.conj().T @ L @ V
        dn = N[:, None] - N[None, :]
        keep = dn == (0 if np.allclose(L, L.conj().T) else -1)
        out.append(np.where(keep, Ld, 0.0))
    return out


def ramp_hamiltonian(H_of: RampHamiltonian, ramp: RampEnvelope):
    return lambda t: H_of(float(ramp(t)))


def ramp_step(system, ramp: RampEnvelope) -> float:
    p = system.params if isinstance(system, Device) else system
    fmax = max(p.omega1, p.omega2, ramp.omegaStart, ramp.omegaEnd)
    return default_step(fmax)


def drive_step(frame: DriveFrame) -> float:
    comp = [frame.trunc.index(l) for l in COMPUTATIONAL_LABELS]
    single = frame.excitations <= 2
    fmax = max(np.abs(frame.diag[single]).max(), np.abs(frame.diag[comp]).max(), 0.05)
    return default_step(fmax)


# ---------------------------------------------------------------------------
# closed and open evolution


def evolve_closed(system, schedule, initial: np.ndarray,
                  trunc: TruncationSpec = DEFAULT_TRUNCATION,
                  dt: float | None = None, norm_tol: float = 1e-8) -> np.ndarray:
    """Lab-frame state after a ramp or a full schedule (bare basis in and out).

    For a schedule with a drive, the drive segment runs in its co-rotating
    frame and the state is mapped back with the frame phase at its end.
    """
    psi = np.asarray(initial, complex)
    out = schedule_propagator(system, schedule, trunc, dt) @ psi
    drift = abs(np.linalg.norm(out) - np.linalg.norm(psi))
    if drift > norm_tol:
        raise ArithmeticError(f"norm drift {drift:.2e} exceeds {norm_tol:.0e}; reduce dt")
    return out


def evolve_open(system, schedule, coherence: CoherenceSpec, initial: np.ndarray,
                trunc: TruncationSpec = DEFAULT_TRUNCATION,
                dt: float | None = None) -> np.ndarray:
    """Lab-frame density operator after a ramp or a full schedule with qubit T1 and T2."""
    rho = np.asarray(initial, complex)
    return _evolve_schedule(system, schedule, rho[None], coherence, trunc, dt)[0]


def _as_schedule(schedule):
    if isinstance(schedule, RampEnvelope):
        return [schedule]
    if isinstance(schedule, PulseSchedule):
        segs = [schedule.rampDown]
        if schedule.drive is not None:
            segs.append(schedule.drive)
        segs.append(schedule.rampUp)
        return segs
    raise ScheduleError("schedule must be a RampEnvelope or PulseSchedule")


def schedule_propagator(system, schedule, trunc: TruncationSpec = DEFAULT_TRUNCATION,
                        dt: float | None = None) -> np.ndarray:
    """Lab-frame propagator (bare basis) of a ramp or full schedule."""
    H_of = RampHamiltonian(system, trunc)
    U = np.eye(trunc.dimension, dtype=complex)
    for seg in _as_schedule(schedule):
        if isinstance(seg, RampEnvelope):
            h = dt or ramp_step(system, seg)
            U = propagator(ramp_hamiltonian(H_of, seg), seg.tau0, h) @ U
        elif seg.tg > 0:
            frame = drive_frame(H_of.params_at(schedule.omegaCE), seg.Omega, trunc)
            h = dt or drive_step(frame)
            Ur = propagator(lambda t: frame.hamiltonian(_sin2_scalar(seg, t)), seg.tg, h)
            phase = np.exp(-1j * TWO_PI * frame.omega_d * frame.excitations * seg.tg)
            V = frame.dressed
            U = V @ (phase[:, None] * Ur) @ V.conj().T @ U
    return U


def _evolve_schedule(system, schedule, rhos, coherence, trunc, dt):
    if coherence is None:
        U = schedule_propagator(system, schedule, trunc, dt)
        return U @ rhos @ U.conj().T
    segs = _as_schedule(schedule)
    H_of = RampHamiltonian(system, trunc)
    lab_ops = lab_collapse(coherence, trunc) if coherence is not None else []
    lab_diss = lindblad_superoperator(lab_ops) if lab_ops else None
    for seg in segs:
        if isinstance(seg, RampEnvelope):
            h = dt or ramp_step(system, seg)
            rhos = evolve_batch(ramp_hamiltonian(H_of, seg), seg.tau0, rhos, h, lab_diss)
        else:
            frame = drive_frame(H_of.params_at(schedule.omegaCE), seg.Omega, trunc)
            rhos = _drive_in_frame(frame, seg, rhos, coherence, dt, lab_ops)
    return rhos


def _drive_in_frame(frame: DriveFrame, seg: DriveSegment, rhos, coherence, dt, lab_ops):
    V = frame.dressed
    r = V.conj().T @ rhos @ V
    r = run_drive(frame, seg, r, coherence, dt, lab_ops)
    phase = np.exp(-1j * TWO_PI * frame.omega_d * frame.excitations * seg.tg)
    r = (phase[:, None] * r) * phase.conj()[None, :]
    return V @ r @ V.conj().T


def run_drive(frame: DriveFrame, seg: DriveSegment, rhos, coherence=None, dt=None,
              lab_ops=None):
    """Evolve operators given in the frame's dressed basis through the drive segment."""
    if seg.tg == 0:
        return rhos
    diss = None
    if coherence is not None:
        ops = lab_ops if lab_ops is not None else lab_collapse(coherence, frame.trunc)
        if ops:
            diss = lindblad_superoperator(_frame_collapse(ops, frame))
    h = dt or drive_step(frame)
    return evolve_batch(lambda t: frame.hamiltonian(_sin2_scalar(seg, t)), seg.tg, rhos, h, diss)


# ---------------------------------------------------------------------------
# fidelities


def zx90(sign: float = 1.0) -> np.ndarray:
    ZX = np.kron(PAULI["Z"], PAULI["X"])
    return np.cos(np.pi / 4) * np.eye(4) - 1j * np.sign(sign or 1.0) * np.sin(np.pi / 4) * ZX


def _zphase(phi1, phi2):
    z1 = np.array([1, 1, -1, -1])
    z2 = np.array([1, -1, 1, -1])
    return np.exp(-0.5j * (phi1 * z1 + phi2 * z2))


def process_fidelity(R: np.ndarray, U: np.ndarray) -> float:
    """``(1/d^2) sum_ij <i|U^+ E(|i><j|) U|j>`` for ``R[i, j] = E(|i><j|)`` on the subspace."""
    d = U.shape[0]
    val = np.einsum("ai,ijab,bj->", U.conj(), R, U)
    return float(np.real(val)) / d**2


def retained_population(R: np.ndarray) -> float:
    d = R.shape[0]
    return float(np.real(sum(np.trace(R[i, i]) for i in range(d)))) / d


def average_gate_fidelity(R: np.ndarray, U: np.ndarray) -> float:
    """Average fidelity of a possibly leaky map against unitary ``U``."""
    d = U.shape[0]
    return (d * process_fidelity(R, U) + retained_population(R)) / (d + 1)


@dataclass(frozen=True)
class FrameFit:
    fidelity: float
    phases: tuple
    ideal: np.ndarray


def best_virtual_z(R: np.ndarray, target: np.ndarray, pre_target: bool = True,
                   starts: int = 4) -> FrameFit:
    """Maximize average fidelity over post Z phases on both qubits (and a pre Z on the target).

    The pre-gate target phase stands for choosing the drive phase in the
    target's frame; a pre-gate control phase commutes with ZX and is
    redundant with the post phase.
    """
    def ideal(x):
        pre = _zphase(0.0, x[2]) if pre_target else np.ones(4)
        return (_zphase(x[0], x[1])[:, None] * target) * pre[None, :]

    def loss(x):
        return -average_gate_fidelity(R, ideal(x))

    n = 3 if pre_target else 2
    grid = np.linspace(0, 2 * np.pi, starts, endpoint=False)
    best = None
    seeds = np.array(np.meshgrid(*[grid] * n, indexing="ij")).reshape(n, -1).T
    scores = [loss(np.r_[s, np.zeros(3 - n)]) for s in seeds]
    for i in np.argsort(scores)[:3]:
        x0 = np.r_[seeds[i], np.zeros(3 - n)]
        res = minimize(lambda y: loss(np.r_[y, np.zeros(3 - n)]), x0[:n], method="Nelder-Mead",
                       options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": 4000})
        if best is None or res.fun < best.fun:
            best = res
    x = np.r_[best.x, np.zeros(3 - n)]
    return FrameFit(-best.fun, tuple(float(v) for v in x), ideal(x))


def coherence_floor(duration: float, coherence: CoherenceSpec) -> float:
    """Average-gate infidelity of two independent qubits idling for ``duration`` ns."""
    f = 1.0
    for g1, gphi in coherence.rates():
        g2 = gphi + 0.5 * g1
        f *= 0.25 * (1 + math.exp(-g1 * duration) + 2 * math.exp(-g2 * duration))
    return 1 - (4 * f + 1) / 5


# ---------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class GateResult:
    """Fidelities of one simulated operation against its ideal computational action."""

    stateFidelities: dict
    avgGateFidelity: float
    leakage: float
    idleToIdleError: float
    phases: tuple = ()
    duration: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stateFidelities"] = {"".join(map(str, k)) if isinstance(k, tuple) else k: v
                                for k, v in self.stateFidelities.items()}
        return d


def _basis_ops(P: np.ndarray) -> np.ndarray:
    """``P |i><j| P^+`` for the four columns of ``P`` -> (16, n, n)."""
    cols = P.T
    return np.einsum("ia,jb->ijab", cols, cols.conj()).reshape(16, P.shape[0], P.shape[0])


def _project(rhos: np.ndarray, P: np.ndarray) -> np.ndarray:
    return np.einsum("ai,kab,bj->kij", P.conj(), rhos, P).reshape(4, 4, 4, 4)


def _state_fidelities(R: np.ndarray, U: np.ndarray) -> dict:
    out = {}
    for i, lab in enumerate(("00", "01", "10", "11")):
        psi = U[:, i]
        out[lab] = float(np.real(psi.conj() @ R[i, i] @ psi))
    return out


def _result(R, target, duration, pre_target=True) -> GateResult:
    fit = best_virtual_z(R, target, pre_target)
    leak = 1 - retained_population(R)
    return GateResult(_state_fidelities(R, fit.ideal), fit.fidelity, max(leak, 0.0),
                      1 - fit.fidelity, fit.phases, duration)


def dressed_computational(params: CircuitParams,
                          trunc: TruncationSpec = DEFAULT_TRUNCATION) -> np.ndarray:
    spec = diagonalize_exact(build_static_hamiltonian(params, trunc), trunc)
    return np.column_stack([spec.state(l) for l in COMPUTATIONAL_LABELS])


def ramp_fidelities(system, ramp: RampEnvelope, trunc: TruncationSpec = DEFAULT_TRUNCATION,
                    dt: float | None = None, round_trip: bool = False) -> dict:
    """Population kept by each dressed computational state over the ramp (and back).

    Returns ``{"00": F, "01": F, "10": F, "11": F}``; dressed states are
    those at the ramp's start and end frequencies respectively.
    """
    H_of = RampHamiltonian(system, trunc)
    h = dt or ramp_step(system, ramp)
    U = propagator(ramp_hamiltonian(H_of, ramp), ramp.tau0, h)
    end = ramp.omegaEnd
    if round_trip:
        back = ramp.reversed()
        U = propagator(ramp_hamiltonian(H_of, back), back.tau0, h) @ U
        end = ramp.omegaStart
    P0 = dressed_computational(H_of.params_at(ramp.omegaStart), trunc)
    P1 = dressed_computational(H_of.params_at(end), trunc)
    amp = np.einsum("ai,ab,bi->i", P1.conj(), U, P0)
    return {lab: float(abs(a) ** 2) for lab, a in zip(("00", "01", "10", "11"), amp)}


# ---------------------------------------------------------------------------
# ZX90 calibration and error curves


@dataclass
class ZXTable:
    """ZX rate (MHz) against drive amplitude (MHz) at a fixed coupler frequency."""

    Omega: np.ndarray
    zx: np.ndarray
    zz: np.ndarray
    components: dict = field(default_factory=dict)

    @classmethod
    def build(cls, params: CircuitParams, Omega_max: float = 150.0, step: float = 2.5,
              trunc: TruncationSpec = DEFAULT_TRUNCATION) -> "ZXTable":
        """Sample up to ``Omega_max``, stopping at a labeling failure or at the
        first divergence-type ZZ sign flip (a drive-induced resonance)."""
        H0 = build_static_hamiltonian(params, trunc)
        spec = diagonalize_exact(H0, trunc)
        Om, zx, zz, comps = [], [], [], []
        for O in np.arange(0.0, Omega_max + step / 2, step):
            try:
                res = driven_coefficients(H0, O, trunc, spec)
            except LabelingError:
                break
            z = res.coefficients.zz
            if zz and z * zz[-1] < 0 and min(abs(z), abs(zz[-1])) > TYPE_II_THRESHOLD_KHZ:
                break
            Om.append(O)
            zx.append(res.coefficients.zx)
            zz.append(res.coefficients.zz)
            comps.append(res.components)
        names = comps[0].keys() if comps else ()
        return cls(np.array(Om), np.array(zx), np.array(zz),
                   {k: np.array([c[k] for c in comps]) for k in names})

    @property
    def max_amplitude(self) -> float:
        return float(self.Omega[-1])

    def rate(self, Omega):
        return CubicSpline(self.Omega, self.zx)(Omega)

    def area(self, Omega: float, rise: float, fall: float, flat: float) -> float:
        """Signed ZX area (MHz ns) of a round-square pulse."""
        x = np.linspace(0, 1, 401)
        edge = np.trapezoid(self.rate(Omega * _sin2_edge(x)), x)
        return float(edge * (rise + fall) + self.rate(Omega) * flat)


def calibrate_zx90(table: ZXTable, Omega: float, rise: float = 20.0,
                   fall: float = 20.0) -> DriveSegment:
    """Flat top giving a pi/2 ZX rotation at amplitude ``Omega``, counting the edges' area."""
    edges = abs(table.area(Omega, rise, fall, 0.0))
    rate = abs(float(table.rate(Omega)))
    flat = (ZX90_AREA - edges) / rate if rate > 0 else math.inf
    if -1e-9 < flat < 0:
        flat = 0.0
    if flat < 0 or not math.isfinite(flat):
        raise ScheduleError(f"no ZX90 flat top at Omega = {Omega} MHz")
    return DriveSegment(float(Omega), float(flat), rise, fall)


def max_zx90_amplitude(table: ZXTable, rise: float = 20.0, fall: float = 20.0) -> float:
    """Largest amplitude still leaving a non-negative ZX90 flat top."""
    hi = table.max_amplitude

    def spare(O):
        return ZX90_AREA - abs(table.area(O, rise, fall, 0.0))

    if spare(hi) >= 0:
        return hi
    return float(brentq(spare, table.Omega[1], hi, xtol=1e-9))


def _amplitude_grid(table: ZXTable, rise: float, fall: float, step: float = 0.25) -> np.ndarray:
    hi = max_zx90_amplitude(table, rise, fall)
    return np.append(np.arange(step, hi, step), hi)


def _calibrated_length(table: ZXTable, Omega: float, rise: float, fall: float) -> float:
    try:
        return calibrate_zx90(table, Omega, rise, fall).tg
    except ScheduleError:
        return math.inf


def amplitude_for_gate_length(table: ZXTable, tg: float, rise: float = 20.0,
                              fall: float = 20.0) -> float | None:
    """Smallest drive amplitude whose calibrated ZX90 lasts ``tg`` ns; ``None`` below the cutoff."""
    def excess(O):
        return _calibrated_length(table, O, rise, fall) - tg

    grid = _amplitude_grid(table, rise, fall)
    prev = None
    for O in grid:
        e = excess(O)
        if e <= 0:
            if prev is None:
                return float(O) if e == 0 else None
            return float(brentq(excess, prev, O, xtol=1e-6))
        prev = O
    return None


EFFECTIVE_DROPPED = ("II",) + DRIVE_CORRECTIONS + ("IZ",)


def effective_drive_gate(table: ZXTable, segment: DriveSegment,
                         coherence: CoherenceSpec | None = None,
                         dt: float | None = None) -> GateResult:
    """ZX90 quality in the adiabatic block frame: two-qubit evolution under the
    least-action computational Hamiltonian at the instantaneous amplitude.

    Edge non-adiabaticity and leakage are absent by construction; the
    cancellation tone and drive-frequency calibration remove IX, IY, ZY, IZ.
    """
    keys = [k for k, v in table.components.items()
            if k not in EFFECTIVE_DROPPED and np.max(np.abs(v)) > 1e-15]
    spline = CubicSpline(table.Omega, np.column_stack([table.components[k] for k in keys]))
    mats = np.array([np.kron(PAULI[k[0]], PAULI[k[1]]) for k in keys])

    def H(t):
        return np.tensordot(spline(segment.Omega * _sin2_scalar(segment, t)), mats, 1)

    rhos = np.einsum("ia,jb->ijab", np.eye(4), np.eye(4)).reshape(16, 4, 4).astype(complex)
    diss = None
    if coherence is not None:
        sm = np.array([[0, 1], [0, 0]], dtype=complex)
        n = np.diag([0.0, 1.0]).astype(complex)
        ops = []
        for (g1, gphi), embed in zip(coherence.rates(),
                                     (lambda A: np.kron(A, np.eye(2)),
                                      lambda A: np.kron(np.eye(2), A))):
            if g1 > 0:
                ops.append(math.sqrt(g1) * embed(sm))
            if gphi > 0:
                ops.append(math.sqrt(2 * gphi) * embed(n))
        if ops:
            diss = lindblad_superoperator(ops)
    rhos = evolve_batch(H, segment.tg, rhos, dt or EFFECTIVE_STEP / _REFINE[-1], diss)
    R = rhos.reshape(4, 4, 4, 4)
    return _result(R, zx90(float(table.rate(segment.Omega))), segment.tg)


def drive_gate(params: CircuitParams, segment: DriveSegment,
               coherence: CoherenceSpec | None = None,
               trunc: TruncationSpec = DEFAULT_TRUNCATION,
               dt: float | None = None) -> GateResult:
    """ZX90 quality of a drive segment alone, in the dressed frame at the entangling point."""
    frame = drive_frame(params, segment.Omega, trunc)
    P = np.zeros((trunc.dimension, 4), dtype=complex)
    for k, lab in enumerate(COMPUTATIONAL_LABELS):
        P[trunc.index(lab), k] = 1.0
    rhos = run_drive(frame, segment, _basis_ops(P), coherence, dt)
    return _result(_project(rhos, P), zx90(frame.zx), segment.tg)


@dataclass
class ErrorCurve:
    tg: np.ndarray
    Omega: np.ndarray
    error: np.ndarray
    feasible: np.ndarray

    def minimum(self) -> tuple[float, float]:
        ok = self.feasible & np.isfinite(self.error)
        i = np.flatnonzero(ok)[np.argmin(self.error[ok])]
        return float(self.tg[i]), float(self.error[i])

    def local_minima(self) -> list[int]:
        ok = np.flatnonzero(self.feasible & np.isfinite(self.error))
        e = self.error[ok]
        return [int(ok[i]) for i in range(1, len(e) - 1) if e[i] < e[i - 1] and e[i] < e[i + 1]]

    def to_csv(self) -> str:
        lines = ["tg_ns,Omega_MHz,error,feasible"]
        for t, O, e, f in zip(self.tg, self.Omega, self.error, self.feasible):
            lines.append(f"{_num(t, 10)},{_num(O, 9) if f else 'nan'},"
                         f"{_num(e, 12) if f else 'nan'},{int(f)}")
        return "\n".join(lines) + "\n"


def _num(v, digits: int) -> str:
    v = float(v)
    return repr(round(v, digits)) if math.isfinite(v) else "nan"


def gate_length_cutoff(table: ZXTable, rise: float = 20.0, fall: float = 20.0) -> float:
    """Shortest calibrated ZX90 the table supports (ns)."""
    grid = _amplitude_grid(table, rise, fall)
    lengths = np.array([_calibrated_length(table, O, rise, fall) for O in grid])
    i = int(np.argmin(lengths))
    if 0 < i < len(grid) - 1:
        res = minimize_scalar(lambda O: _calibrated_length(table, O, rise, fall),
                              bounds=(grid[i - 1], grid[i + 1]), method="bounded",
                              options={"xatol": 1e-6})
        return float(min(res.fun, lengths[i]))
    return float(lengths[i])


def default_tg_grid(table: ZXTable, tg_max: float = 240.0, fine: float = 20.0,
                    rise: float = 20.0, fall: float = 20.0) -> np.ndarray:
    """Gate lengths from the cutoff to ``tg_max``: 1 ns steps over the first
    ``fine`` ns, 5 ns steps after."""
    start = gate_length_cutoff(table, rise, fall) + 0.05
    near = np.arange(start, start + fine, 1.0)
    far = np.arange(5 * math.ceil((start + fine) / 5), tg_max + 2.5, 5.0)
    return np.round(np.concatenate([near, far]), 3)


GATE_MODELS = ("effective", "full")


def zx90_gate_error(system, omegaCE: float, coherence: CoherenceSpec | None, tg_values=None,
                    trunc: TruncationSpec = DEFAULT_TRUNCATION, rise: float = 20.0,
                    fall: float = 20.0, dt: float | None = None,
                    table: ZXTable | None = None, model: str = "effective",
                    Omega_max: float = 200.0) -> ErrorCurve:
    """Gate error of the calibrated ZX90 drive against gate length.

    At each ``tg`` the amplitude is set so the calibrated pulse lasts ``tg``;
    gate lengths needing more amplitude than the ZX table reaches are marked
    infeasible. ``model="effective"`` evolves the two-qubit block frame
    (adiabatic edges); ``"full"`` runs every transmon level in the dressed frame.
    """
    if model not in GATE_MODELS:
        raise ValueError(f"model must be one of {GATE_MODELS}, got {model!r}")
    params = system.at(omegaCE) if isinstance(system, Device) else system.replace(omegaC=omegaCE)
    table = table or ZXTable.build(params, Omega_max=Omega_max, trunc=trunc)
    if tg_values is None:
        tg_values = default_tg_grid(table, rise=rise, fall=fall)
    tg_values = np.asarray(tg_values, float)
    Om = np.full(len(tg_values), np.nan)
    err = np.full(len(tg_values), np.nan)
    ok = np.zeros(len(tg_values), dtype=bool)
    for i, tg in enumerate(tg_values):
        O = amplitude_for_gate_length(table, tg, rise, fall)
        if O is None:
            continue
        seg = calibrate_zx90(table, O, rise, fall)
        try:
            if model == "effective":
                res = effective_drive_gate(table, seg, coherence, dt)
            else:
                res = drive_gate(params, seg, coherence, trunc, dt)
        except LabelingError:
            continue
        Om[i], err[i], ok[i] = O, res.idleToIdleError, True
    return ErrorCurve(tg_values, Om, err, ok)


def full_pf_cycle(system, schedule: PulseSchedule, coherence: CoherenceSpec | None = None,
                  trunc: TruncationSpec = DEFAULT_TRUNCATION,
                  dt: float | None = None, zx_sign: float | None = None) -> GateResult:
    """Idle -> entangled -> idle simulation scored against ZX90 (identity if no drive)."""
    if not isinstance(schedule, PulseSchedule):
        raise ScheduleError("full cycle needs a PulseSchedule (ramp, drive, ramp)")
    H_of = RampHamiltonian(system, trunc)
    P = dressed_computational(H_of.params_at(schedule.omegaCI), trunc)
    rhos = _evolve_schedule(system, schedule, _basis_ops(P), coherence, trunc, dt)
    R = _project(rhos, P)
    if schedule.drive is None or schedule.drive.Omega == 0:
        target = np.eye(4, dtype=complex)
    else:
        if zx_sign is None:
            zx_sign = drive_frame(H_of.params_at(schedule.omegaCE), schedule.drive.Omega,
                                  trunc).zx
        target = zx90(zx_sign)
    return _result(R, target, schedule.duration)


@dataclass
class CycleScan:
    tg: np.ndarray
    tau0: np.ndarray
    error: np.ndarray
    best: PulseSchedule
    result: GateResult

    def to_csv(self) -> str:
        lines = ["tg_ns,tau0_ns,idle_to_idle_error"]
        lines += [f"{_num(a, 10)},{_num(b, 10)},{_num(e, 12)}"
                  for a, b, e in zip(self.tg, self.tau0, self.error)]
        return "\n".join(lines) + "\n"


def cycle_at_duration(system, total: float, omegaCI: float, omegaCE: float,
                      coherence: CoherenceSpec | None, tg_values,
                      shape: str = "tanh", trunc: TruncationSpec = DEFAULT_TRUNCATION,
                      table: ZXTable | None = None, dt: float | None = None) -> CycleScan:
    """Split a fixed cycle length between ramps and drive; keep the best split.

    For each drive length the two ramps share the remaining time equally.
    """
    params = system.at(omegaCE) if isinstance(system, Device) else system.replace(omegaC=omegaCE)
    table = table or ZXTable.build(params, trunc=trunc)
    rows, best = [], None
    for tg in np.asarray(tg_values, float):
        O = amplitude_for_gate_length(table, tg)
        tau0 = (total - tg) / 2
        if O is None or tau0 <= 0:
            continue
        seg = calibrate_zx90(table, O)
        sched = PulseSchedule.cycle(RampEnvelope(shape, (total - seg.tg) / 2, omegaCI, omegaCE), seg)
        res = full_pf_cycle(system, sched, coherence, trunc, dt)
        rows.append((float(seg.tg), float(sched.rampDown.tau0), float(res.idleToIdleError)))
        if best is None or res.idleToIdleError < best[1].idleToIdleError:
            best = (sched, res)
    if best is None:
        raise ScheduleError(f"no feasible split of a {total} ns cycle")
    a = np.array(rows)
    return CycleScan(a[:, 0], a[:, 1], a[:, 2], *best)
