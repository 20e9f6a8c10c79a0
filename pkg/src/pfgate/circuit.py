"""Device parameters and truncated multilevel Hamiltonians.

Two fixed-frequency qubits Q1, Q2 coupled directly and through a tunable
coupler C.  States are labelled ``(q1, c, q2)`` and laid out in
lexicographic order, i.e. ``index = (q1 * nc + c) * n2 + q2``.

Unit conventions (inputs and outputs)
-------------------------------------
* frequencies ``omega*`` in GHz (value / 2pi)
* anharmonicities ``delta*`` and couplings ``g*`` in MHz (value / 2pi)
* operators returned by the builders are in GHz (value / 2pi); time
  evolution multiplies by ``2 pi`` with time in ns.
"""

from __future__ import annotations

import dataclasses
import itertools
import json
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

MAX_DIMENSION = 10_000

SUBSYSTEMS = ("q1", "c", "q2")


class CircuitError(ValueError):
    """Invalid device parameters, truncation or drive specification."""


@dataclass(frozen=True)
class CircuitParams:
    omega1: float
    omega2: float
    omegaC: float
    delta1: float
    delta2: float
    deltaC: float
    g12: float
    g1c: float
    g2c: float

    def __post_init__(self):
        for name in ("omega1", "omega2", "omegaC"):
            val = getattr(self, name)
            if not math.isfinite(val) or val <= 0:
                raise CircuitError(f"{name} must be finite and positive, got {val}")
        for name in ("delta1", "delta2", "deltaC", "g12", "g1c", "g2c"):
            val = getattr(self, name)
            if not math.isfinite(val):
                raise CircuitError(f"{name} must be finite, got {val}")

    def replace(self, **changes) -> "CircuitParams":
        return dataclasses.replace(self, **changes)

    @property
    def detuning12(self) -> float:
        """Qubit-qubit detuning omega1 - omega2 in GHz."""
        return self.omega1 - self.omega2

    def frequencies(self) -> tuple[float, float, float]:
        return (self.omega1, self.omegaC, self.omega2)

    def anharmonicities_ghz(self) -> tuple[float, float, float]:
        return (self.delta1 * 1e-3, self.deltaC * 1e-3, self.delta2 * 1e-3)


@dataclass(frozen=True)
class CapacitanceModel:
    """Dimensionless capacitance ratios fixing frequency-dependent couplings.

    ``g_ic = alpha_i * sqrt(omega_i * omega_c)`` and
    ``g12 = alpha12 * sqrt(omega1 * omega2)``.
    """

    alpha1: float
    alpha2: float
    alpha12: float

    def __post_init__(self):
        for name in ("alpha1", "alpha2"):
            val = getattr(self, name)
            if not (0 <= val < 1):
                raise CircuitError(f"{name} must lie in [0, 1), got {val}")
        if not (0 <= self.alpha12 < 1):
            raise CircuitError(f"alpha12 must lie in [0, 1), got {self.alpha12}")

    @property
    def has_idle_solution(self) -> bool:
        return self.alpha12 > 0 and 2 * self.alpha1 * self.alpha2 / self.alpha12 < 1

    @classmethod
    def from_couplings(cls, params: CircuitParams, omega_ref: float) -> "CapacitanceModel":
        """Ratios reproducing ``params``' couplings with the coupler at ``omega_ref`` GHz."""
        gq = 1e-3
        return cls(
            alpha1=params.g1c * gq / math.sqrt(params.omega1 * omega_ref),
            alpha2=params.g2c * gq / math.sqrt(params.omega2 * omega_ref),
            alpha12=params.g12 * gq / math.sqrt(params.omega1 * params.omega2),
        )


@dataclass(frozen=True)
class TruncationSpec:
    n1: int = 3
    nc: int = 3
    n2: int = 3

    def __post_init__(self):
        for name in ("n1", "nc", "n2"):
            val = getattr(self, name)
            if int(val) != val or val < 3:
                raise CircuitError(f"{name} must be an integer >= 3, got {val}")
        if self.dimension > MAX_DIMENSION:
            raise CircuitError(
                f"Hilbert dimension {self.dimension} exceeds cap {MAX_DIMENSION}")

    @property
    def levels(self) -> tuple[int, int, int]:
        return (self.n1, self.nc, self.n2)

    @property
    def dimension(self) -> int:
        return self.n1 * self.nc * self.n2

    @classmethod
    def uniform(cls, n: int) -> "TruncationSpec":
        return cls(n, n, n)

    def labels(self) -> list[tuple[int, int, int]]:
        """Bare labels in basis order."""
        return list(itertools.product(range(self.n1), range(self.nc), range(self.n2)))

    def index(self, label) -> int:
        q1, c, q2 = label
        if not (0 <= q1 < self.n1 and 0 <= c < self.nc and 0 <= q2 < self.n2):
            raise CircuitError(f"label {label} outside truncation {self.levels}")
        return (q1 * self.nc + c) * self.n2 + q2

    def excitations(self) -> np.ndarray:
        """Total bare excitation number of each basis state."""
        return np.array([sum(lab) for lab in self.labels()], dtype=int)


DEFAULT_TRUNCATION = TruncationSpec(3, 3, 3)

# Computational states |q1 q2> with the coupler in its ground state, ordered 00, 01, 10, 11.
COMPUTATIONAL_LABELS = ((0, 0, 0), (0, 0, 1), (1, 0, 0), (1, 0, 1))


@dataclass(frozen=True)
class DriveSpec:
    Omega: float
    omegaD: float
    drivenSubsystem: int = 0

    def __post_init__(self):
        if not math.isfinite(self.Omega) or self.Omega < 0:
            raise CircuitError(f"Omega must be finite and >= 0, got {self.Omega}")
        if not math.isfinite(self.omegaD) or self.omegaD <= 0:
            raise CircuitError(f"omegaD must be finite and positive, got {self.omegaD}")
        if self.drivenSubsystem not in (0, 1, 2):
            raise CircuitError(f"drivenSubsystem must be 0, 1 or 2, got {self.drivenSubsystem}")


def bare_energies(omega: float, delta: float, n: int) -> np.ndarray:
    """Duffing ladder E(k) = k omega + k (k - 1) delta / 2, in GHz (delta in GHz)."""
    k = np.arange(n, dtype=float)
    return k * omega + 0.5 * k * (k - 1) * delta


def _ladder(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), 1)


def _embed(op: np.ndarray, which: int, levels) -> np.ndarray:
    mats = [np.eye(n) for n in levels]
    mats[which] = op
    return np.kron(np.kron(mats[0], mats[1]), mats[2])


def annihilation(which: int, trunc: TruncationSpec = DEFAULT_TRUNCATION) -> np.ndarray:
    """Annihilation operator of subsystem ``which`` (0=Q1, 1=C, 2=Q2) on the full space."""
    return _embed(_ladder(trunc.levels[which]), which, trunc.levels)


def number_operator(which: int, trunc: TruncationSpec = DEFAULT_TRUNCATION) -> np.ndarray:
    n = trunc.levels[which]
    return _embed(np.diag(np.arange(n, dtype=float)), which, trunc.levels)


def build_static_hamiltonian(params: CircuitParams,
                             trunc: TruncationSpec = DEFAULT_TRUNCATION,
                             counter_rotating: bool = True) -> np.ndarray:
    """Lab-frame circuit Hamiltonian in GHz.

    Diagonal Duffing energies plus ``g_ij (a_i^+ + a_i)(a_j^+ + a_j)`` for
    every pair.  ``counter_rotating=False`` keeps only the exchange part
    ``g_ij (a_i^+ a_j + a_i a_j^+)``.
    """
    levels = trunc.levels
    freqs = params.frequencies()
    anh = params.anharmonicities_ghz()
    diag = np.zeros(trunc.dimension)
    for which in range(3):
        e = bare_energies(freqs[which], anh[which], levels[which])
        diag = diag + _embed(np.diag(e), which, levels).diagonal()
    H = np.diag(diag)
    a = [_embed(_ladder(n), k, levels) for k, n in enumerate(levels)]
    for (i, j), g in (((0, 1), params.g1c), ((1, 2), params.g2c), ((0, 2), params.g12)):
        if not g:
            continue
        if counter_rotating:
            term = (a[i] + a[i].T) @ (a[j] + a[j].T)
        else:
            term = a[i].T @ a[j] + a[j].T @ a[i]
        H += g * 1e-3 * term
    H = 0.5 * (H + H.T)
    return H


def build_drive_operator(spec: DriveSpec | int = 0,
                         trunc: TruncationSpec = DEFAULT_TRUNCATION) -> np.ndarray:
    """Charge-like ladder operator ``a + a^+`` of the driven subsystem (no amplitude)."""
    which = spec.drivenSubsystem if isinstance(spec, DriveSpec) else int(spec)
    if which not in (0, 1, 2):
        raise CircuitError(f"invalid driven subsystem {which}")
    a = annihilation(which, trunc)
    return a + a.T


def couplings_from_capacitance(model: CapacitanceModel, params: CircuitParams) -> CircuitParams:
    """Recompute g1c, g2c, g12 (MHz) from capacitance ratios at the current frequencies."""
    omega_c = params.omegaC
    return params.replace(
        g1c=1e3 * model.alpha1 * math.sqrt(params.omega1 * omega_c),
        g2c=1e3 * model.alpha2 * math.sqrt(params.omega2 * omega_c),
        g12=1e3 * model.alpha12 * math.sqrt(params.omega1 * params.omega2),
    )


@dataclass(frozen=True)
class Device:
    """Circuit parameters plus the coupler frequency at which their couplings hold.

    With ``coupling_reference`` set, the couplings are frequency dependent
    through the capacitance model fitted at that coupler frequency; with
    ``None`` they stay fixed as the coupler is tuned.
    """

    params: CircuitParams
    coupling_reference: float | None = None
    name: str = ""

    @property
    def capacitance(self) -> CapacitanceModel | None:
        if self.coupling_reference is None:
            return None
        return CapacitanceModel.from_couplings(self.params, self.coupling_reference)

    def at(self, omega_c: float) -> CircuitParams:
        p = self.params.replace(omegaC=float(omega_c))
        cap = self.capacitance
        if cap is not None:
            p = couplings_from_capacitance(cap, p)
        return p

    def replace(self, **changes) -> "Device":
        return dataclasses.replace(self, params=self.params.replace(**changes))


# Coupler frequency at which the preset couplings g1c = g2c = 95 MHz hold.
REFERENCE_COUPLER_FREQUENCY = 4.8


def _preset_path(n: int):
    return resources.files("pfgate") / "devices" / f"device{n}.json"


def load_device_file(path) -> Device:
    with open(path) as fh:
        data = json.load(fh)
    return device_from_dict(data)


def device_from_dict(data: dict) -> Device:
    known = {"name", "omega1_GHz", "omega2_GHz", "omegaC_GHz", "delta1_MHz", "delta2_MHz",
             "deltaC_MHz", "g12_MHz", "g1c_MHz", "g2c_MHz", "coupling_reference_GHz",
             "comment"}
    extra = set(data) - known
    if extra:
        raise CircuitError(f"unknown device keys: {sorted(extra)}")
    missing = [k for k in ("omega1_GHz", "omega2_GHz", "delta1_MHz", "delta2_MHz",
                           "deltaC_MHz", "g12_MHz", "g1c_MHz", "g2c_MHz") if k not in data]
    if missing:
        raise CircuitError(f"missing device keys: {missing}")
    params = CircuitParams(
        omega1=data["omega1_GHz"], omega2=data["omega2_GHz"],
        omegaC=data.get("omegaC_GHz", REFERENCE_COUPLER_FREQUENCY),
        delta1=data["delta1_MHz"], delta2=data["delta2_MHz"], deltaC=data["deltaC_MHz"],
        g12=data["g12_MHz"], g1c=data["g1c_MHz"], g2c=data["g2c_MHz"],
    )
    return Device(params=params, coupling_reference=data.get("coupling_reference_GHz"),
                  name=data.get("name", ""))


def load_preset(n: int) -> Device:
    """Device ``n`` (1-6) of the six benchmark circuits."""
    if n not in range(1, 7):
        raise CircuitError(f"device preset must be 1..6, got {n}")
    with _preset_path(n).open() as fh:
        return device_from_dict(json.load(fh))


def presets() -> dict[int, Device]:
    return {n: load_preset(n) for n in range(1, 7)}
