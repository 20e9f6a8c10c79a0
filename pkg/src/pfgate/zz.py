"""Operating-point search: static and driven ZZ zeros, idle point, freedom amplitudes.

Sweeps accept either a :class:`~pfgate.circuit.Device` (couplings follow the
coupler through the capacitance model) or bare :class:`CircuitParams` (couplings
held fixed).  Units: GHz for frequencies, MHz for drive amplitudes and ZX rates,
kHz for ZZ.

Zeros are classified by how the sign flips:

* type I  -- smooth crossing; the bracketed root polishes to ``|zz| < 0.5`` kHz
* type II -- divergence-like flip between two samples that are both large
  (``|zz| > 50`` kHz) or whose bracketed "root" does not polish

Only type I zeros are offered as operating points.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .circuit import (
    DEFAULT_TRUNCATION,
    CircuitParams,
    Device,
    TruncationSpec,
    build_static_hamiltonian,
)
from .effective import (
    GHZ_TO_MHZ,
    LabelingError,
    block_effective_coupling,
    PauliCoefficients,
    diagonalize,
    diagonalize_exact,
    driven_coefficients,
    effective_coupling,
    swt_static_coefficients,
)

ROOT_TOLERANCE_KHZ = 0.5
TYPE_II_THRESHOLD_KHZ = 50.0
OMEGA_C_STEP = 0.005      # GHz
OMEGA_STEP = 0.5          # MHz
OMEGA_C_XTOL = 1e-5       # GHz (0.01 MHz)
OMEGA_XTOL = 0.1          # MHz
SMALL_DRIVE_WINDOW = (0.5, 4.0)   # MHz


def _params_at(system, omega_c: float) -> CircuitParams:
    if isinstance(system, Device):
        return system.at(omega_c)
    return system.replace(omegaC=float(omega_c))


# ---------------------------------------------------------------------------
# pointwise evaluators


def static_zz(params: CircuitParams, method: str = "exact",
              trunc: TruncationSpec = DEFAULT_TRUNCATION) -> float:
    """Static ZZ in kHz; ``method`` is ``exact``, ``npad`` or ``swt``."""
    method = method.lower()
    if method == "swt":
        res = swt_static_coefficients(params)
        return math.nan if res.zz is None else res.zz
    H = build_static_hamiltonian(params, trunc)
    return diagonalize(H, trunc, method).static_zz()


@dataclass(frozen=True)
class DrivenZZ:
    """Total ZZ split into static and drive-induced parts (kHz), plus the Pauli rates."""

    coefficients: PauliCoefficients
    zz_static: float

    @property
    def zz(self) -> float:
        return self.coefficients.zz

    @property
    def zz_dynamic(self) -> float:
        return self.coefficients.zz - self.zz_static

    @property
    def zx(self) -> float:
        return self.coefficients.zx


def total_zz(params: CircuitParams, Omega: float,
             trunc: TruncationSpec = DEFAULT_TRUNCATION,
             omega_d: float | None = None) -> DrivenZZ:
    """Cross-resonance drive of amplitude ``Omega`` (MHz) on Q1 at the dressed Q2 frequency."""
    H = build_static_hamiltonian(params, trunc)
    spec = diagonalize_exact(H, trunc)
    return DrivenZZ(driven_coefficients(H, Omega, trunc, spec, omega_d).coefficients,
                    spec.static_zz())


def numeric_effective_coupling(params: CircuitParams,
                               trunc: TruncationSpec = DEFAULT_TRUNCATION) -> float:
    """Signed |100>/|001> exchange rate (MHz) from their least-action 2x2 block."""
    return block_effective_coupling(build_static_hamiltonian(params, trunc), trunc)


def crossing_effective_coupling(params: CircuitParams,
                                trunc: TruncationSpec = DEFAULT_TRUNCATION,
                                search: float = 0.2) -> float:
    """Signed qubit-qubit exchange rate (MHz) from the |100>/|001> avoided crossing.

    Q1 is tuned through resonance with Q2 at fixed coupler frequency and
    couplings (so the probed point is not the device's own detuning); half the minimum splitting of the two dressed single-qubit
    excitations is the magnitude.  The sign follows the effective 2x2 model
    ``[[e, g], [g, e]]``: for ``g > 0`` the lower partner is antisymmetric.
    """
    i100, i001 = trunc.index((1, 0, 0)), trunc.index((0, 0, 1))

    def pair(w1):
        H = build_static_hamiltonian(params.replace(omega1=w1), trunc)
        E, V = np.linalg.eigh(H)
        weight = np.abs(V[i100]) ** 2 + np.abs(V[i001]) ** 2
        a, b = np.sort(np.argsort(weight)[-2:])
        return E, V, a, b

    def splitting(w1):
        E, _, a, b = pair(w1)
        return abs(E[b] - E[a])

    w2 = params.omega2
    res = minimize_scalar(splitting, bounds=(w2 - search, w2 + search), method="bounded",
                          options={"xatol": 1e-9})
    E, V, a, b = pair(res.x)
    lower = a if E[a] < E[b] else b
    sign = -np.sign(np.real(V[i100, lower] * np.conj(V[i001, lower]))) or 1.0
    return float(sign * 0.5 * abs(E[b] - E[a]) * GHZ_TO_MHZ)


# ---------------------------------------------------------------------------
# zeros


@dataclass(frozen=True)
class Zero:
    location: float
    kind: str            # "I" or "II"
    left: float
    right: float
    residual: float = math.nan

    @property
    def operating_point(self) -> bool:
        return self.kind == "I"


def _bracket_zeros(x, y, f, xtol, threshold=TYPE_II_THRESHOLD_KHZ,
                   tol=ROOT_TOLERANCE_KHZ) -> list[Zero]:
    zeros = []
    for i in range(len(x) - 1):
        a, b = y[i], y[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            zeros.append(Zero(float(x[i]), "I", a, a, 0.0))
            continue
        if a * b > 0 or b == 0.0:
            continue
        if abs(a) > threshold and abs(b) > threshold:
            zeros.append(Zero(0.5 * (x[i] + x[i + 1]), "II", float(a), float(b)))
            continue
        try:
            root = brentq(f, x[i], x[i + 1], xtol=xtol)
            val = f(root)
        except (LabelingError, ValueError):
            zeros.append(Zero(0.5 * (x[i] + x[i + 1]), "II", float(a), float(b)))
            continue
        kind = "I" if abs(val) < tol else "II"
        zeros.append(Zero(float(root), kind, float(a), float(b), float(val)))
    if len(y) and np.isfinite(y[-1]) and y[-1] == 0.0:
        zeros.append(Zero(float(x[-1]), "I", 0.0, 0.0, 0.0))
    return zeros


@dataclass
class SweepResult:
    """Tabulated samples over one or two axes with located zeros.

    ``columns`` maps column names to equally long 1-D arrays (one row per
    grid point, axes first); ``masked`` marks rows where labelling failed.
    """

    columns: dict
    masked: np.ndarray
    zeros: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def column(self, name) -> np.ndarray:
        return self.columns[name]

    def operating_points(self) -> list[Zero]:
        return [z for z in self.zeros if z.operating_point]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.columns) + ["masked"]
        w.writerow(names)
        for i in range(len(self.masked)):
            w.writerow([_fmt(self.columns[n][i]) for n in self.columns] + [int(self.masked[i])])
        return buf.getvalue()

    def zeros_json(self) -> str:
        return json.dumps([asdict(z) for z in self.zeros], indent=1, default=_jsonable)


def _fmt(v) -> str:
    v = float(v)
    return "nan" if not np.isfinite(v) else repr(round(v, 10))


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, float) and not math.isfinite(v):
        return None
    raise TypeError(type(v))


def static_zz_sweep(system, omega_c, method: str = "exact",
                    trunc: TruncationSpec = DEFAULT_TRUNCATION,
                    with_geff: bool = True) -> SweepResult:
    """Static ZZ over coupler frequencies ``omega_c`` (GHz) with zeros located and classified."""
    omega_c = np.asarray(omega_c, float)
    if omega_c.ndim != 1 or len(omega_c) < 2 or np.any(np.diff(omega_c) <= 0):
        raise ValueError("omega_c must be an increasing 1-D grid")
    zz = np.full(len(omega_c), np.nan)
    for i, w in enumerate(omega_c):
        try:
            zz[i] = static_zz(_params_at(system, w), method, trunc)
        except LabelingError:
            pass
    masked = ~np.isfinite(zz)

    def f(w):
        return static_zz(_params_at(system, w), method, trunc)

    cols = {"omegaC_GHz": omega_c, "zz_kHz": zz}
    if with_geff:
        cols["geff_MHz"] = np.array([effective_coupling(_params_at(system, w)) for w in omega_c])
    return SweepResult(cols, masked, _bracket_zeros(omega_c, zz, f, OMEGA_C_XTOL),
                       {"method": method, "levels": trunc.levels})


# ---------------------------------------------------------------------------
# idle point


@dataclass(frozen=True)
class IdlePoint:
    """Coupler frequency at which the qubits decouple.

    ``omegaCI`` is ``None`` when the device has no idle point; all other
    fields are then ``None`` as well.
    """

    omegaCI: float | None
    omegaCIPerturbative: float | None
    residualZZ: float | None = None
    residualGeff: float | None = None

    @property
    def absent(self) -> bool:
        return self.omegaCI is None


def decoupling_frequency(device: Device) -> float | None:
    """Closed-form coupler frequency where the perturbative exchange vanishes.

    Uses the capacitance ratios; ``None`` when ``2 a1 a2 / a12 >= 1``.
    """
    cap = device.capacitance
    if cap is None or not cap.has_idle_solution:
        return None
    p = device.params
    return (p.omega1 + p.omega2) / (2 * math.sqrt(1 - 2 * cap.alpha1 * cap.alpha2 / cap.alpha12))


def find_idle_point(device: Device, omega_c_range=(4.4, 7.5),
                    trunc: TruncationSpec = DEFAULT_TRUNCATION,
                    step: float = OMEGA_C_STEP) -> IdlePoint:
    """Numeric idle point: the type I static-ZZ zero nearest the closed-form seed."""
    seed = decoupling_frequency(device)
    if seed is None:
        return IdlePoint(None, None)
    lo, hi = omega_c_range
    lo, hi = min(lo, seed - 0.5), max(hi, seed + 0.5)
    lo = max(lo, max(device.params.omega1, device.params.omega2) + 0.05)
    grid = np.arange(lo, hi + step / 2, step)
    sweep = static_zz_sweep(device, grid, trunc=trunc, with_geff=False)
    candidates = sweep.operating_points()
    if not candidates:
        return IdlePoint(None, seed)
    best = min(candidates, key=lambda z: abs(z.location - seed))
    params = device.at(best.location)
    return IdlePoint(best.location, seed, static_zz(params, trunc=trunc),
                     numeric_effective_coupling(params, trunc))


def exchange_free_frequency(system, omega_c_range, step: float = 0.01,
                            trunc: TruncationSpec = DEFAULT_TRUNCATION) -> list[float]:
    """Coupler frequencies (GHz) where the numeric exchange rate changes sign."""
    lo, hi = omega_c_range
    grid = np.arange(lo, hi + step / 2, step)

    def g(w):
        return numeric_effective_coupling(_params_at(system, w), trunc)

    vals = []
    for w in grid:
        try:
            vals.append(g(w))
        except LabelingError:
            vals.append(math.nan)
    zeros = _bracket_zeros(grid, np.array(vals), g, OMEGA_C_XTOL, threshold=math.inf,
                           tol=math.inf)
    return [z.location for z in zeros]


# ---------------------------------------------------------------------------
# freedom amplitudes


def _driven_zz(params, Omega, trunc):
    try:
        return total_zz(params, Omega, trunc).zz
    except LabelingError:
        return math.nan


def freedom_amplitude(system, omega_c: float, Omega_range=(0.0, 100.0),
                      trunc: TruncationSpec = DEFAULT_TRUNCATION,
                      step: float = OMEGA_STEP, xtol: float = OMEGA_XTOL) -> list[float]:
    """All type I roots of total ZZ in the drive amplitude (MHz) at fixed coupler frequency.

    ``Omega = 0`` is reported when the static part alone is below tolerance.
    An empty list means no freedom amplitude exists in range.
    """
    params = _params_at(system, omega_c)
    lo, hi = Omega_range
    if not 0 <= lo < hi:
        raise ValueError("Omega_range must satisfy 0 <= lo < hi")
    grid = np.arange(lo, hi + step / 2, step)
    zz = np.array([_driven_zz(params, O, trunc) for O in grid])
    roots = []
    if lo == 0 and abs(zz[0]) < ROOT_TOLERANCE_KHZ:
        roots.append(0.0)
        grid, zz = grid[1:], zz[1:]     # the static root is already counted
    zeros = _bracket_zeros(grid, zz, lambda O: total_zz(params, O, trunc).zz, xtol)
    return sorted(roots + [z.location for z in zeros if z.operating_point])


@dataclass(frozen=True)
class FreedomSample:
    omegaC: float
    omegaStar: float
    alphaZXAtStar: float
    zzAtStar: float


@dataclass(frozen=True)
class Gap:
    """Coupler interval without a freedom amplitude.

    ``opposing_higher_order`` records whether the beyond-quadratic drive term
    has the opposite sign of ``eta2 Omega^2 + zz_static`` at the top of the
    amplitude range, i.e. whether it is what closes the would-be root.
    """

    start: float
    end: float
    opposing_higher_order: bool | None


@dataclass
class FreedomCurve:
    samples: list
    gaps: list
    scanned: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["omegaC_GHz", "omegaStar_MHz", "alphaZX_MHz", "zz_kHz"])
        for s in self.samples:
            w.writerow([_fmt(s.omegaC), _fmt(s.omegaStar), _fmt(s.alphaZXAtStar), _fmt(s.zzAtStar)])
        return buf.getvalue()


def higher_order_opposes(params: CircuitParams, Omega: float,
                         trunc: TruncationSpec = DEFAULT_TRUNCATION,
                         window=SMALL_DRIVE_WINDOW) -> bool:
    """True when ``zz_d - eta2 Omega^2`` and ``eta2 Omega^2 + zz_s`` have opposite signs."""
    eta2, _ = small_drive_factors(params, trunc, window)
    d = total_zz(params, Omega, trunc)
    quad = eta2 * Omega**2
    return bool(np.sign(d.zz_dynamic - quad) == -np.sign(quad + d.zz_static))


def freedom_curve(system, omega_c, Omega_range=(0.0, 100.0),
                  trunc: TruncationSpec = DEFAULT_TRUNCATION,
                  step: float = OMEGA_STEP, workers: int = 1) -> FreedomCurve:
    """Freedom amplitudes over a coupler grid; empty stretches become gaps."""
    omega_c = np.asarray(omega_c, float)
    one = functools.partial(_freedom_point, system, Omega_range, trunc, step)
    results = _map(one, omega_c, workers)
    samples, empty = [], []
    for w, roots in results:
        if not roots:
            empty.append(w)
        for O in roots:
            d = total_zz(_params_at(system, w), O, trunc)
            samples.append(FreedomSample(float(w), O, d.zx, d.zz))
    gaps = []
    for run in _runs(omega_c, set(empty)):
        mid = run[len(run) // 2]
        try:
            opp = higher_order_opposes(_params_at(system, mid), Omega_range[1], trunc)
        except LabelingError:
            opp = None
        gaps.append(Gap(float(run[0]), float(run[-1]), opp))
    return FreedomCurve(samples, gaps, omega_c)


def _freedom_point(system, Omega_range, trunc, step, w):
    return w, freedom_amplitude(system, w, Omega_range, trunc, step)


def _runs(grid, members):
    runs, cur = [], []
    for w in grid:
        if w in members:
            cur.append(w)
        elif cur:
            runs.append(cur)
            cur = []
    if cur:
        runs.append(cur)
    return runs


def _map(fn, items, workers):
    if workers and workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def driven_zero_sweep(system, omega_c, Omega: float,
                      trunc: TruncationSpec = DEFAULT_TRUNCATION) -> SweepResult:
    """Total ZZ and ZX rate over coupler frequency at fixed drive, with zeros."""
    omega_c = np.asarray(omega_c, float)
    zz = np.full(len(omega_c), np.nan)
    zx = np.full(len(omega_c), np.nan)
    for i, w in enumerate(omega_c):
        try:
            d = total_zz(_params_at(system, w), Omega, trunc)
            zz[i], zx[i] = d.zz, d.zx
        except LabelingError:
            pass
    zeros = _bracket_zeros(omega_c, zz, lambda w: total_zz(_params_at(system, w), Omega, trunc).zz,
                           OMEGA_C_XTOL)
    return SweepResult({"omegaC_GHz": omega_c, "zz_kHz": zz, "alphaZX_MHz": zx},
                       ~np.isfinite(zz), zeros, {"Omega_MHz": Omega})


def zz_free_frequencies(system, omega_c, Omega: float,
                        trunc: TruncationSpec = DEFAULT_TRUNCATION) -> list[float]:
    """Type I zeros of total ZZ over the coupler grid at fixed drive (GHz)."""
    return [z.location for z in driven_zero_sweep(system, omega_c, Omega, trunc).operating_points()]


def critical_amplitude(system, omega_c, Omega_lo: float, Omega_hi: float,
                       trunc: TruncationSpec = DEFAULT_TRUNCATION,
                       xtol: float = 0.1) -> tuple[float, int, int]:
    """Drive amplitude (MHz) where the number of ZZ-free coupler frequencies changes.

    Bisects between amplitudes with different counts; returns the amplitude
    and the counts just below and above it.  The count is assumed to change
    once inside the bracket.
    """
    def count(O):
        return len(zz_free_frequencies(system, omega_c, O, trunc))

    n_lo, n_hi = count(Omega_lo), count(Omega_hi)
    if n_lo == n_hi:
        raise ValueError(f"same zero count ({n_lo}) at both ends of the bracket")
    lo, hi = Omega_lo, Omega_hi
    while hi - lo > xtol:
        mid = 0.5 * (lo + hi)
        if count(mid) == n_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi), n_lo, n_hi


# ---------------------------------------------------------------------------
# 2-D maps


@dataclass(frozen=True)
class ZeroBoundary:
    """Zero crossings on a grid, as (x, y) points ordered along x then y.

    ``kind`` is ``"I"``, ``"II"`` or ``"geff"`` for the exchange-free line.
    """

    points: np.ndarray
    kind: str
    axes: tuple = ("delta12_GHz", "omegaC_GHz")

    def to_json(self) -> dict:
        return {"kind": self.kind, "axes": list(self.axes),
                "points": np.round(self.points, 9).tolist()}


def _edge_crossings(x, y, Z, threshold=None):
    """Linear-interpolated sign changes along both grid directions.

    With ``threshold`` the crossings split into (type I, type II) by whether
    both neighbours exceed it in magnitude.
    """
    small, large = [], []

    def visit(z0, z1, p0, p1):
        if not (np.isfinite(z0) and np.isfinite(z1)) or z0 * z1 > 0 or z0 == z1:
            return
        t = z0 / (z0 - z1)
        pt = (p0[0] + t * (p1[0] - p0[0]), p0[1] + t * (p1[1] - p0[1]))
        if threshold is not None and abs(z0) > threshold and abs(z1) > threshold:
            large.append(pt)
        else:
            small.append(pt)

    for i in range(len(x)):
        for j in range(len(y)):
            if i + 1 < len(x):
                visit(Z[i, j], Z[i + 1, j], (x[i], y[j]), (x[i + 1], y[j]))
            if j + 1 < len(y):
                visit(Z[i, j], Z[i, j + 1], (x[i], y[j]), (x[i], y[j + 1]))
    order = lambda pts: np.array(sorted(set(pts))).reshape(-1, 2)
    return order(small), order(large)


def _map_row(template, omega_c, Omega, trunc, d):
    dev = template.replace(omega1=template.params.omega2 + d)
    out_zz, out_g = [], []
    for w in omega_c:
        p = dev.at(w)
        out_g.append(effective_coupling(p))
        out_zz.append(_driven_zz(p, Omega, trunc))
    return out_zz, out_g


def freedom_map_2d(template: Device, delta12, omega_c, Omega: float = 0.0,
                   trunc: TruncationSpec = DEFAULT_TRUNCATION,
                   divergence_width: float = 0.01, workers: int = 1):
    """Total ZZ over qubit detuning (Q1 moved, Q2 fixed) and coupler frequency.

    Returns the sweep (one row per grid point) and the zero boundaries:
    type I, type II and the perturbative exchange-free line.  Rows within
    ``divergence_width`` GHz of ``Delta12 = 0`` or ``Delta12 = -delta1/2``
    are flagged in the ``near_divergence`` column.
    """
    delta12 = np.asarray(delta12, float)
    omega_c = np.asarray(omega_c, float)
    row = functools.partial(_map_row, template, omega_c, Omega, trunc)
    rows = _map(row, delta12, workers)
    Z = np.array([r[0] for r in rows])
    G = np.array([r[1] for r in rows])
    half = -template.params.delta1 * 1e-3 / 2
    near = (np.abs(delta12) < divergence_width) | (np.abs(delta12 - half) < divergence_width)
    D, W = np.meshgrid(delta12, omega_c, indexing="ij")
    cols = {"delta12_GHz": D.ravel(), "omegaC_GHz": W.ravel(), "zz_kHz": Z.ravel(),
            "geff_MHz": G.ravel(),
            "near_divergence": np.repeat(near, len(omega_c)).astype(float)}
    type1, type2 = _edge_crossings(delta12, omega_c, Z, TYPE_II_THRESHOLD_KHZ)
    geff, _ = _edge_crossings(delta12, omega_c, G)
    bounds = [ZeroBoundary(type1, "I"), ZeroBoundary(type2, "II"), ZeroBoundary(geff, "geff")]
    result = SweepResult(cols, ~np.isfinite(Z.ravel()), [], {"Omega_MHz": Omega,
                                                            "shape": Z.shape})
    return result, bounds


# ---------------------------------------------------------------------------
# exponent fits


def small_drive_factors(params: CircuitParams, trunc: TruncationSpec = DEFAULT_TRUNCATION,
                        window=SMALL_DRIVE_WINDOW, samples: int = 8) -> tuple[float, float]:
    """Leading drive factors ``eta2`` (kHz/MHz^2) and ``mu1`` (MHz/MHz) extrapolated to zero drive.

    Fits ``zz_d = eta2 W^2 + c W^4`` and ``zx = mu1 W + c W^3`` over the window.
    """
    Om = np.linspace(window[0], window[1], samples)
    data = [total_zz(params, O, trunc) for O in Om]
    zd = np.array([d.zz_dynamic for d in data])
    zx = np.array([d.zx for d in data])
    eta2 = np.linalg.lstsq(np.column_stack([Om**2, Om**4]), zd, rcond=None)[0][0]
    mu1 = np.linalg.lstsq(np.column_stack([Om, Om**3]), zx, rcond=None)[0][0]
    return float(eta2), float(mu1)


@dataclass(frozen=True)
class PowerLaw:
    amplitude: float | None
    exponent: float | None
    residual: float | None
    reliable: bool


@dataclass(frozen=True)
class ExponentFit:
    """``zz_d ~ eta2 W^2 + eta_a W^a`` and ``zx ~ mu1 W + mu_b W^b``."""

    eta2: float
    mu1: float
    zz_higher: PowerLaw
    zx_higher: PowerLaw
    Omegas: tuple = ()
    zz_residual: tuple = ()
    zx_residual: tuple = ()

    @property
    def a(self):
        return self.zz_higher.exponent

    @property
    def b(self):
        return self.zx_higher.exponent


def fit_power_law(x, r, min_exponent: float, noise: float, max_residual: float = 0.1) -> PowerLaw:
    """Log-log fit of ``r = A x^p``; unreliable on sign changes, noise or ``p <= min_exponent``."""
    x, r = np.asarray(x, float), np.asarray(r, float)
    keep = np.abs(r) > noise
    if keep.sum() < 3:
        return PowerLaw(None, None, None, False)
    xs, rs = x[keep], r[keep]
    sign = np.sign(rs)
    lx, ly = np.log(xs), np.log(np.abs(rs))
    p, c = np.polyfit(lx, ly, 1)
    resid = float(np.sqrt(np.mean((ly - (p * lx + c)) ** 2)))
    consistent = bool(np.all(sign == sign[0]))
    reliable = consistent and resid < max_residual and p > min_exponent
    return PowerLaw(float(sign[0] * np.exp(c)), float(p), resid, reliable)


def fit_exponents(system, omega_c: float, Omegas,
                  trunc: TruncationSpec = DEFAULT_TRUNCATION,
                  window=SMALL_DRIVE_WINDOW, max_residual: float = 0.1) -> ExponentFit:
    """Small-drive factors plus power-law fits to what is left beyond them.

    ``Omegas`` (MHz) needs at least 8 samples spanning a decade.
    """
    Omegas = np.asarray(Omegas, float)
    if len(Omegas) < 8 or Omegas.max() < 10 * Omegas.min():
        raise ValueError("need at least 8 amplitudes spanning a decade")
    params = _params_at(system, omega_c)
    eta2, mu1 = small_drive_factors(params, trunc, window)
    data = [total_zz(params, O, trunc) for O in Omegas]
    zr = np.array([d.zz_dynamic for d in data]) - eta2 * Omegas**2
    xr = np.array([d.zx for d in data]) - mu1 * Omegas
    # noise floors: relative round-off on the quantities being subtracted
    zscale = np.max(np.abs([d.zz_static for d in data])) + np.max(np.abs(eta2 * Omegas**2))
    xscale = np.max(np.abs(mu1 * Omegas))
    return ExponentFit(eta2, mu1,
                       fit_power_law(Omegas, zr, 2.0, 1e-7 * zscale + 1e-6, max_residual),
                       fit_power_law(Omegas, xr, 1.0, 1e-7 * xscale + 1e-9, max_residual),
                       tuple(Omegas.tolist()), tuple(zr.tolist()), tuple(xr.tolist()))


def synthetic_exponent_check(c2: float, ca: float, a: float, Omegas,
                             window=SMALL_DRIVE_WINDOW, samples: int = 8) -> PowerLaw:
    """Recover ``a`` from manufactured ``c2 W^2 + ca W^a`` data.

    Runs the same two stages as :func:`fit_exponents`: the quadratic factor
    from the small-drive window, then a power law on what it leaves over
    ``Omegas``.
    """
    Omegas = np.asarray(Omegas, float)
    small = np.linspace(window[0], window[1], samples)
    ys = c2 * small**2 + ca * small**a
    eta2 = np.linalg.lstsq(np.column_stack([small**2, small**4]), ys, rcond=None)[0][0]
    y = c2 * Omegas**2 + ca * Omegas**a
    return fit_power_law(Omegas, y - eta2 * Omegas**2, 2.0, 1e-12)


# ---------------------------------------------------------------------------
# Ramsey-like fringes


def conditional_phase_fringe(zz_khz, tau_us):
    """``cos(2 pi zz tau)`` for ZZ in kHz and wait time in microseconds."""
    return np.cos(2 * np.pi * np.asarray(zz_khz, float) * np.asarray(tau_us, float) * 1e-3)


def fringe_map(system, omega_c, Omega: float, tau_us,
               trunc: TruncationSpec = DEFAULT_TRUNCATION) -> SweepResult:
    """Fringe value on a (coupler frequency, wait time) grid at fixed drive."""
    sweep = driven_zero_sweep(system, omega_c, Omega, trunc)
    zz = sweep.column("zz_kHz")
    tau_us = np.asarray(tau_us, float)
    W, T = np.meshgrid(np.asarray(omega_c, float), tau_us, indexing="ij")
    F = conditional_phase_fringe(zz[:, None], T)
    cols = {"omegaC_GHz": W.ravel(), "tau_us": T.ravel(),
            "zz_kHz": np.repeat(zz, len(tau_us)), "fringe": F.ravel()}
    return SweepResult(cols, ~np.isfinite(F.ravel()), sweep.zeros, {"Omega_MHz": Omega})
