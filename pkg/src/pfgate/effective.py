"""Dressed spectra, block diagonalization and Pauli projection.

Three diagonalizers share one output type, :class:`LabeledSpectrum`:

* ``diagonalize_exact`` -- dense ``eigh`` plus greedy maximum-overlap labelling
* ``diagonalize_npad``  -- iterated 2x2 Jacobi (Givens) rotations; labels follow
  the diagonal slot each eigenvalue grows out of
* ``swt_static_coefficients`` -- closed-form dispersive ZZ and effective coupling

Energies are in GHz, ZZ coefficients in kHz, all other Pauli rates in MHz.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .circuit import (
    COMPUTATIONAL_LABELS,
    DEFAULT_TRUNCATION,
    CircuitParams,
    DriveSpec,
    TruncationSpec,
    build_drive_operator,
    build_static_hamiltonian,
)

GHZ_TO_KHZ = 1e6
GHZ_TO_MHZ = 1e3


class LabelingError(RuntimeError):
    """Dressed states cannot be assigned bare labels unambiguously."""

    def __init__(self, message, pair=None):
        super().__init__(message)
        self.pair = pair


class ConvergenceError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# labelled spectra


@dataclass(frozen=True)
class LabeledSpectrum:
    """Eigen-decomposition whose columns are ordered like the bare basis.

    ``eigenvectors[:, i]`` is the dressed partner of bare state ``labels[i]``
    and ``eigenvalues[i]`` its energy (GHz).  Phases are fixed so that the
    overlap with the partner bare state is real and non-negative.
    ``conflicts`` lists labels whose assignment was contested; energies of
    those labels raise :class:`LabelingError` on request.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: tuple
    diagonalizer: str
    conflicts: tuple = ()
    _index: dict = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self._index is None:
            object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    def index(self, label) -> int:
        return self._index[tuple(label)]

    def energy(self, label, strict: bool = True) -> float:
        label = tuple(label)
        if strict:
            for conflict in self.conflicts:
                if label in conflict[:1]:
                    raise LabelingError(
                        f"label {label} contested between dressed states {conflict[1:]}",
                        pair=conflict[1:])
        return float(self.eigenvalues[self._index[label]])

    def state(self, label) -> np.ndarray:
        return self.eigenvectors[:, self._index[tuple(label)]]

    def static_zz(self) -> float:
        """ZZ rate E11 - E10 - E01 + E00 in kHz."""
        e00, e01, e10, e11 = (self.energy(lab) for lab in COMPUTATIONAL_LABELS)
        return (e11 - e10 - e01 + e00) * GHZ_TO_KHZ

    def qubit_frequencies(self) -> tuple[float, float]:
        e00, e01, e10, _ = (self.energy(lab) for lab in COMPUTATIONAL_LABELS)
        return e10 - e00, e01 - e00

    def transform(self) -> np.ndarray:
        return self.eigenvectors


def _fix_phases(vecs: np.ndarray) -> np.ndarray:
    d = np.diagonal(vecs).copy()
    mag = np.abs(d)
    phase = np.where(mag > 0, d.conj() / np.where(mag > 0, mag, 1), 1.0)
    return vecs * phase[np.newaxis, :]


def assign_labels(vecs: np.ndarray, energies: np.ndarray | None = None,
                  bare_energies: np.ndarray | None = None):
    """Greedy maximum-overlap assignment of eigenvectors to basis states.

    Returns ``(perm, conflicts)`` where ``vecs[:, perm[i]]`` belongs to basis
    state ``i``.  Pairs are visited by decreasing overlap; exact ties are
    broken by energy proximity to the bare energy.  A conflict is recorded
    whenever an eigenvector's largest overlap was already taken.
    """
    n = vecs.shape[0]
    overlap = np.abs(vecs) ** 2
    if energies is not None and bare_energies is not None:
        proximity = np.abs(bare_energies[:, None] - energies[None, :])
    else:
        proximity = np.zeros_like(overlap)
    order = np.lexsort((proximity.ravel(), -overlap.ravel()))
    basis_of = np.full(n, -1)
    vec_of = np.full(n, -1)
    assigned = 0
    for flat in order:
        i, k = divmod(int(flat), n)
        if basis_of[k] >= 0 or vec_of[i] >= 0:
            continue
        basis_of[k] = i
        vec_of[i] = k
        assigned += 1
        if assigned == n:
            break
    best = overlap.argmax(axis=0)
    conflicts = []
    for k in range(n):
        if best[k] != basis_of[k]:
            rival = vec_of[best[k]]
            conflicts.append((int(best[k]), int(rival), k))
    return vec_of, conflicts


def _labeled(energies, vecs, trunc, method, bare=None) -> LabeledSpectrum:
    labels = tuple(trunc.labels())
    perm, conflicts = assign_labels(vecs, energies, bare)
    vecs = _fix_phases(vecs[:, perm])
    named = tuple((labels[i], a, b) for i, a, b in conflicts)
    return LabeledSpectrum(np.asarray(energies)[perm], vecs, labels, method, named)


def _as_trunc(H, trunc):
    if trunc is None:
        trunc = DEFAULT_TRUNCATION
    if trunc.dimension != H.shape[0]:
        raise ValueError(f"operator dimension {H.shape[0]} does not match truncation {trunc.levels}")
    return trunc


def diagonalize_exact(H: np.ndarray, trunc: TruncationSpec | None = None) -> LabeledSpectrum:
    """Full eigendecomposition labelled by maximum bare-state overlap."""
    trunc = _as_trunc(H, trunc)
    energies, vecs = np.linalg.eigh(H)
    return _labeled(energies, vecs, trunc, "exact", np.real(np.diagonal(H)))


def jacobi_rotation(a: float, b: float, c: complex):
    """2x2 unitary columns ``(u_pp, u_qp, u_pq, u_qq)`` zeroing coupling ``c``.

    The angle is the small one (|theta| <= pi/4), so each column stays
    dominated by the diagonal slot it started from.
    """
    r = abs(c)
    phase = c / r if r else 1.0
    if a == b:
        theta = math.pi / 4
    else:
        theta = 0.5 * math.atan(2 * r / (a - b))
    cs, sn = math.cos(theta), math.sin(theta)
    # U = diag(1, conj(phase)) @ [[cs, -sn], [sn, cs]]
    return cs, np.conj(phase) * sn, -sn, np.conj(phase) * cs


def diagonalize_npad(H: np.ndarray, trunc: TruncationSpec | None = None,
                     tol: float = 1e-12, max_rotations: int = 1_000_000) -> LabeledSpectrum:
    """Jacobi diagonalization, largest off-diagonal element first.

    ``tol`` is an absolute threshold (GHz) on the remaining off-diagonal
    magnitudes.  Labels are the bare labels of the diagonal slots.
    """
    trunc = _as_trunc(H, trunc)
    A = np.array(H, dtype=complex if np.iscomplexobj(H) else float)
    n = A.shape[0]
    V = np.eye(n, dtype=A.dtype)
    off = np.abs(A)
    np.fill_diagonal(off, 0.0)
    rotations = 0
    while True:
        flat = int(off.argmax())
        p, q = divmod(flat, n)
        if off[p, q] < tol:
            break
        if rotations >= max_rotations:
            raise ConvergenceError(f"NPAD did not converge after {rotations} rotations")
        upp, uqp, upq, uqq = jacobi_rotation(A[p, p].real, A[q, q].real, A[p, q])
        if not np.iscomplexobj(A):
            uqp, uqq = float(np.real(uqp)), float(np.real(uqq))
        col_p = A[:, p] * upp + A[:, q] * uqp
        col_q = A[:, p] * upq + A[:, q] * uqq
        A[:, p], A[:, q] = col_p, col_q
        row_p = np.conj(upp) * A[p, :] + np.conj(uqp) * A[q, :]
        row_q = np.conj(upq) * A[p, :] + np.conj(uqq) * A[q, :]
        A[p, :], A[q, :] = row_p, row_q
        A[p, q] = A[q, p] = 0.0
        vp = V[:, p] * upp + V[:, q] * uqp
        vq = V[:, p] * upq + V[:, q] * uqq
        V[:, p], V[:, q] = vp, vq
        for k in (p, q):
            off[k, :] = np.abs(A[k, :])
            off[:, k] = off[k, :]
            off[k, k] = 0.0
        rotations += 1
    energies = np.real(np.diagonal(A)).copy()
    labels = tuple(trunc.labels())
    conflicts = []
    best = (np.abs(V) ** 2).argmax(axis=0)
    for k in range(n):
        if best[k] != k:
            conflicts.append((labels[int(best[k])], int(best[k]), k))
    spec = LabeledSpectrum(energies, _fix_phases(V), labels, "NPAD", tuple(conflicts))
    object.__setattr__(spec, "rotations", rotations)
    return spec


def diagonalize(H, trunc=None, method: str = "exact", **kw) -> LabeledSpectrum:
    if method == "exact":
        return diagonalize_exact(H, trunc)
    if method.upper() == "NPAD":
        return diagonalize_npad(H, trunc, **kw)
    raise ValueError(f"unknown diagonalizer {method!r}")


# ---------------------------------------------------------------------------
# perturbative closed forms


@dataclass(frozen=True)
class SWTResult:
    """Second-order Schrieffer-Wolff static ZZ (kHz) and effective coupling (MHz).

    ``zz`` is ``None`` when the parameters sit on a pole of the closed form;
    ``pole`` then names the vanishing denominator.
    """

    zz: float | None
    zz_harmonic: float | None
    zz_anharmonic: float | None
    g_eff: float
    pole: str | None = None


def effective_coupling(params: CircuitParams) -> float:
    """Direct plus coupler-mediated exchange coupling in MHz."""
    g12, g1c, g2c = params.g12, params.g1c, params.g2c
    total = 0.0
    for omega_q in (params.omega1, params.omega2):
        if omega_q == params.omegaC:
            return math.nan
        total += 1.0 / (omega_q - params.omegaC) - 1.0 / (omega_q + params.omegaC)
    # g1c g2c [MHz^2] * total [1/GHz] -> MHz
    return g12 + 0.5 * g1c * g2c * total * 1e-3


def swt_static_coefficients(params: CircuitParams, pole_tol: float = 1e-9) -> SWTResult:
    g_eff = effective_coupling(params) * 1e-3
    g12 = params.g12 * 1e-3
    d1, d2, dc = params.delta1 * 1e-3, params.delta2 * 1e-3, params.deltaC * 1e-3
    det12 = params.omega1 - params.omega2
    det1 = params.omega1 - params.omegaC
    det2 = params.omega2 - params.omegaC
    poles = {
        "Delta12 = delta2": det12 - d2,
        "Delta12 = -delta1": det12 + d1,
        "Delta1 + Delta2 = deltaC": det1 + det2 - dc,
        "Delta1 + Delta2 = 0": det1 + det2,
    }
    for name, den in poles.items():
        if abs(den) < pole_tol:
            return SWTResult(None, None, None, g_eff * GHZ_TO_MHZ, pole=name)
    chi = dc / (det1 + det2)
    zz1 = 2 * g_eff**2 * (d1 + d2) / ((det12 - d2) * (det12 + d1))
    zz2 = 8 * (g_eff - chi * g12) * (g_eff - g12) / (det1 + det2 - dc)
    return SWTResult((zz1 + zz2) * GHZ_TO_KHZ, zz1 * GHZ_TO_KHZ, zz2 * GHZ_TO_KHZ,
                     g_eff * GHZ_TO_MHZ)


def idle_offset(params: CircuitParams) -> float:
    """Perturbative ZZ left at the decoupling point, ``8 g12^2 dC / (w1 + w2 - 2 wC)^2`` in kHz."""
    g12 = params.g12 * 1e-3
    dc = params.deltaC * 1e-3
    return 8 * g12**2 * dc / (params.omega1 + params.omega2 - 2 * params.omegaC) ** 2 * GHZ_TO_KHZ


@dataclass(frozen=True)
class TransitionRates:
    """Leading-order driven transition rates (dimensionless, multiply Omega)."""

    rates: tuple

    def __getitem__(self, k: int) -> float:
        return self.rates[k - 1]

    def as_dict(self) -> dict[str, float]:
        return {f"lambda{k}": v for k, v in enumerate(self.rates, start=1)}


# Bra/ket pairs of each rate: H_d contains rate * Omega * |ket><bra| (+ h.c.).
TRANSITION_ELEMENTS = {
    1: ((0, 0, 0), (0, 0, 1)),
    2: ((0, 0, 0), (0, 1, 0)),
    3: ((0, 0, 1), (0, 0, 2)),
    4: ((0, 0, 1), (0, 1, 1)),
    5: ((0, 0, 1), (2, 0, 0)),
    6: ((0, 1, 0), (2, 0, 0)),
    7: ((0, 1, 0), (0, 1, 1)),
    8: ((0, 1, 0), (0, 2, 0)),
    9: ((0, 1, 1), (2, 0, 1)),
    10: ((2, 0, 0), (2, 0, 1)),
    11: ((0, 0, 2), (2, 0, 1)),
}


def transition_rates(params: CircuitParams) -> TransitionRates:
    """Closed-form rates for ``g1c = g2c = g``, ``g12 = 0``, ``delta1 = delta2``.

    Uses ``g = g1c`` and ``delta = delta1``; detunings in GHz.
    """
    g = params.g1c * 1e-3
    d = params.delta1 * 1e-3
    dc = params.deltaC * 1e-3
    D12 = params.omega1 - params.omega2
    D1 = params.omega1 - params.omegaC
    D2 = params.omega2 - params.omegaC
    s2 = math.sqrt(2)
    lam = (
        -g**2 * d / (2 * D12 * D2 * (D12 + d)),
        -g * d / (2 * D1 * (D1 + d)),
        -s2 * g**2 * d / (D12 * (D12 - d) * (D2 + d)),
        -g / (2 * D1),
        -g**2 * d / (s2 * D12 * D2 * (D12 + d)),
        g * d / (s2 * D1 * (D1 + d)),
        -g**2 * (D2 + dc) / (2 * D12 * D2 * (D2 - dc)),
        -g / (s2 * (D1 - dc)),
        -g * d / (s2 * D1 * (D1 + d)),
        g**2 / (D2 * (D12 + d)),
        -g**2 * d / (D12 * (D12 - d) * (D2 + d)),
    )
    return TransitionRates(lam)


# lambda1..lambda3 multiply Z-conditioned pairs (|a><b| - |c><d|); the
# unconditioned half is a local term and not part of the rate.
PAIRED_TRANSITIONS = {
    1: (((0, 0, 0), (0, 0, 1)), ((1, 0, 0), (1, 0, 1))),
    2: (((0, 0, 0), (0, 1, 0)), ((1, 0, 0), (1, 1, 0))),
    3: (((0, 0, 1), (0, 0, 2)), ((1, 0, 1), (1, 0, 2))),
}


def symmetrized(params: CircuitParams) -> CircuitParams:
    """Parameters the closed-form rates assume: ``g2c = g1c``, ``g12 = 0``, ``delta2 = delta1``."""
    return params.replace(g2c=params.g1c, g12=0.0, delta2=params.delta1)


def numeric_transition_rates(params: CircuitParams, trunc: TruncationSpec | None = None,
                             Omega: float = 1.0, counter_rotating: bool = False) -> TransitionRates:
    """Rotating-frame matrix elements divided by ``Omega``, one per closed-form rate.

    Paired rates take half the difference of their two elements; the rest are
    single elements whose overall sign follows the eigenvector phase choice.
    """
    trunc = trunc or DEFAULT_TRUNCATION
    H0 = build_static_hamiltonian(params, trunc, counter_rotating=counter_rotating)
    spec = diagonalize_exact(H0, trunc)
    Hr = rotating_frame_hamiltonian(H0, DriveSpec(Omega, target_frequency(spec)), trunc, spec)
    idx = trunc.index
    out = []
    for k, (ket, bra) in TRANSITION_ELEMENTS.items():
        if k in PAIRED_TRANSITIONS:
            (a, b), (c, d) = PAIRED_TRANSITIONS[k]
            el = 0.5 * (Hr[idx(a), idx(b)] - Hr[idx(c), idx(d)])
        else:
            el = Hr[idx(ket), idx(bra)]
        out.append(float(np.real(el)) / (Omega * 1e-3))
    return TransitionRates(tuple(out))


# ---------------------------------------------------------------------------
# rotating frame and block diagonalization


def rotating_frame_hamiltonian(H0: np.ndarray, drive: DriveSpec,
                               trunc: TruncationSpec | None = None,
                               spectrum: LabeledSpectrum | None = None) -> np.ndarray:
    """Time-independent driven Hamiltonian in the dressed, co-rotating frame (GHz).

    Basis order follows the bare labels.  Diagonal: dressed energy minus
    ``omega_d`` times the label's excitation number.  Off-diagonal: half the
    drive amplitude times the dressed matrix elements of ``a + a^+`` between
    labels whose excitation numbers differ by one; every other drive term
    oscillates at ``omega_d`` or faster and is dropped.
    """
    trunc = _as_trunc(H0, trunc)
    if spectrum is None:
        spectrum = diagonalize_exact(H0, trunc)
    N = trunc.excitations()
    Hr = np.diag(spectrum.eigenvalues - drive.omegaD * N).astype(complex)
    if drive.Omega:
        X = build_drive_operator(drive, trunc)
        V = spectrum.eigenvectors
        M = V.conj().T @ X @ V
        mask = np.abs(N[:, None] - N[None, :]) == 1
        Hr = Hr + 0.5 * drive.Omega * 1e-3 * np.where(mask, M, 0.0)
    Hr = 0.5 * (Hr + Hr.conj().T)
    if not np.iscomplexobj(H0) and np.allclose(Hr.imag, 0.0):
        Hr = Hr.real.copy()
    return Hr


@dataclass(frozen=True)
class BlockTransform:
    unitary: np.ndarray
    block: tuple

    def residual(self, H: np.ndarray) -> float:
        """Largest off-block element of ``T^+ H T``."""
        Hb = self.unitary.conj().T @ H @ self.unitary
        mask = np.zeros(H.shape[0], dtype=bool)
        mask[list(self.block)] = True
        return float(np.abs(Hb[np.ix_(mask, ~mask)]).max(initial=0.0))


PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
TWO_QUBIT_PAULIS = tuple(a + b for a in "IXYZ" for b in "IXYZ")


def pauli_components(block: np.ndarray) -> dict[str, float]:
    """Coefficients ``tr(P H) / 4`` of a 4x4 Hermitian block, same units as ``block``."""
    out = {}
    for name in TWO_QUBIT_PAULIS:
        P = np.kron(PAULI[name[0]], PAULI[name[1]])
        out[name] = float(np.real(np.trace(P @ block)) / 4)
    return out


def pauli_reconstruct(coeffs: dict[str, float]) -> np.ndarray:
    return sum(c * np.kron(PAULI[k[0]], PAULI[k[1]]) for k, c in coeffs.items())


@dataclass(frozen=True)
class PauliCoefficients:
    """Two-qubit rates of the computational block.

    ``zz`` in kHz is the full conditional shift ``E11 - E10 - E01 + E00``
    (four times the ZZ Pauli weight).  ``zx`` in MHz is twice the ZX Pauli
    weight, so that a flat top of ``1 / (4 zx)`` yields a ZX90.  The single
    qubit and ``zy`` entries are Pauli weights in MHz.
    """

    zz: float
    zx: float = 0.0
    zi: float = 0.0
    iz: float = 0.0
    ix: float = 0.0
    iy: float = 0.0
    zy: float = 0.0

    @classmethod
    def from_components(cls, comps: dict[str, float]) -> "PauliCoefficients":
        return cls(
            zz=4 * comps["ZZ"] * GHZ_TO_KHZ,
            zx=2 * comps["ZX"] * GHZ_TO_MHZ,
            zi=comps["ZI"] * GHZ_TO_MHZ,
            iz=comps["IZ"] * GHZ_TO_MHZ,
            ix=comps["IX"] * GHZ_TO_MHZ,
            iy=comps["IY"] * GHZ_TO_MHZ,
            zy=comps["ZY"] * GHZ_TO_MHZ,
        )


CANCELLED_COMPONENTS = ("IX", "IY", "ZY", "ZI")


@dataclass(frozen=True)
class BlockResult:
    transform: BlockTransform
    coefficients: PauliCoefficients
    block: np.ndarray
    components: dict

    def cancelled_block(self) -> np.ndarray:
        """Computational block with IX, IY, ZY (cancellation tone) and ZI (virtual Z) removed."""
        comps = {k: (0.0 if k in CANCELLED_COMPONENTS else v) for k, v in self.components.items()}
        return pauli_reconstruct(comps)


def _closest_unitary(A: np.ndarray) -> np.ndarray:
    W, _ = scipy.linalg.polar(A)
    return W


# Control-qubit-resolved partition: {|000>, |001>}, {|100>, |101>}, rest.
CONTROL_RESOLVED_BLOCKS = (COMPUTATIONAL_LABELS[:2], COMPUTATIONAL_LABELS[2:])


def block_effective_hamiltonian(H: np.ndarray, trunc: TruncationSpec | None = None,
                                blocks=CONTROL_RESOLVED_BLOCKS, min_weight: float = 0.5):
    """Least-action effective Hamiltonian on the union of ``blocks``.

    ``blocks`` is a sequence of label groups; every state outside them forms
    one further block.  Eigenvectors of ``H`` are matched to labels by greedy
    overlap; the block-diagonalizing unitary is the closest unitary to
    ``S S_bd^+`` where ``S_bd`` keeps only the in-block part of the
    eigenvector matrix.  Returns ``(transform, block)`` with ``block`` the
    effective Hamiltonian ordered like the concatenated groups.

    A block eigenvector keeping less than ``min_weight`` of its norm inside
    its own block signals an avoided crossing and raises
    :class:`LabelingError`.
    """
    trunc = _as_trunc(H, trunc)
    energies, vecs = np.linalg.eigh(H)
    perm, _ = assign_labels(vecs, energies, np.real(np.diagonal(H)))
    S = vecs[:, perm]
    E = energies[perm]
    n = H.shape[0]
    group = np.full(n, len(blocks), dtype=int)
    for b, labels in enumerate(blocks):
        for lab in labels:
            group[trunc.index(lab)] = b
    same = np.equal.outer(group, group)
    S_bd = np.where(same, S, 0.0)
    idx = np.array([trunc.index(lab) for labels in blocks for lab in labels])
    weights = np.sum(np.abs(S_bd[:, idx]) ** 2, axis=0)
    if weights.min() < min_weight:
        bad = tuple(trunc.labels()[idx[int(weights.argmin())]])
        raise LabelingError(
            f"block state {bad} retains only {weights.min():.3f} weight in its block",
            pair=(bad, float(weights.min())))
    T = _closest_unitary(S @ S_bd.conj().T)
    block = np.zeros((len(idx), len(idx)), dtype=complex)
    offset = 0
    for labels in blocks:
        sub = idx[offset:offset + len(labels)]
        W = _closest_unitary(S[np.ix_(sub, sub)])
        block[offset:offset + len(labels), offset:offset + len(labels)] = (W * E[sub]) @ W.conj().T
        offset += len(labels)
    block = 0.5 * (block + block.conj().T)
    return BlockTransform(T, tuple(int(i) for i in idx)), block


def least_action_block_diagonalize(Hr: np.ndarray, trunc: TruncationSpec | None = None,
                                   blocks=CONTROL_RESOLVED_BLOCKS,
                                   min_weight: float = 0.5) -> BlockResult:
    """Least-action block diagonalization onto the computational subspace.

    The default groups resolve the control qubit, so the drive's direct X on
    the control is folded into the frame rather than left as an XI term.
    See :func:`block_effective_hamiltonian` for the construction.
    """
    transform, block = block_effective_hamiltonian(Hr, trunc, blocks, min_weight)
    if block.shape != (4, 4):
        raise ValueError("Pauli projection needs four computational labels")
    comps = pauli_components(block)
    return BlockResult(transform, PauliCoefficients.from_components(comps), block, comps)


def block_effective_coupling(H0: np.ndarray, trunc: TruncationSpec | None = None) -> float:
    """Exchange rate (MHz) between |100> and |001> in their least-action 2x2 block."""
    _, block = block_effective_hamiltonian(H0, trunc, (((1, 0, 0), (0, 0, 1)),))
    return float(np.real(block[0, 1]) * GHZ_TO_MHZ)


def target_frequency(spectrum: LabeledSpectrum) -> float:
    """Dressed Q2 frequency E(001) - E(000) in GHz."""
    return spectrum.energy((0, 0, 1)) - spectrum.energy((0, 0, 0))


def driven_coefficients(H0: np.ndarray, Omega: float, trunc: TruncationSpec | None = None,
                        spectrum: LabeledSpectrum | None = None,
                        omega_d: float | None = None, min_weight: float = 0.5) -> BlockResult:
    """Cross-resonance drive on Q1 at the dressed Q2 frequency, block-diagonalized."""
    trunc = _as_trunc(H0, trunc)
    if spectrum is None:
        spectrum = diagonalize_exact(H0, trunc)
    if omega_d is None:
        omega_d = target_frequency(spectrum)
    Hr = rotating_frame_hamiltonian(H0, DriveSpec(Omega, omega_d, 0), trunc, spectrum)
    return least_action_block_diagonalize(Hr, trunc, min_weight=min_weight)
