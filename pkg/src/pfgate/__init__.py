"""Two transmons and a tunable coupler: ZZ-free operating points and gate dynamics."""

__version__ = "0.1.0"

from .circuit import (
    COMPUTATIONAL_LABELS,
    DEFAULT_TRUNCATION,
    CapacitanceModel,
    CircuitError,
    CircuitParams,
    Device,
    DriveSpec,
    TruncationSpec,
    build_drive_operator,
    build_static_hamiltonian,
    load_preset,
    presets,
)
from .effective import (
    LabelingError,
    LabeledSpectrum,
    PauliCoefficients,
    diagonalize,
    driven_coefficients,
    effective_coupling,
    least_action_block_diagonalize,
    numeric_transition_rates,
    rotating_frame_hamiltonian,
    swt_static_coefficients,
    transition_rates,
)
from .zz import (
    IdlePoint,
    SweepResult,
    critical_amplitude,
    decoupling_frequency,
    find_idle_point,
    fit_exponents,
    freedom_amplitude,
    freedom_curve,
    freedom_map_2d,
    static_zz,
    static_zz_sweep,
    total_zz,
)
from .dynamics import (
    CoherenceSpec,
    DriveSegment,
    GateResult,
    PulseSchedule,
    RampEnvelope,
    ZXTable,
    evolve_closed,
    evolve_open,
    full_pf_cycle,
    ramp_fidelities,
    zx90_gate_error,
)
