"""Pulse-sequence compiler and master-equation simulator for a
three-level double-dot qubit, with a singlet-triplet exchange-gate
baseline and a capacitively coupled two-qubit conditional-phase gate."""

from .compiler import (
    ControlParams,
    GateSpec,
    PhaseRecord,
    SequenceOrder,
    compile_rotation,
    compose_sequence,
    equal_up_to_global_phase,
    gate_A,
    gate_B,
    gate_P,
    logical_block,
    pauli_decompose,
    rotation_from_axis_angle,
    target_rotation,
)
from .dynamics import (
    DensityState,
    DephasingSpec,
    Trajectory,
    evolve_plateau,
    evolve_ramp,
    purity,
    run_schedule,
    trace_distance,
)
from .fidelity import FidelityReport, SweepResult, gate_fidelity, hybrid_sweep
from .model import (
    HBAR,
    VALLEY_RATIO,
    Anticrossings,
    HybridParams,
    build_hamiltonian,
    find_anticrossings,
    spectrum,
)
from .pulses import (
    CalibratedGate,
    CalibrationFailed,
    CompiledRotation,
    PulseSchedule,
    PulseSegment,
    adiabatic_schedule,
    calibrate_gate,
    landau_zener_probability,
    phase_gate_time,
    rabi_pi_time,
    schedule_rotation,
)
from .scenario import Scenario, parse_scenario, scenario_to_text
from .singlet_triplet import (
    MATERIALS,
    STParams,
    comparison_sweep,
    st_fidelity,
    st_optimize_eps,
)
from .twoqubit import (
    TwoQubitParams,
    build_joint_hamiltonian,
    conditional_phase_schedule,
    truth_table,
)

__version__ = "0.1.0"
