"""Robust control-pulse synthesis for qubit arrays with fixed ZZ coupling.

Driving a checkerboard-like subarray splits the always-on interaction
Hamiltonian into commuting star blocks (a driven center plus undriven
boundary neighbors).  Optimal control on each block then implements a
target gate on the center while actively cancelling the coupling on the
boundary, and a max-min optimization over interval-uncertain couplings,
drive amplitudes, and detunings makes the result robust to imperfect
device characterization.
"""

from .calibration import (
    PeakSet,
    SpectroscopyCluster,
    cluster_from_graph,
    oracle_peaks,
    predict_one_photon_peaks,
    predict_peaks,
    predict_two_photon_peaks,
    recover_frequency,
)
from .compiler import (
    Circuit,
    GateInstruction,
    PulseLibrary,
    Schedule,
    compile_circuit,
    ideal_circuit_unitary,
    parse_circuit,
    simulate_schedule,
    verify_schedule,
)
from .hamiltonian import (
    ControlVector,
    ParameterPoint,
    control_operator,
    drift_operator,
    envelope_at_bin,
    hamiltonian_slice,
    pauli_on,
)
from .lattice import (
    Block,
    DrivingPattern,
    QubitGraph,
    build_chain,
    build_honeycomb,
    build_square,
    decompose_blocks,
    honeycomb_fragment,
    load_graph,
    save_graph,
    single_qubit_pattern,
    two_qubit_pattern,
    validate_pattern,
)
# note: the dispatcher zzpulse.optimize.optimize is reachable through the
# submodule; re-exporting it here would shadow the submodule name
from .optimize import (
    OptimizationConfig,
    OptimizationResult,
    optimize_avg,
    optimize_scp,
)
from .propagation import (
    PropagationRecord,
    TargetGate,
    evolve_array,
    fidelity,
    fidelity_gradient,
    overlap_fidelity,
    propagate,
    readout_invariance_check,
    target_gate,
)
from .uncertainty import (
    UncertaintySpec,
    WorstCase,
    coherence_bound,
    hypercube_corners,
    sample_interior,
    worst_case_fidelity,
)

__version__ = "0.1.0"

__all__ = [
    "Block",
    "Circuit",
    "ControlVector",
    "DrivingPattern",
    "GateInstruction",
    "OptimizationConfig",
    "OptimizationResult",
    "ParameterPoint",
    "PeakSet",
    "PropagationRecord",
    "PulseLibrary",
    "QubitGraph",
    "Schedule",
    "SpectroscopyCluster",
    "TargetGate",
    "UncertaintySpec",
    "WorstCase",
    "build_chain",
    "build_honeycomb",
    "build_square",
    "cluster_from_graph",
    "coherence_bound",
    "compile_circuit",
    "control_operator",
    "decompose_blocks",
    "drift_operator",
    "envelope_at_bin",
    "evolve_array",
    "fidelity",
    "fidelity_gradient",
    "hamiltonian_slice",
    "honeycomb_fragment",
    "hypercube_corners",
    "ideal_circuit_unitary",
    "load_graph",
    "optimize_avg",
    "optimize_scp",
    "oracle_peaks",
    "overlap_fidelity",
    "parse_circuit",
    "pauli_on",
    "predict_one_photon_peaks",
    "predict_peaks",
    "predict_two_photon_peaks",
    "propagate",
    "readout_invariance_check",
    "recover_frequency",
    "save_graph",
    "simulate_schedule",
    "single_qubit_pattern",
    "target_gate",
    "two_qubit_pattern",
    "validate_pattern",
    "verify_schedule",
    "worst_case_fidelity",
]
