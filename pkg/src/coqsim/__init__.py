"""Cascaded open-quantum-system simulator.

A coherently driven source cavity feeds a two-state atom through a
unidirectional channel. The package integrates the joint master equation,
unravels it into Monte-Carlo photodetection trajectories, integrates the
reduced classically-driven atom equation, and provides the estimators that
connect the three.
"""

__version__ = "0.1.0"

from .hilbert import (
    DensityMatrix,
    Operator,
    SpaceMismatchError,
    StateVector,
    Subsystem,
    TruncationWarning,
    coherent_state,
    composite_space,
    expectation,
    fock_annihilation,
    fock_space,
    fock_state,
    min_fock_levels,
    partial_trace,
    product_state,
    purity,
    qubit_excited,
    qubit_ground,
    qubit_lowering,
    qubit_space,
    schmidt_entropy,
    tensor,
    von_neumann_entropy,
)
from .generators import (
    Channel,
    CoherentField,
    ConstantAmplitude,
    ConstantDrive,
    FockField,
    GaussianPulse,
    Generator,
    JumpChannel,
    ModelParams,
    RectPulse,
    alpha_of_t,
    build_cascaded,
    build_laser,
    build_reduced_atom,
    coherent_amplitude,
    initial_field_state,
)
from .master import (
    ConvergenceError,
    PositivityError,
    TimeGrid,
    integrate,
    lindblad_rhs,
    steady_state,
)
from .trajectory import (
    EnsembleStats,
    ImpossibleJumpError,
    JumpEvent,
    StepSizeError,
    TrajectoryRecord,
    apply_jump,
    jump_probabilities,
    mix_seed,
    nojump_step,
    nonhermitian_hamiltonian,
    run_ensemble,
    run_trajectory,
    write_records_jsonl,
)
from .analysis import (
    ComparisonReport,
    JumpStatistics,
    atomic_coherence,
    bloch_vector,
    compare_atom_dynamics,
    decoherence_rate_fit,
    estimate_rabi_frequency,
    excitation_probability,
    factorization_deficit,
    jump_statistics,
)
