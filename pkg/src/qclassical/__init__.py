"""Simulate finite-dimensional multi-time quantum processes and decide
whether their projective-measurement statistics are classical, whether the
dynamics are incoherent, NCGD, operationally divisible and invertible."""

from .channels import (
    CPMap,
    Dephase,
    Identity,
    Intervention,
    Observable,
    Outcome,
    Superoperator,
    apply,
    choi_matrix,
    compose,
    dephasing_channel,
    embed_left,
    identity_superop,
    invert,
    kraus_channel,
    observable_from_eigenbasis,
    ordered_basis_matrix,
    projector_superop,
    reset_channel,
    sigma_x_observable,
    sigma_z_observable,
    unitary_channel,
)
from .checkers import (
    AllDiagonal,
    BasisSpanning,
    PreparationSet,
    Single,
    Verdict,
    Witness,
    check_classicality,
    check_classicality_set,
    check_eq12_identity,
    check_incoherence,
    check_invertibility,
    check_ncgd,
    check_theorem_pipeline,
    spanning_preparations,
)
from .errors import (
    DegenerateObservableError,
    DimensionError,
    NotDerivableError,
    NotInvertibleError,
    NotUnitaryError,
    SequenceError,
    SingularTimeError,
)
from .linalg import (
    DensityMatrix,
    SubnormalizedState,
    bloch_vector,
    maximally_mixed,
    partial_trace,
    pure_state,
    state_from_bloch,
    tensor_product,
    trace_distance,
)
from .models import (
    Counterexample,
    DephasingModelParams,
    LorentzianDephasingProcess,
    QuadratureScheme,
    dephasing_separation_instance,
    build_counterexample,
    dephased_trajectory_exact,
    dephased_trajectory_limits,
    dephasing_reduced_state,
    dephasing_semigroup_process,
    ncgd_prediction,
    quadrature_oracle,
    trajectory_table,
)
from .process import (
    DilatedProcess,
    InterventionSequence,
    MarkovProcess,
    TimeGrid,
    evaluate,
    joint_probability,
    markov_from_dilation,
)

__version__ = "0.1.0"
