"""Mirror-prox sliding for non-smooth convex-concave saddle problems.

The library solves variational inequalities z* with <H(z*) + grad G(z*),
z - z*> >= 0 built from saddle problems, under an inexact (M, delta) first
order oracle for H, and provides a simulated decentralized harness that turns
consensus-constrained multi-agent saddle problems into penalized single
problems of that form.
"""

from .errors import (
    CertificationError,
    ConfigurationError,
    DegenerateNetworkError,
    DimensionError,
    DomainError,
    ParameterError,
)
from .geometry import (
    ENTROPY_CLIP,
    NEGATIVE_ENTROPY,
    SQUARED_EUCLIDEAN,
    TAU_FEAS,
    Ball,
    Box,
    FeasibleSet,
    GeometrySpec,
    ProductSet,
    Simplex,
    bregman_divergence,
    omega_sq_bound,
    project,
    prox_two_anchor,
)
from .harness import (
    RunConfig,
    RunReport,
    build_pipeline,
    emit_outputs,
    make_stochastic_oracle,
    pick_N,
    run_experiment,
)
from .instances import (
    MATCHING_PENNIES,
    CertificateReport,
    ConsensusQP,
    accelerated_projected_gradient,
    certify_inexact_oracle,
    exact_gap_matrix_game,
    l1_saddle_gap,
    load_instance,
    make_consensus_qp,
    make_l1_saddle,
    make_matrix_game,
    operator_bound_L0,
    random_l1_saddle,
    random_matrix_game,
    save_instance,
    sup_gap_skew_linear,
)
from .network import (
    TOPOLOGY_KINDS,
    NetworkModel,
    build_topology,
    communication_round,
    consensus_violation,
    export_matrix_csv,
    load_network_spec,
    matrix_sqrt_psd,
    save_network_spec,
)
from .penalty import (
    PenaltyCoefficients,
    StackedSPP,
    build_penalized_vi,
    penalty_coefficients,
    sample_operator_bound,
)
from .sliding import (
    TRACE_COLUMNS,
    RunTrace,
    SlidingSchedule,
    VIProblem,
    deterministic_schedule,
    mps_run,
    q_gap,
    smps_run,
    stochastic_schedule,
    trace_to_csv,
)

__all__ = [
    "Ball",
    "Box",
    "CertificateReport",
    "CertificationError",
    "ConfigurationError",
    "ConsensusQP",
    "DegenerateNetworkError",
    "DimensionError",
    "DomainError",
    "ENTROPY_CLIP",
    "FeasibleSet",
    "GeometrySpec",
    "MATCHING_PENNIES",
    "NEGATIVE_ENTROPY",
    "NetworkModel",
    "ParameterError",
    "PenaltyCoefficients",
    "ProductSet",
    "RunConfig",
    "RunReport",
    "RunTrace",
    "SQUARED_EUCLIDEAN",
    "Simplex",
    "SlidingSchedule",
    "StackedSPP",
    "TAU_FEAS",
    "TOPOLOGY_KINDS",
    "TRACE_COLUMNS",
    "VIProblem",
    "accelerated_projected_gradient",
    "bregman_divergence",
    "build_pipeline",
    "build_penalized_vi",
    "build_topology",
    "certify_inexact_oracle",
    "communication_round",
    "consensus_violation",
    "deterministic_schedule",
    "emit_outputs",
    "exact_gap_matrix_game",
    "export_matrix_csv",
    "l1_saddle_gap",
    "load_instance",
    "load_network_spec",
    "make_consensus_qp",
    "make_l1_saddle",
    "make_matrix_game",
    "make_stochastic_oracle",
    "matrix_sqrt_psd",
    "mps_run",
    "omega_sq_bound",
    "operator_bound_L0",
    "penalty_coefficients",
    "pick_N",
    "project",
    "prox_two_anchor",
    "q_gap",
    "random_l1_saddle",
    "random_matrix_game",
    "run_experiment",
    "sample_operator_bound",
    "save_instance",
    "save_network_spec",
    "smps_run",
    "stochastic_schedule",
    "sup_gap_skew_linear",
    "trace_to_csv",
]

__version__ = "0.1.0"
