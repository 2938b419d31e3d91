"""Benchmarking toolkit for simulated QPUs.

Runs QAOA on QUBO instances across backend models, converts per-run
accuracies into self-normalizing H-Scores via a noiseless reference
curve, and ranks or selects backends in a fleet.
"""

__version__ = "0.1.0"

from .backend import (
    BackendModel,
    CompiledCircuit,
    execute,
    load_backend,
    mitigate_readout,
    noiseless_backend,
    route_and_compile,
    save_backend,
    select_layout,
    topology_preset,
)
from .errors import (
    CapacityError,
    GenerationError,
    InvalidChannelError,
    MitigationError,
    RoutingError,
    RunBudgetError,
    RunError,
    ScoringContextError,
    ToniqError,
    ValidationError,
)
from .fleet import FleetRanking, SelectionOutcome, rank_fleet, select_and_pool
from .qaoa import (
    OptimizerConfig,
    QaoaParams,
    QaoaRunResult,
    accuracy_of,
    build_ansatz,
    cost_expectation,
    run_once,
)
from .qubo import (
    QuboInstance,
    brute_force_solve,
    builtin_instances,
    evaluate_cost,
    generate_instance,
    load_instance,
    save_instance,
)
from .scoring import (
    AccuracySamples,
    HScoreReport,
    ScoringCurve,
    build_reference,
    collect_samples,
    compare_distr,
    evaluate_curve,
    h_score,
    robustness,
)
from .simcore import (
    DensityMatrix,
    GateOp,
    NoiseChannel,
    StateVector,
    apply_channel,
    apply_gate,
    apply_readout_error,
    probabilities,
)

__all__ = [
    "__version__",
    "AccuracySamples", "BackendModel", "CapacityError", "CompiledCircuit",
    "DensityMatrix", "FleetRanking", "GateOp", "GenerationError",
    "HScoreReport", "InvalidChannelError", "MitigationError", "NoiseChannel",
    "OptimizerConfig", "QaoaParams", "QaoaRunResult", "QuboInstance",
    "RoutingError", "RunBudgetError", "RunError", "ScoringContextError",
    "ScoringCurve", "SelectionOutcome", "StateVector", "ToniqError",
    "ValidationError", "accuracy_of", "apply_channel", "apply_gate",
    "apply_readout_error", "brute_force_solve", "build_ansatz",
    "build_reference", "builtin_instances", "collect_samples", "compare_distr",
    "cost_expectation", "evaluate_cost", "evaluate_curve", "execute",
    "generate_instance", "h_score", "load_backend", "load_instance",
    "mitigate_readout", "noiseless_backend", "probabilities", "rank_fleet",
    "robustness", "route_and_compile", "run_once", "save_backend",
    "save_instance", "select_and_pool", "select_layout", "topology_preset",
]
