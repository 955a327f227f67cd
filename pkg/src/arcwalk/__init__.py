"""Shot-based statevector simulator for quantum counting walks.

Builds counter circuits in several designs, runs them shot by shot under an
optional gate-fidelity noise model with mid-circuit measurement schedules,
and ships a small market-statistics toolkit for comparing walk output
against heavy-tailed return data.
"""

__version__ = "0.1.0"

from .circuits import (
    DESIGNS,
    Circuit,
    CircuitParseError,
    NoAncillaError,
    WalkConfig,
    arc_counter_circuit,
    arc_walk_circuit,
    binary_counter_circuit,
    build_circuit,
    full_adder_block,
    halving_weights,
    increment_circuit,
    or_inplace_block,
    random_jump_circuit,
    with_cascading_disjunctions,
)
from .engine import (
    DistanceCell,
    DistanceTable,
    ShotHistogram,
    ZenoSchedule,
    arc_expected,
    derive_seed,
    distance_table,
    decode,
    run_positions,
    run_shots,
    run_single_shot,
    single_qubit_zeno,
    single_qubit_zeno_sampled,
    two_way_distribution,
    walk_step_changes,
    zeno_experiment,
)
from .market import (
    CorrelationReport,
    DegenerateVarianceError,
    LengthMismatchError,
    MetroCorrelation,
    MetroMonthlyRecord,
    ParseError,
    PriceSeries,
    SchemaError,
    TooShortError,
    excess_kurtosis,
    fit_normal,
    housing_correlations,
    ingest_metro,
    ingest_prices,
    pearson,
    relative_changes,
)
from .noise import (
    DEFAULT_NOISE,
    HIGH_END_NOISE,
    GateCensus,
    NoiseModel,
    apply_readout_noise,
    census,
    estimate_fidelity,
    noisy_apply,
)
from .sim import (
    DegenerateStateError,
    GateOp,
    InvalidTargetError,
    MeasurementRecord,
    OutOfRangeError,
    StateVector,
    new_state,
)

__all__ = [
    "__version__",
    "DESIGNS",
    "DEFAULT_NOISE",
    "HIGH_END_NOISE",
    "Circuit",
    "CircuitParseError",
    "CorrelationReport",
    "DegenerateStateError",
    "DegenerateVarianceError",
    "DistanceCell",
    "DistanceTable",
    "GateCensus",
    "GateOp",
    "InvalidTargetError",
    "LengthMismatchError",
    "MeasurementRecord",
    "MetroCorrelation",
    "MetroMonthlyRecord",
    "NoAncillaError",
    "NoiseModel",
    "OutOfRangeError",
    "ParseError",
    "PriceSeries",
    "SchemaError",
    "ShotHistogram",
    "StateVector",
    "TooShortError",
    "WalkConfig",
    "ZenoSchedule",
    "apply_readout_noise",
    "arc_counter_circuit",
    "arc_expected",
    "arc_walk_circuit",
    "binary_counter_circuit",
    "build_circuit",
    "census",
    "decode",
    "derive_seed",
    "distance_table",
    "estimate_fidelity",
    "excess_kurtosis",
    "fit_normal",
    "full_adder_block",
    "halving_weights",
    "housing_correlations",
    "increment_circuit",
    "ingest_metro",
    "ingest_prices",
    "new_state",
    "noisy_apply",
    "or_inplace_block",
    "pearson",
    "random_jump_circuit",
    "relative_changes",
    "run_positions",
    "run_shots",
    "run_single_shot",
    "single_qubit_zeno",
    "single_qubit_zeno_sampled",
    "two_way_distribution",
    "walk_step_changes",
    "with_cascading_disjunctions",
    "zeno_experiment",
]
