"""Relay-BP decoding toolkit for quantum LDPC circuit-noise problems.

Min-sum belief propagation with disordered memory strengths (DMem-BP),
chained into the Relay-BP-S ensemble, plus problem construction and
transformation, an exhaustive oracle, and a seeded Monte Carlo benchmark
harness with CSV/figure reporting.
"""

from .gf2 import BitVector, SparseBinaryMatrix, identical_column_groups, matvec, xor
from .problem import (
    DecodingProblem,
    ProblemFormatError,
    compress_columns,
    drop_inert_columns,
    load_problem,
    log_prior_ratios,
    save_problem,
    xz_split,
)
from .builders import (
    build_bb_preset,
    build_bivariate_bicycle,
    build_repetition,
    build_surface_phenomenological,
)
from .bp import BeliefState, LegOutcome, init_leg, run_leg
from .relay import (
    PRESETS,
    DecodeResult,
    RelayDecoder,
    RelaySchedule,
    Solution,
    decode,
    sample_gammas,
    weight,
)
from .oracle import OracleResult, brute_force_min_weight, logical_failure
from .bench import (
    BenchStats,
    CompareResult,
    SweepGrid,
    compare_ensembling,
    run_monte_carlo,
    sample_error,
    sweep_memory_strengths,
)

__version__ = "0.1.0"

__all__ = [
    "BitVector",
    "SparseBinaryMatrix",
    "identical_column_groups",
    "matvec",
    "xor",
    "DecodingProblem",
    "ProblemFormatError",
    "compress_columns",
    "drop_inert_columns",
    "load_problem",
    "log_prior_ratios",
    "save_problem",
    "xz_split",
    "build_bb_preset",
    "build_bivariate_bicycle",
    "build_repetition",
    "build_surface_phenomenological",
    "BeliefState",
    "LegOutcome",
    "init_leg",
    "run_leg",
    "PRESETS",
    "DecodeResult",
    "RelayDecoder",
    "RelaySchedule",
    "Solution",
    "decode",
    "sample_gammas",
    "weight",
    "OracleResult",
    "brute_force_min_weight",
    "logical_failure",
    "BenchStats",
    "CompareResult",
    "SweepGrid",
    "compare_ensembling",
    "run_monte_carlo",
    "sample_error",
    "sweep_memory_strengths",
    "__version__",
]
