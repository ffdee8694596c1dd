"""Self-stabilizing barrier synchronizer simulator, causal wave verifiers and idempotent aggregation."""

from .aggregation import (
    CATALOG,
    InfimumOp,
    RSystem,
    TaskSpec,
    check_laws,
    cs_handlers,
    fold,
    min_plus,
    oracle_ball_infimum,
    oracle_r_operator,
    run_computation,
)
from .causality import (
    build_dag,
    cut_k,
    lift,
    verify_strong_wave,
    verify_wave,
    verify_wavelet,
)
from .errors import UnisonError
from .phase_clock import IncSystem, check_WU, check_WU0
from .protocol import Configuration, ProtocolParams, default_params, step
from .scheduler import Daemon, Execution, run
from .topology import Graph, metrics, parse_graph

__all__ = [
    "CATALOG",
    "Configuration",
    "Daemon",
    "Execution",
    "Graph",
    "IncSystem",
    "InfimumOp",
    "ProtocolParams",
    "RSystem",
    "TaskSpec",
    "UnisonError",
    "build_dag",
    "check_WU",
    "check_WU0",
    "check_laws",
    "cs_handlers",
    "cut_k",
    "default_params",
    "fold",
    "lift",
    "metrics",
    "min_plus",
    "oracle_ball_infimum",
    "oracle_r_operator",
    "parse_graph",
    "run",
    "run_computation",
    "step",
    "verify_strong_wave",
    "verify_wave",
    "verify_wavelet",
]

__version__ = "0.1.0"
