"""Controllability analysis of networked sampled-data LTI systems.

Identical nodes ``x' = A x + B u`` are coupled through a weighted digraph
``W`` and an inner coupling ``H C``; control and transmission channels are
sampled with a zero-order hold.  :func:`analyze` returns a three-valued
verdict with the criterion that produced it, cross-checked by a brute-force
oracle.
"""
from .analyzer import AnalysisReport, Verdict, analyze, is_pathological
from .errors import (
    InternalInconsistency,
    NetCtrlError,
    ParseError,
    ValidationError,
)
from .fixtures import fixture
from .multirate import analyze_multirate, lift_cms, lift_tms
from .numkernel import DEFAULT_TOL, Tolerance
from .oracle import kalman_rank, scan_periods, steer
from .sysmodel import (
    MultiRateSpec,
    NetworkedSystem,
    NetworkTopology,
    NodeDynamics,
    SampledSystem,
    discretize,
    make_system,
    parse_document,
    parse_system,
)

__version__ = "0.1.0"

__all__ = [
    "AnalysisReport",
    "DEFAULT_TOL",
    "InternalInconsistency",
    "MultiRateSpec",
    "NetCtrlError",
    "NetworkTopology",
    "NetworkedSystem",
    "NodeDynamics",
    "ParseError",
    "SampledSystem",
    "Tolerance",
    "ValidationError",
    "Verdict",
    "analyze",
    "analyze_multirate",
    "discretize",
    "fixture",
    "is_pathological",
    "kalman_rank",
    "lift_cms",
    "lift_tms",
    "make_system",
    "parse_document",
    "parse_system",
    "scan_periods",
    "steer",
]
