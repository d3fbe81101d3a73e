"""Controllability criteria for networked sampled-data systems."""
from .combine import analyze, reconcile, run_criteria
from .core import (
    EigenspaceBasis,
    SubsystemEntry,
    SubsystemFamily,
    annihilation_test,
    check_diagonalizable,
    check_necessary,
    check_sufficient_general,
    decompose,
    eigenspace_phis,
    is_pathological,
    pbh_single_continuous,
    pbh_sweep,
    spectrum_union_error,
)
from .report import AnalysisReport, Verdict, to_jsonable
from .special import (
    check_chain,
    check_circle,
    check_scalar,
    check_selfloop,
    check_star,
    circle_eigenvalues,
    is_chain,
    is_cycle,
    is_star,
)

__all__ = [
    "AnalysisReport",
    "EigenspaceBasis",
    "SubsystemEntry",
    "SubsystemFamily",
    "Verdict",
    "analyze",
    "annihilation_test",
    "check_chain",
    "check_circle",
    "check_diagonalizable",
    "check_necessary",
    "check_scalar",
    "check_selfloop",
    "check_star",
    "check_sufficient_general",
    "circle_eigenvalues",
    "decompose",
    "eigenspace_phis",
    "is_chain",
    "is_cycle",
    "is_pathological",
    "is_star",
    "pbh_single_continuous",
    "pbh_sweep",
    "reconcile",
    "run_criteria",
    "spectrum_union_error",
    "to_jsonable",
]
