"""Run every applicable criterion, reconcile them with the oracle, pick one verdict."""
from __future__ import annotations

from dataclasses import replace

from ..errors import IllConditioned, InternalInconsistency, NotApplicable
from ..numkernel import DEFAULT_TOL, rank_info
from ..oracle import kalman_rank
from ..sysmodel import discretize
from .core import (
    check_diagonalizable,
    check_necessary,
    check_sufficient_general,
    decompose,
    is_pathological,
)
from .report import AnalysisReport, Verdict
from .special import check_chain, check_circle, check_scalar, check_selfloop, check_star

PATHOLOGY_NOTE = "node sampling pathological, eliminated by network"


def oracle_report(oracle, singular):
    verdict = Verdict.CONTROLLABLE if oracle.reachable else Verdict.UNCONTROLLABLE
    evidence = {"rank": oracle.rank, "dim": oracle.dim,
                "deficient_eigenvalues": list(oracle.deficient_eigenvalues),
                "controllable_to_origin": oracle.controllable_to_origin}
    flags = ("reachability_based",) if singular else ()
    return AnalysisReport(verdict, "oracle_reachability", evidence,
                          (("oracle_pbh", oracle.margin),), flags)


def _oracle_summary(oracle):
    return {"reachable": oracle.reachable, "rank": oracle.rank, "dim": oracle.dim,
            "controllable_to_origin": oracle.controllable_to_origin}


def reconcile(reports, oracle, singular, label="system"):
    """Pick the first definite report; every definite report must match the oracle."""
    expected = Verdict.CONTROLLABLE if oracle.reachable else Verdict.UNCONTROLLABLE
    for r in reports:
        if r.verdict.definite and r.verdict is not expected:
            raise InternalInconsistency(
                f"{label}: criterion {r.criterion} says {r.verdict.value} but the "
                f"oracle finds rank {oracle.rank}/{oracle.dim}")
    chosen = next((r for r in reports if r.verdict.definite), None)
    if chosen is None:
        chosen = oracle_report(oracle, singular)
    evidence = dict(chosen.evidence)
    evidence["criteria"] = [{"criterion": r.criterion, "verdict": r.verdict} for r in reports]
    evidence["oracle"] = _oracle_summary(oracle)
    flags = chosen.flags
    if singular:
        flags = tuple(dict.fromkeys(flags + ("reachability_based",)))
        evidence["controllable_to_origin"] = oracle.controllable_to_origin
    return replace(chosen, evidence=evidence, flags=flags)


def run_criteria(sys, ss, tol=DEFAULT_TOL, exhaustive=True):
    """Applicable criteria in priority order, plus notes on skipped ones.

    With ``exhaustive=False`` evaluation stops at the first definite verdict.
    """
    reports, notes = [], []
    fam = None

    def done():
        return not exhaustive and any(r.verdict.definite for r in reports)

    for fn in (check_scalar, check_selfloop):
        try:
            reports.append(fn(sys, tol))
        except NotApplicable:
            pass
    if done():
        return reports, notes, fam
    try:
        fam = decompose(ss, sys.topo, tol)
    except IllConditioned as exc:
        notes.append(f"decomposition skipped: {exc}")
        return reports, notes, None
    steps = [lambda: check_necessary(ss, fam, tol),
             lambda: check_chain(ss, sys.topo, tol),
             lambda: check_star(ss, sys.topo, tol, node=sys.node),
             lambda: check_circle(ss, sys.topo, tol, fam=fam)]
    if fam.jordan.is_diagonalizable and fam.all_nonsingular:
        steps.append(lambda: check_diagonalizable(ss, fam, tol))
    steps.append(lambda: check_sufficient_general(ss, fam, tol))
    for step in steps:
        if done():
            break
        try:
            reports.append(step())
        except NotApplicable:
            pass
    return reports, notes, fam


def analyze(sys, tol=DEFAULT_TOL, exhaustive=False):
    """Decide controllability of a networked sampled-data system.

    Criteria run in a fixed priority order (special dynamics, necessary
    conditions, structured topologies, diagonalizable topology, general
    eigenspace test); the first definite verdict wins.  The oracle always
    runs: it decides when every criterion is inconclusive, and any definite
    verdict contradicting it raises :class:`InternalInconsistency`.
    Verdicts are reachability-based (flagged) when ``Phi_s`` is singular.
    ``exhaustive=True`` evaluates every applicable criterion instead of
    stopping at the first definite one, so all of them face the oracle.
    """
    ss = discretize(sys)
    reports, notes, fam = run_criteria(sys, ss, tol, exhaustive)
    oracle = kalman_rank(ss.phi_s, ss.psi_s, tol)
    if fam is not None:
        singular = not fam.all_nonsingular
    else:
        singular = oracle.dim > 0 and not _nonsingular(ss.phi_s, tol)
    rep = reconcile(reports, oracle, singular)
    patho, witnesses = is_pathological(sys.node.A, sys.h, tol)
    evidence = dict(rep.evidence)
    if notes:
        evidence["notes"] = notes
    if patho:
        evidence["aliasing"] = witnesses
        if rep.verdict is Verdict.CONTROLLABLE:
            evidence["note"] = PATHOLOGY_NOTE
        rep = replace(rep, evidence=evidence).with_flags("pathological_node_sampling")
    else:
        rep = replace(rep, evidence=evidence)
    return rep


def _nonsingular(m, tol):
    return rank_info(m, tol).rank == m.shape[0]
