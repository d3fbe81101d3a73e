"""Shortcuts for structured topologies (chain, star, cycle) and special node
dynamics (scalar nodes, self-loop nodes ``A = I``)."""
from __future__ import annotations

import math

import numpy as np

from ..errors import NotApplicable, ZeroWeight
from ..numkernel import DEFAULT_TOL, eigen_decomposition, eigvals, kron, norm2, rank_info
from ..spectral import generalized_chains
from ..sysmodel import STRUCTURAL_ZERO
from .core import _fmt, check_diagonalizable, decompose, is_pathological, pbh_single_continuous
from .report import AnalysisReport, Verdict

SELF_LOOP_TOL = 1e-12


# --- pattern recognition -------------------------------------------------

def _support(w):
    return np.abs(np.asarray(w)) > STRUCTURAL_ZERO


def chain_pattern(n):
    s = np.zeros((n, n), dtype=bool)
    for i in range(1, n):
        s[i, i - 1] = True
    return s


def star_pattern(n):
    s = np.zeros((n, n), dtype=bool)
    s[1:, 0] = True
    return s


def cycle_pattern(n):
    s = chain_pattern(n)
    s[0, n - 1] = True
    return s


def is_chain(w):
    n = np.asarray(w).shape[0]
    return n >= 2 and np.array_equal(_support(w), chain_pattern(n))


def is_star(w):
    n = np.asarray(w).shape[0]
    return n >= 3 and np.array_equal(_support(w), star_pattern(n))


def is_cycle(w):
    n = np.asarray(w).shape[0]
    return n >= 2 and np.array_equal(_support(w), cycle_pattern(n))


def _single_driver(delta):
    return tuple(delta) == (1,) + (0,) * (len(delta) - 1)


def _star_drivers(delta):
    return tuple(delta) == (1, 0) + (1,) * (len(delta) - 2)


# --- chain and star --------------------------------------------------------

def _span_test(ss, depth, tol):
    """For each eigenvalue of ``e^{Ah}`` stack ``xi^1..xi^beta`` of every
    generalized chain (``beta = min(depth, gamma)``) and test that the stack
    maps injectively through ``B(h)``."""
    eah, hh, bh = ss.eAh, ss.Hh, ss.Bh
    bscale = max(norm2(bh), np.finfo(float).tiny)
    results = []
    for cl, null in eigen_decomposition(eah, tol):
        chains = generalized_chains(eah, hh, cl.value, depth, tol, eigvecs=null)
        rows = []
        for ch in chains:
            rows.extend(ch.padded(ch.usable_length(depth)))
        s = np.vstack(rows)
        norms = np.linalg.norm(s, axis=1)
        s = s / np.where(norms > 0, norms, 1.0)[:, None]
        info = rank_info(s @ bh, tol, scale=bscale)
        results.append({"sigma": cl.value, "chains": chains, "dim": len(rows),
                        "rank": info.rank, "margin": info.margin,
                        "ok": info.rank == len(rows)})
    return results


def _span_report(results, criterion):
    margins = tuple((f"span@{_fmt(r['sigma'])}", r["margin"]) for r in results)
    lengths = [{"sigma": r["sigma"], "gamma": [c.length for c in r["chains"]],
                "annihilated": [c.annihilated for c in r["chains"]]} for r in results]
    failing = [r for r in results if not r["ok"]]
    if not failing:
        return AnalysisReport(Verdict.CONTROLLABLE, criterion,
                              {"conditions": ["eta B(h) != 0 on every chain span"],
                               "chains": lengths}, margins)
    f = failing[0]
    return AnalysisReport(Verdict.INCONCLUSIVE, criterion,
                          {"failing_subspace": {"sigma": f["sigma"], "dim": f["dim"],
                                                "rank": f["rank"]},
                           "chains": lengths}, margins)


def check_chain(ss, topo, tol=DEFAULT_TOL):
    """Sufficient test for a directed chain driven at its root."""
    if not is_chain(topo.W) or not _single_driver(topo.delta):
        raise NotApplicable("requires a directed chain driven at node 1 only")
    return _span_report(_span_test(ss, topo.N, tol), "chain_topology")


def check_star(ss, topo, tol=DEFAULT_TOL, node=None):
    """Sufficient test for a directed star with every node but node 2 driven.

    When every generalized chain has length one (and does not terminate by
    annihilation) and ``node`` is given, the test reduces to controllability
    of ``(A, B)`` plus a non-pathological period.
    """
    if not is_star(topo.W) or not _star_drivers(topo.delta):
        raise NotApplicable("requires a directed star driven everywhere except node 2")
    results = _span_test(ss, 2, tol)
    simple = all(c.length == 1 and not c.annihilated for r in results for c in r["chains"])
    if simple and node is not None:
        cont = pbh_single_continuous(node.A, node.B, tol)
        patho, witnesses = is_pathological(node.A, ss.h, tol)
        ev = {"node_pair": cont.verdict, "pathological": patho, "aliasing": witnesses}
        if cont.verdict is Verdict.CONTROLLABLE and not patho:
            ev["conditions"] = ["(A, B) controllable", "h non-pathological about A",
                                "all generalized chains of length 1"]
            return AnalysisReport(Verdict.CONTROLLABLE, "star_node_pair", ev, cont.margins)
        return AnalysisReport(Verdict.INCONCLUSIVE, "star_node_pair", ev, cont.margins)
    return _span_report(results, "star_topology")


# --- cycle -----------------------------------------------------------------

def circle_eigenvalues(w, tol=DEFAULT_TOL):
    """Closed-form spectrum of a weighted directed cycle.

    With ``wbar = w_{1N} * prod w_{i,i-1}`` the eigenvalues are
    ``|wbar|^{1/N} exp(j phi_i)``, ``phi_i = 2 i pi / N`` for ``wbar > 0`` and
    ``(2i - 1) pi / N`` for ``wbar < 0``, ``i = 1..N``.
    """
    w = np.real(np.asarray(w, dtype=np.complex128))
    n = w.shape[0]
    if n < 2 or w.shape != (n, n):
        raise NotApplicable("a cycle needs at least two nodes")
    pattern = cycle_pattern(n)
    if np.any(_support(w) & ~pattern):
        raise NotApplicable("W has edges outside the cycle")
    weights = [w[0, n - 1]] + [w[i, i - 1] for i in range(1, n)]
    if any(abs(x) <= STRUCTURAL_ZERO for x in weights):
        raise ZeroWeight("cycle has a zero weight")
    wbar = float(np.prod(weights))
    mag = abs(wbar) ** (1.0 / n)
    if wbar > 0:
        phases = [2 * i * math.pi / n for i in range(1, n + 1)]
    else:
        phases = [(2 * i - 1) * math.pi / n for i in range(1, n + 1)]
    return [complex(mag * np.exp(1j * p)) for p in phases]


def check_circle(ss, topo, tol=DEFAULT_TOL, fam=None):
    """Cycle driven at node 1: only the subsystem and shared-eigenvalue
    conditions need checking, the topology pair is controllable by structure."""
    if not is_cycle(topo.W) or not _single_driver(topo.delta):
        raise NotApplicable("requires a directed cycle driven at node 1 only")
    closed = circle_eigenvalues(topo.W, tol)
    if fam is None:
        fam = decompose(ss, topo, tol)
    numeric = [e.lam for e in fam.entries]
    dev = max(min(abs(c - v) for v in numeric) for c in closed)
    rep = check_diagonalizable(ss, fam, tol, topology_known=True)
    ev = dict(rep.evidence)
    ev["cycle_eigenvalues"] = closed
    ev["cycle_eigenvalue_deviation"] = dev
    return AnalysisReport(rep.verdict, "circle_topology", ev, rep.margins, rep.flags)


# --- special node dynamics --------------------------------------------------

def _affine_verdict(cont, phi_s, tol, criterion, evidence):
    vals = eigvals(phi_s)
    rho = float(np.max(np.abs(vals)))
    nonsingular = bool(np.min(np.abs(vals)) > tol.cluster_radius(rho))
    evidence = dict(evidence)
    evidence["continuous_verdict"] = cont.verdict
    evidence["sampled_transition_nonsingular"] = nonsingular
    if cont.verdict is Verdict.CONTROLLABLE:
        evidence["conditions"] = ["continuous network controllable"]
        return AnalysisReport(Verdict.CONTROLLABLE, criterion, evidence, cont.margins)
    evidence["continuous_witness"] = cont.evidence.get("witness")
    evidence["continuous_eigenvalue"] = cont.evidence.get("eigenvalue")
    if nonsingular:
        return AnalysisReport(Verdict.UNCONTROLLABLE, criterion, evidence, cont.margins)
    return AnalysisReport(Verdict.INCONCLUSIVE, criterion, evidence, cont.margins,
                          ("singular_transition",))


def scalar_transition(a, c, w, h):
    """``e^{ah} I + (c/a)(e^{ah} - 1) W`` for scalar nodes."""
    w = np.asarray(w, dtype=np.complex128)
    eah = math.exp(a * h)
    return eah * np.eye(w.shape[0]) + (c / a) * math.expm1(a * h) * w


def check_scalar(sys, tol=DEFAULT_TOL):
    """Scalar nodes: the sampled verdict follows the continuous network."""
    nd = sys.node
    if nd.n != 1:
        raise NotApplicable("node dimension is not 1")
    a = float(nd.A[0, 0].real)
    if a == 0:
        raise NotApplicable("scalar node with a = 0")
    c = float(nd.HC[0, 0].real)
    b = np.real(nd.B[0])
    big_n = sys.N
    w = np.real(sys.topo.W)
    phi = a * np.eye(big_n) + c * w
    psi = np.kron(np.diag(sys.topo.delta).astype(float), b[None, :])
    cont = pbh_single_continuous(phi, psi, tol)
    phi_s = scalar_transition(a, c, w, sys.h)
    return _affine_verdict(cont, phi_s, tol, "scalar_dynamics",
                           {"a": a, "b": b, "c": c})


def check_selfloop(sys, tol=DEFAULT_TOL):
    """Self-loop nodes ``A = I``: sampled verdict follows ``I + W (x) HC``."""
    nd = sys.node
    if np.max(np.abs(nd.A - np.eye(nd.n))) > SELF_LOOP_TOL:
        raise NotApplicable("A is not the identity")
    coupling = kron(sys.topo.W, nd.HC)
    nn = coupling.shape[0]
    phi = np.eye(nn) + coupling
    psi = kron(sys.topo.Delta, nd.B)
    cont = pbh_single_continuous(phi, psi, tol)
    h = sys.h
    phi_s = math.exp(h) * np.eye(nn) + math.expm1(h) * coupling
    return _affine_verdict(cont, phi_s, tol, "selfloop_dynamics", {})


__all__ = [
    "check_chain",
    "check_circle",
    "check_scalar",
    "check_selfloop",
    "check_star",
    "circle_eigenvalues",
    "is_chain",
    "is_cycle",
    "is_star",
    "scalar_transition",
]
