"""Decomposition of the sampled network and the general controllability tests.

For every eigenvalue ``lam`` of the topology matrix ``W`` the subsystem
matrix ``E = e^{Ah} + lam H(h)`` is formed; the spectra of these small
matrices make up the spectrum of ``Phi_s``, and the eigenvectors of ``Phi_s``
are assembled from left Jordan chains of ``W`` and generalized chains of
``E`` about ``H(h)``::

    eta^k = sum_{t=1..k} v^{k-t+1} (x) xi^t,      k = 1 .. min(alpha, gamma)

The PBH test "``eta Psi_s != 0`` for every left eigenvector" is then checked
eigenvalue by eigenvalue on these bases.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import DimensionMismatch, NotApplicable, UnknownEigenvalue
from ..numkernel import (
    DEFAULT_TOL,
    as_cmatrix,
    cluster_values,
    eig_clusters,
    eigen_decomposition,
    kron,
    left_null_space,
    norm2,
    orth_rows,
    pbh_rank,
    rank_info,
)
from ..spectral import generalized_chains, jordan_structure
from .report import AnalysisReport, Verdict

_TINY = np.finfo(float).tiny


# --- PBH helpers -----------------------------------------------------------

@dataclass(frozen=True)
class PencilFailure:
    """Eigenvalue where ``[s I - a, b]`` loses rank, with a left null vector."""

    value: complex
    rank: int
    deficit: int
    margin: float
    witness: np.ndarray


def _pencil_null(a, b, s):
    n = a.shape[0]
    nb = norm2(b)
    bs = b * (max(norm2(a), 1.0) / nb) if nb > 0 else b
    u, _, _ = np.linalg.svd(np.hstack([s * np.eye(n) - a, bs]))
    return u[:, -1].conj()


def pbh_sweep(a, b, tol=DEFAULT_TOL):
    """Evaluate the PBH pencil at every (clustered) eigenvalue of ``a``.

    Returns ``(failures, margin)`` where ``margin`` is the smallest rank
    margin met over the sweep.
    """
    a = as_cmatrix(a, "A")
    b = np.asarray(b, dtype=np.complex128)
    if b.ndim != 2 or b.shape[0] != a.shape[0]:
        raise DimensionMismatch(f"input matrix must have {a.shape[0]} rows, got {b.shape}")
    n = a.shape[0]
    failures = []
    margin = math.inf
    for cl, _ in eigen_decomposition(a, tol):
        info = pbh_rank(a, b, cl.value, tol)
        margin = min(margin, info.margin)
        if info.rank < n:
            failures.append(PencilFailure(cl.value, info.rank, n - info.rank, info.margin,
                                          _pencil_null(a, b, cl.value)))
    return failures, margin


def pbh_single_continuous(A, B, tol=DEFAULT_TOL):
    """PBH test of a single continuous-time pair ``(A, B)``."""
    a = as_cmatrix(A, "A")
    b = np.asarray(B, dtype=np.complex128)
    if b.ndim == 1:
        b = b.reshape(a.shape[0], -1)
    failures, margin = pbh_sweep(a, b, tol)
    margins = (("pbh", margin),)
    if failures:
        f = failures[0]
        return AnalysisReport(Verdict.UNCONTROLLABLE, "pbh_continuous",
                              {"eigenvalue": f.value, "rank": f.rank, "deficit": f.deficit,
                               "witness": f.witness}, margins)
    return AnalysisReport(Verdict.CONTROLLABLE, "pbh_continuous",
                          {"conditions": ["rank[sI-A, B] = n at every eigenvalue of A"]},
                          margins)


# --- pathological sampling -------------------------------------------------

def is_pathological(A, h, tol=DEFAULT_TOL):
    """Detect eigenvalue pairs of ``A`` that alias onto each other at period ``h``.

    A pair aliases when ``lam_a - lam_b = 2 k pi j / h`` for a nonzero integer
    ``k``.  Returns ``(flag, [(lam_a, lam_b, k), ...])`` with every witness
    oriented so that ``k > 0``.
    """
    a = as_cmatrix(A, "A")
    h = float(h)
    vals = [cl.value for cl in eig_clusters(a, tol)]
    rho = max((abs(v) for v in vals), default=0.0)
    thr = tol.cluster_radius(rho)
    spread = max((abs(x.imag - y.imag) for x in vals for y in vals), default=0.0)
    kmax = math.ceil(h * spread / (2 * math.pi)) + 1
    step = 2 * math.pi / h
    witnesses = []
    for i in range(len(vals)):
        for j in range(i + 1, len(vals)):
            la, lb = vals[i], vals[j]
            d = la - lb
            if d.imag < 0:
                la, lb, d = lb, la, -d
            if abs(d.real) > thr:
                continue
            k = round(d.imag / step)
            if 1 <= k <= kmax and abs(d.imag - k * step) <= thr:
                witnesses.append((la, lb, int(k)))
    return bool(witnesses), witnesses


# --- decomposition ---------------------------------------------------------

@dataclass(frozen=True)
class SubsystemEntry:
    """One eigenvalue ``lam`` of ``W``: its Jordan chains and ``E = e^{Ah} + lam H(h)``."""

    lam: complex
    E: np.ndarray = field(repr=False)
    group: object = field(repr=False)
    eigen: tuple = field(repr=False)  # ((EigenCluster, left eigenvector rows), ...)

    @property
    def algebraic_multiplicity(self):
        return self.group.algebraic_multiplicity

    @property
    def spectrum(self):
        """Eigenvalues of ``E`` (cluster means, repeated by multiplicity)."""
        return [cl.value for cl, _ in self.eigen for _ in range(cl.multiplicity)]


@dataclass(frozen=True)
class SubsystemFamily:
    entries: tuple
    source: object = field(repr=False)
    jordan: object = field(repr=False)
    radius: float = 0.0
    union_error: float = 0.0

    def distinct_eigenvalues(self):
        """Group the subsystem eigenvalues shared across entries.

        Returns ``[(theta, [(entry_index, eigen_index), ...]), ...]`` in the
        deterministic eigenvalue order.
        """
        points = []
        for i, ent in enumerate(self.entries):
            for j, (cl, _) in enumerate(ent.eigen):
                points.append((cl.value, i, j))
        groups = cluster_values([p[0] for p in points], self.radius)
        out = []
        for g in groups:
            members = [(i, j) for v, i, j in points if v in g.members]
            # cluster_values keeps the original numbers, so membership is exact
            seen = []
            for m in members:
                if m not in seen:
                    seen.append(m)
            out.append((g.value, seen))
        return out

    def nearest_eigenvalue(self, theta):
        """The subsystem eigenvalue closest to ``theta`` (e.g. a rounded value)."""
        return min((cl.value for ent in self.entries for cl, _ in ent.eigen),
                   key=lambda v: abs(v - theta))

    def is_zero(self, value):
        return abs(value) <= self.radius

    @property
    def all_nonsingular(self):
        return all(not self.is_zero(cl.value) for ent in self.entries for cl, _ in ent.eigen)


def _spectral_radius(m):
    vals = np.linalg.eigvals(m)
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def _multiset_distance(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.size != b.size:
        return math.inf
    if a.size == 0:
        return 0.0
    cost = np.abs(a[:, None] - b[None, :])
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


def spectrum_union_error(ss, entries, tol=DEFAULT_TOL):
    """Relative distance between ``sigma(Phi_s)`` and the union of the ``sigma(E_i)``.

    Both sides use clustered means repeated by multiplicity, matched
    optimally; the distance is scaled by ``1 + rho(Phi_s)``.
    """
    direct = [cl.value for cl in eig_clusters(ss.phi_s, tol) for _ in range(cl.multiplicity)]
    union = [v for ent in entries for v in ent.spectrum
             for _ in range(ent.algebraic_multiplicity)]
    rho = max((abs(v) for v in direct), default=0.0)
    return _multiset_distance(direct, union) / (1.0 + rho)


def decompose(ss, topo=None, tol=DEFAULT_TOL):
    """Split ``Phi_s`` into the subsystem matrices ``E_i``.

    ``topo`` may be given for symmetry with the rest of the API; the
    topology matrix stored on ``ss`` is used.  Raises
    :class:`~netctrl.errors.IllConditioned` when ``W`` has no reliable
    Jordan structure.
    """
    w = topo.W if topo is not None else ss.W
    js = jordan_structure(w, tol)
    entries = []
    for g in js.blocks:
        e = ss.eAh + g.eigenvalue * ss.Hh
        entries.append(SubsystemEntry(complex(g.eigenvalue), e, g,
                                      tuple(eigen_decomposition(e, tol))))
    radius = tol.cluster_radius(_spectral_radius(ss.phi_s))
    err = spectrum_union_error(ss, entries, tol)
    return SubsystemFamily(tuple(entries), ss, js, radius, err)


# --- eigenspaces of Phi_s --------------------------------------------------

@dataclass(frozen=True)
class EigenspaceBasis:
    """Basis of the left eigenspace of ``Phi_s`` at ``theta``.

    ``construction`` records, per basis block, the eigenvalue of ``W``, the
    length ``alpha`` of its chain, the generalized chain length ``gamma``
    and the number ``beta`` of vectors contributed.  ``complete`` is False
    when the assembled basis is smaller than the eigenspace found directly,
    in which case no controllability claim may rest on it.
    """

    theta: complex
    basis: tuple
    construction: tuple = ()
    residual: float = 0.0
    direct_dim: int = 0
    complete: bool = True

    @property
    def dim(self):
        return len(self.basis)

    def matrix(self, width):
        if not self.basis:
            return np.zeros((0, width), dtype=np.complex128)
        return np.vstack(self.basis)


def _lifted_rows(entry, cl, null, hh, tol):
    """Eigenvectors of ``Phi_s`` contributed by one subsystem eigenvalue."""
    depth = max(entry.group.sizes)
    chains = generalized_chains(entry.E, hh, cl.value, depth, tol, eigvecs=null)
    rows, provenance = [], []
    for b_idx, vch in enumerate(entry.group.chains):
        alpha = vch.length
        for x_idx, xch in enumerate(chains):
            beta = xch.usable_length(alpha)
            xi = xch.padded(beta)
            for k in range(1, beta + 1):
                eta = sum(kron(vch.vectors[k - t][None, :], xi[t - 1][None, :])[0]
                          for t in range(1, k + 1))
                rows.append(eta)
            provenance.append({"lambda": entry.lam, "block": b_idx, "alpha": alpha,
                               "chain": x_idx, "gamma": xch.length,
                               "annihilated": xch.annihilated, "beta": beta})
    return rows, provenance


def eigenspace_phis(fam, theta, tol=DEFAULT_TOL):
    """Left eigenspace of ``Phi_s`` at ``theta`` built from the subsystem chains.

    When ``theta`` belongs to several subsystems the bases are combined
    (direct sum).  The result is checked against a direct null-space
    computation of ``Phi_s - theta I``.
    """
    ss = fam.source
    matches = []
    for ent in fam.entries:
        for cl, null in ent.eigen:
            if abs(cl.value - theta) <= fam.radius:
                matches.append((ent, cl, null))
    if not matches:
        raise UnknownEigenvalue(f"{theta} is not an eigenvalue of any subsystem")
    rows, provenance, values = [], [], []
    for ent, cl, null in matches:
        r, p = _lifted_rows(ent, cl, null, ss.Hh, tol)
        rows.extend(r)
        provenance.extend(p)
        values.extend([cl.value] * len(r))
    phi = ss.phi_s
    scale = max(norm2(phi), _TINY)
    residual = 0.0
    for eta, val in zip(rows, values):
        nrm = np.linalg.norm(eta)
        residual = max(residual, float(np.linalg.norm(eta @ phi - val * eta) / (nrm * scale)))
    center = complex(np.mean([cl.value for _, cl, _ in matches]))
    nn = phi.shape[0]
    direct = left_null_space(phi - center * np.eye(nn), tol, scale=scale)
    stacked = np.vstack(rows) if rows else np.zeros((0, nn))
    indep = rank_info(stacked, tol).rank if rows else 0
    complete = (indep == len(rows) == direct.shape[0]
                and residual <= tol.chain_residual * 10)
    return EigenspaceBasis(complex(center), tuple(rows), tuple(provenance), residual,
                           int(direct.shape[0]), bool(complete))


def _witness(ss, theta, eta):
    eta = np.asarray(eta, dtype=np.complex128)
    nrm = np.linalg.norm(eta)
    eta = eta / nrm if nrm > 0 else eta
    res = np.linalg.norm(eta @ ss.phi_s - theta * eta) / max(norm2(ss.phi_s), _TINY)
    inp = np.linalg.norm(eta @ ss.psi_s) / max(norm2(ss.psi_s), _TINY)
    return {"theta": complex(theta), "witness": eta, "eigen_residual": float(res),
            "input_residual": float(inp)}


def annihilation_test(basis_rows, psi, tol=DEFAULT_TOL):
    """Does some nonzero combination of ``basis_rows`` annihilate ``psi``?

    Returns ``(ok, RankInfo, null_row)``; ``ok`` means ``span(basis) psi`` has
    full dimension.  The rows are orthonormalized first and the rank cutoff
    is relative to ``|psi|``, so a tiny image counts as annihilation.
    """
    q = orth_rows(np.asarray(basis_rows), tol)
    if q.shape[0] == 0:
        return True, None, None
    g = q @ psi
    info = rank_info(g, tol, scale=max(norm2(psi), _TINY))
    if info.rank == q.shape[0]:
        return True, info, None
    u, _, _ = np.linalg.svd(g)
    return False, info, u[:, -1].conj() @ q


def check_sufficient_general(ss, fam, tol=DEFAULT_TOL):
    """Eigenspace-annihilation test over every eigenvalue of ``Phi_s``.

    Controllable when no eigenspace contains a vector annihilating
    ``Psi_s``.  A failing eigenvalue gives Uncontrollable if ``Phi_s`` is
    nonsingular, otherwise Inconclusive.
    """
    margins = []
    incomplete = []
    failure = None
    checked = 0
    for theta, _ in fam.distinct_eigenvalues():
        basis = eigenspace_phis(fam, theta, tol)
        ok, info, null_row = annihilation_test(basis.basis, ss.psi_s, tol)
        checked += 1
        if info is not None:
            margins.append((f"annihilation@{_fmt(basis.theta)}", info.margin))
        if not basis.complete:
            incomplete.append({"theta": basis.theta, "assembled": basis.dim,
                               "direct": basis.direct_dim})
        if not ok and failure is None:
            failure = (basis.theta, null_row)
    evidence = {"eigenvalues_checked": checked, "spectrum_union_error": fam.union_error}
    flags = ()
    if incomplete:
        evidence["incomplete_eigenspaces"] = incomplete
        flags = ("eigenspace_dimension_mismatch",)
    if failure is not None:
        evidence.update(_witness(ss, *failure))
        verdict = Verdict.UNCONTROLLABLE if fam.all_nonsingular else Verdict.INCONCLUSIVE
        if verdict is Verdict.INCONCLUSIVE:
            flags = flags + ("singular_transition",)
        return AnalysisReport(verdict, "eigenspace_annihilation", evidence, tuple(margins), flags)
    if incomplete:
        return AnalysisReport(Verdict.INCONCLUSIVE, "eigenspace_annihilation", evidence,
                              tuple(margins), flags)
    evidence["conditions"] = ["eta Psi_s != 0 on every eigenspace of Phi_s"]
    return AnalysisReport(Verdict.CONTROLLABLE, "eigenspace_annihilation", evidence,
                          tuple(margins), flags)


def _fmt(z):
    z = complex(z)
    if abs(z.imag) < 1e-12:
        return f"{z.real:.6g}"
    return f"{z.real:.6g}{z.imag:+.6g}j"


# --- diagonalizable topology ---------------------------------------------

def _eigvec_witness(fam, entry_index, xi=None):
    """``v (x) xi`` for an eigenvector ``v`` of ``W``; ``xi`` defaults to an
    eigenvector of ``E`` at a nonzero eigenvalue."""
    ent = fam.entries[entry_index]
    v = ent.group.eigenvectors[0]
    if xi is None:
        cands = [(cl, null) for cl, null in ent.eigen if null.shape[0]]
        cands.sort(key=lambda c: fam.is_zero(c[0].value))
        cl, null = cands[0]
        return cl.value, kron(v[None, :], null[:1])[0]
    return None, kron(v[None, :], np.asarray(xi)[None, :])[0]


def _topology_witness(fam, failure):
    """Witness for a failing ``(W, Delta)`` pair: ``v (x) xi`` with ``v Delta = 0``."""
    ent = min(fam.entries, key=lambda e: abs(e.lam - failure.value))
    cands = [(cl, null) for cl, null in ent.eigen if null.shape[0]]
    cands.sort(key=lambda c: fam.is_zero(c[0].value))
    cl, null = cands[0]
    return cl.value, kron(failure.witness[None, :], null[:1])[0]


def _subsystem_conditions(fam, ss, tol):
    fails, margins = [], []
    for i, ent in enumerate(fam.entries):
        f, m = pbh_sweep(ent.E, ss.Bh, tol)
        margins.append((f"subsystem_pair@{_fmt(ent.lam)}", m))
        fails.extend((i, x) for x in f)
    return fails, margins


def _shared_condition(fam, ss, tol):
    """Condition on eigenvalues shared by two or more eigenvectors of ``W``."""
    fails, margins = [], []
    for theta, members in fam.distinct_eigenvalues():
        rows = []
        for i, j in members:
            ent = fam.entries[i]
            null = ent.eigen[j][1]
            for v in ent.group.eigenvectors:
                for xi in null:
                    rows.append(kron(v[None, :], xi[None, :])[0])
        n_vecs = sum(len(fam.entries[i].group.eigenvectors) for i, _ in members)
        if n_vecs < 2:
            continue
        ok, info, null_row = annihilation_test(rows, ss.psi_s, tol)
        if info is not None:
            margins.append((f"shared@{_fmt(theta)}", info.margin))
        if not ok:
            fails.append((theta, null_row))
    return fails, margins


def check_diagonalizable(ss, fam, tol=DEFAULT_TOL, topology_known=False):
    """Three-condition test for a diagonalizable ``W``.

    (1) ``(W, Delta)`` controllable, (2) every ``(E_i, B(h))`` controllable,
    (3) at every eigenvalue shared by several eigenvectors of ``W``, no
    combination ``sum v_k (x) xi_k`` annihilates ``Delta (x) B(h)``.  All
    three give Controllable; any failure gives Uncontrollable when every
    ``E_i`` is nonsingular and Inconclusive otherwise.  With
    ``topology_known`` condition (1) is taken as given.
    """
    if not fam.jordan.is_diagonalizable:
        raise NotApplicable("W is not diagonalizable")
    margins = []
    conditions = {}
    witness = None
    if topology_known:
        conditions["topology_pair"] = True
    else:
        f1, m1 = pbh_sweep(ss.W, ss.Delta, tol)
        margins.append(("topology_pair", m1))
        conditions["topology_pair"] = not f1
        if f1:
            witness = _topology_witness(fam, f1[0])
    f2, m2 = _subsystem_conditions(fam, ss, tol)
    margins.extend(m2)
    conditions["subsystem_pairs"] = not f2
    if f2 and witness is None:
        i, fail = f2[0]
        _, eta = _eigvec_witness(fam, i, fail.witness)
        witness = (fail.value, eta)
    f3, m3 = _shared_condition(fam, ss, tol)
    margins.extend(m3)
    conditions["shared_eigenvalues"] = not f3
    if f3 and witness is None:
        witness = f3[0]
    evidence = {"conditions": conditions}
    if all(conditions.values()):
        return AnalysisReport(Verdict.CONTROLLABLE, "diagonalizable_topology", evidence,
                              tuple(margins))
    evidence.update(_witness(ss, *witness))
    if fam.all_nonsingular:
        return AnalysisReport(Verdict.UNCONTROLLABLE, "diagonalizable_topology", evidence,
                              tuple(margins))
    return AnalysisReport(Verdict.INCONCLUSIVE, "diagonalizable_topology", evidence,
                          tuple(margins), ("singular_subsystem",))


# --- necessary conditions --------------------------------------------------

def check_necessary(ss, fam, tol=DEFAULT_TOL):
    """Necessary conditions, valid when every ``E_i`` is nonsingular.

    With a singular ``W`` the node pair ``(e^{Ah}, B(h))`` must be
    controllable; in general ``(W, Delta)`` and every ``(E_i, B(h))`` must
    be.  A violated condition yields Uncontrollable; passing proves nothing.
    """
    if not fam.all_nonsingular:
        return AnalysisReport(Verdict.INCONCLUSIVE, "necessary_conditions",
                              {"reason": "some subsystem matrix is singular"},
                              flags=("singular_subsystem",))
    margins = []
    zero = [i for i, ent in enumerate(fam.entries) if abs(ent.lam) <= fam.radius]
    if zero:
        f, m = pbh_sweep(ss.eAh, ss.Bh, tol)
        margins.append(("node_pair", m))
        if f:
            _, eta = _eigvec_witness(fam, zero[0], f[0].witness)
            ev = {"pair": "(e^{Ah}, B(h))", "eigenvalue": f[0].value, "rank": f[0].rank,
                  "required_rank": ss.eAh.shape[0]}
            ev.update(_witness(ss, f[0].value, eta))
            return AnalysisReport(Verdict.UNCONTROLLABLE, "necessary_singular_topology", ev,
                                  tuple(margins))
    f, m = pbh_sweep(ss.W, ss.Delta, tol)
    margins.append(("topology_pair", m))
    if f:
        theta, eta = _topology_witness(fam, f[0])
        ev = {"pair": "(W, Delta)", "eigenvalue": f[0].value, "rank": f[0].rank,
              "required_rank": ss.W.shape[0]}
        ev.update(_witness(ss, theta, eta))
        return AnalysisReport(Verdict.UNCONTROLLABLE, "necessary_topology_pair", ev,
                              tuple(margins))
    f2, m2 = _subsystem_conditions(fam, ss, tol)
    margins.extend(m2)
    if f2:
        i, fail = f2[0]
        _, eta = _eigvec_witness(fam, i, fail.witness)
        ev = {"pair": "(E_i, B(h))", "lambda": fam.entries[i].lam, "eigenvalue": fail.value,
              "rank": fail.rank, "required_rank": ss.eAh.shape[0]}
        ev.update(_witness(ss, fail.value, eta))
        return AnalysisReport(Verdict.UNCONTROLLABLE, "necessary_subsystem_pair", ev,
                              tuple(margins))
    passed = (["node pair (e^{Ah}, B(h))"] if zero else []) + ["(W, Delta)", "(E_i, B(h))"]
    return AnalysisReport(Verdict.INCONCLUSIVE, "necessary_conditions",
                          {"conditions_passed": passed}, tuple(margins))


__all__ = [
    "EigenspaceBasis",
    "PencilFailure",
    "SubsystemEntry",
    "SubsystemFamily",
    "annihilation_test",
    "check_diagonalizable",
    "check_necessary",
    "check_sufficient_general",
    "decompose",
    "eigenspace_phis",
    "is_pathological",
    "pbh_single_continuous",
    "pbh_sweep",
    "spectrum_union_error",
]
