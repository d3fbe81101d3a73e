"""Multi-rate sampling patterns lifted to single-rate systems at period ``l h``.

TMS (control held for ``l`` transmission periods)::

    Phi~ = Phi_s^l,     Psi~ = (Phi_s^{l-1} + ... + Phi_s + I) Psi_s

CMS (transmission held for ``l`` control periods)::

    Phi^ = I_N (x) e^{A l h} + W (x) H(l h)
    Psi^ = [Delta (x) e^{A(l-1)h} B(h), ..., Delta (x) e^{Ah} B(h), Delta (x) B(h)]
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .analyzer.combine import reconcile
from .analyzer.core import (
    _fmt,
    annihilation_test,
    check_sufficient_general,
    decompose,
    eigenspace_phis,
    is_pathological,
)
from .analyzer.report import AnalysisReport, Verdict
from .errors import IllConditioned, ValidationError
from .numkernel import DEFAULT_TOL, cluster_values, kron, left_null_space, norm2, rank_info
from .oracle import kalman_rank
from .sysmodel import MultiRateSpec, discretize

CMS_STACKING = "blocks ordered e^{A(l-1)h}B(h) first down to B(h) last"


@dataclass(frozen=True)
class LiftedSystem:
    phi: np.ndarray
    psi: np.ndarray
    kind: str
    l: int
    period: float
    base: object = field(repr=False, default=None)

    @property
    def phi_s(self):
        return self.phi

    @property
    def psi_s(self):
        return self.psi


def _require(spec, kind):
    if spec.kind != kind:
        raise ValidationError(f"expected a {kind} specification, got {spec.kind}", "multirate.kind")


def geometric_sum(phi, l):
    """``I + phi + ... + phi^{l-1}`` by Horner accumulation."""
    n = phi.shape[0]
    s = np.eye(n, dtype=np.complex128)
    for _ in range(l - 1):
        s = s @ phi + np.eye(n)
    return s


def lift_tms(spec):
    """Lift a TMS pattern to one step of length ``l h``."""
    _require(spec, "TMS")
    ss = discretize(spec.base)
    if spec.l == 1:
        return LiftedSystem(ss.phi_s.copy(), ss.psi_s.copy(), "TMS", 1, ss.h, ss)
    phi = ss.phi_s.copy()
    power = phi
    for _ in range(spec.l - 1):
        power = power @ phi
    psi = geometric_sum(phi, spec.l) @ ss.psi_s
    return LiftedSystem(power, psi, "TMS", spec.l, spec.l * ss.h, ss)


def lift_cms(spec):
    """Lift a CMS pattern: transmission sampled at ``l h``, ``l`` stacked inputs."""
    _require(spec, "CMS")
    base = spec.base
    ss = discretize(base)
    hat = ss if spec.l == 1 else discretize(base.with_period(spec.l * base.h))
    blocks = [ss.Bh]
    for _ in range(spec.l - 1):
        blocks.append(ss.eAh @ blocks[-1])
    delta = base.topo.Delta
    psi = np.hstack([kron(delta, b) for b in reversed(blocks)])
    return LiftedSystem(hat.phi_s.copy(), psi, "CMS", spec.l, spec.l * base.h, hat)


def tms_spectrum(fam, l, tol=DEFAULT_TOL):
    """Pairs ``(theta, theta**l)`` over the subsystem spectra, with collisions.

    Returns ``(pairs, collisions)`` where ``collisions`` lists
    ``(lifted_value, [base values])`` for lifted eigenvalues reached from
    two or more distinct base eigenvalues.
    """
    pairs = [(v, v ** l) for ent in fam.entries for v in ent.spectrum]
    groups = _lift_groups(fam, l, tol)
    collisions = [(lv, bases) for lv, bases in groups if len(bases) > 1]
    return pairs, collisions


def _lift_groups(fam, l, tol):
    bases = [theta for theta, _ in fam.distinct_eigenvalues()]
    lifted = [b ** l for b in bases]
    rho = max((abs(v) for v in lifted), default=0.0)
    out = []
    for cl in cluster_values(lifted, tol.cluster_radius(rho)):
        members = [b for b, lv in zip(bases, lifted) if lv in cl.members]
        out.append((cl.value, members))
    return out


def check_tms(spec, tol=DEFAULT_TOL):
    """Sufficient test for TMS systems.

    (1) ``sum_{c<l} theta^c`` is nonzero for every eigenvalue ``theta`` of
    ``Phi_s``; (2) on every lifted eigenspace (direct sums where lifted
    eigenvalues collide) no vector annihilates ``Delta (x) B(h)``.
    """
    _require(spec, "TMS")
    lifted = lift_tms(spec)
    ss = lifted.base
    fam = decompose(ss, spec.base.topo, tol)
    l = spec.l
    if l == 1:
        rep = check_sufficient_general(ss, fam, tol)
        return replace(rep, criterion="tms_lifted_eigenspace")
    margins, failures = [], []
    for theta, _ in fam.distinct_eigenvalues():
        s = sum(theta ** c for c in range(l))
        thr = tol.chain_residual * l * max(1.0, abs(theta)) ** (l - 1)
        margins.append((f"geometric_sum@{_fmt(theta)}", abs(s) / thr))
        if abs(s) <= thr:
            failures.append({"condition": "geometric_sum", "theta": theta, "sum": s})
    phi_l = lifted.phi
    scale = max(norm2(phi_l), np.finfo(float).tiny)
    incomplete = []
    for lv, members in _lift_groups(fam, l, tol):
        rows, complete = [], True
        for theta in members:
            b = eigenspace_phis(fam, theta, tol)
            rows.extend(b.basis)
            complete = complete and b.complete
        direct = left_null_space(phi_l - lv * np.eye(phi_l.shape[0]), tol, scale=scale)
        if not complete or direct.shape[0] != len(rows):
            incomplete.append({"theta_lifted": lv, "assembled": len(rows),
                               "direct": int(direct.shape[0])})
        ok, info, null_row = annihilation_test(rows, ss.psi_s, tol)
        if info is not None:
            margins.append((f"annihilation@{_fmt(lv)}", info.margin))
        if not ok:
            failures.append({"condition": "lifted_annihilation", "theta_lifted": lv,
                             "theta_base": members, "witness": null_row})
    evidence = {"collisions": [m for _, m in _lift_groups(fam, l, tol) if len(m) > 1]}
    flags = ()
    if incomplete:
        evidence["incomplete_eigenspaces"] = incomplete
        flags = ("eigenspace_dimension_mismatch",)
    if failures or incomplete:
        if failures:
            evidence["failure"] = failures[0]
        return AnalysisReport(Verdict.INCONCLUSIVE, "tms_lifted_eigenspace", evidence,
                              tuple(margins), flags)
    evidence["conditions"] = ["geometric sums nonzero", "no lifted eigenvector annihilates "
                              "Delta (x) B(h)"]
    return AnalysisReport(Verdict.CONTROLLABLE, "tms_lifted_eigenspace", evidence,
                          tuple(margins), flags)


def check_cms(spec, tol=DEFAULT_TOL):
    """Eigenspace-annihilation test of ``Phi^`` against the widened ``Psi^``.

    Uncontrollable is claimed only when ``Phi^`` is nonsingular.
    """
    _require(spec, "CMS")
    lifted = lift_cms(spec)
    hat = lifted.base
    fam = decompose(hat, spec.base.topo, tol)
    margins, failure, incomplete = [], None, []
    for theta, _ in fam.distinct_eigenvalues():
        b = eigenspace_phis(fam, theta, tol)
        if not b.complete:
            incomplete.append({"theta": b.theta, "assembled": b.dim, "direct": b.direct_dim})
        ok, info, null_row = annihilation_test(b.basis, lifted.psi, tol)
        if info is not None:
            margins.append((f"annihilation@{_fmt(b.theta)}", info.margin))
        if not ok and failure is None:
            failure = (b.theta, null_row)
    evidence = {"input_stacking": CMS_STACKING}
    flags = []
    patho, witnesses = is_pathological(spec.base.node.A, lifted.period, tol)
    if patho:
        flags.append("pathological_base_sampling")
        evidence["aliasing"] = witnesses
    if incomplete:
        evidence["incomplete_eigenspaces"] = incomplete
        flags.append("eigenspace_dimension_mismatch")
    if failure is not None:
        theta, eta = failure
        eta = eta / np.linalg.norm(eta)
        evidence.update({"theta": theta, "witness": eta,
                         "input_residual": float(np.linalg.norm(eta @ lifted.psi)
                                                 / max(norm2(lifted.psi), 1e-300))})
        verdict = Verdict.UNCONTROLLABLE if fam.all_nonsingular else Verdict.INCONCLUSIVE
        return AnalysisReport(verdict, "cms_eigenspace", evidence, tuple(margins), tuple(flags))
    if incomplete:
        return AnalysisReport(Verdict.INCONCLUSIVE, "cms_eigenspace", evidence,
                              tuple(margins), tuple(flags))
    evidence["conditions"] = ["no eigenvector of the lifted transition annihilates the "
                              "stacked input matrix"]
    return AnalysisReport(Verdict.CONTROLLABLE, "cms_eigenspace", evidence, tuple(margins),
                          tuple(flags))


def analyze_multirate(spec, tol=DEFAULT_TOL):
    """Criterion plus oracle on the lifted pair; the report carries ``kind`` and ``l``."""
    if not isinstance(spec, MultiRateSpec):
        raise TypeError("expected a MultiRateSpec")
    if spec.kind == "TMS":
        lifted, check, criterion = lift_tms(spec), check_tms, "tms_lifted_eigenspace"
    else:
        lifted, check, criterion = lift_cms(spec), check_cms, "cms_eigenspace"
    try:
        rep = check(spec, tol)
    except IllConditioned as exc:
        rep = AnalysisReport(Verdict.INCONCLUSIVE, criterion,
                             {"notes": [f"decomposition skipped: {exc}"]})
    oracle = kalman_rank(lifted.phi, lifted.psi, tol)
    singular = rank_info(lifted.phi, tol).rank < lifted.phi.shape[0]
    out = reconcile([rep], oracle, singular, label=f"{spec.kind} l={spec.l}")
    return replace(out, extra={"kind": spec.kind, "l": spec.l, "period": lifted.period})


__all__ = [
    "LiftedSystem",
    "MultiRateSpec",
    "analyze_multirate",
    "check_cms",
    "check_tms",
    "geometric_sum",
    "lift_cms",
    "lift_tms",
    "tms_spectrum",
]
