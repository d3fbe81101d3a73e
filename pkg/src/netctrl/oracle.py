"""Brute-force reference checks that share nothing with the analyzer except
the dense kernels in :mod:`netctrl.numkernel`.

* :func:`kalman_rank` finds the reachable subspace with the orthogonal
  controllability staircase (numerically safer than forming
  ``[Psi, Phi Psi, ...]``), tests controllability to the origin, and
  cross-checks the result against a PBH sweep.
* :func:`steer` computes least-squares input sequences.
* :func:`scan_periods` evaluates the full analysis over a grid of periods.
"""
from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InternalInconsistency
from .numkernel import DEFAULT_TOL, as_cmatrix, eig_clusters, norm2, pbh_rank, rank_info


_STAIRCASE_SLACK = 1e3


@dataclass(frozen=True)
class OracleVerdict:
    """``reachable``: every state can be reached from 0.  ``controllable_to_origin``:
    every state can be driven to 0.  The two coincide for nonsingular ``phi``."""

    reachable: bool
    controllable_to_origin: bool
    rank: int
    dim: int
    deficient_eigenvalues: tuple
    margin: float = np.inf


def _orth_cols(x, cutoff):
    if x.shape[1] == 0:
        return x
    u, s, _ = np.linalg.svd(x, full_matrices=False)
    return u[:, s > cutoff]


def _staircase(phi, psi, steps, rel):
    # Orthonormal basis of span{psi, ..., phi^(steps-1) psi} by the orthogonal
    # controllability staircase: rank decisions are made on blocks of an
    # orthogonally transformed phi, never on powers of phi, which avoids the
    # cancellation that makes plain Krylov iteration invent directions.  The
    # basis for fewer steps is always a prefix, so horizons give nested spaces.
    # Also returns the weakest accepted coupling relative to its scale.
    d = phi.shape[0]
    rest = np.eye(d, dtype=np.complex128)  # orthonormal basis of the unreached part
    a = phi
    block = psi
    scale = max(norm2(psi), np.finfo(float).tiny)
    found, weakest = [], np.inf
    for _ in range(steps):
        if rest.shape[1] == 0 or block.shape[1] == 0:
            break
        u, sv, _ = np.linalg.svd(block, full_matrices=True)
        r = int(np.sum(sv > rel * scale))
        if r == 0:
            break
        weakest = min(weakest, float(sv[r - 1]) / scale)
        found.append(rest @ u[:, :r])
        rest = rest @ u[:, r:]
        a = u.conj().T @ a @ u
        block = a[r:, :r]
        a = a[r:, r:]
        scale = max(norm2(phi), np.finfo(float).tiny)
    if not found:
        return np.zeros((d, 0), dtype=np.complex128), weakest
    return np.hstack(found), weakest


def _krylov_basis(phi, psi, steps, tol):
    return _staircase(phi, psi, steps, tol.rank_rel)[0]


def reachable_basis(phi, psi, tol=DEFAULT_TOL):
    """Orthonormal basis (columns) of ``span{psi, phi psi, ..., phi^{d-1} psi}``."""
    phi = as_cmatrix(phi, "phi")
    psi = np.asarray(psi, dtype=np.complex128)
    d = phi.shape[0]
    if psi.ndim != 2 or psi.shape[0] != d:
        raise DimensionMismatch(f"psi must have {d} rows, got {psi.shape}")
    return _krylov_basis(phi, psi, d, tol)


def _range_of_power(phi, k, tol):
    d = phi.shape[0]
    y = np.eye(d, dtype=np.complex128)
    cutoff = tol.rank_rel * max(norm2(phi), np.finfo(float).tiny)
    for _ in range(k):
        y = _orth_cols(phi @ y, cutoff)
        if y.shape[1] == 0:
            break
    return y


def pbh_deficient(phi, psi, tol=DEFAULT_TOL):
    """Eigenvalues of ``phi`` at which ``[s I - phi, psi]`` loses rank."""
    d = phi.shape[0]
    out, margin = [], np.inf
    for cl in eig_clusters(phi, tol):
        # members too: a wide cluster mean may sit between two true eigenvalues
        points = (cl.value,) + (cl.members if cl.multiplicity > 1 else ())
        infos = [pbh_rank(phi, psi, s, tol) for s in points]
        margin = min([margin] + [i.margin for i in infos])
        if min(i.rank for i in infos) < d:
            out.append(cl.value)
    return out, margin


def kalman_rank(phi, psi, tol=DEFAULT_TOL, cross_check=True):
    """Reachability and controllability-to-origin of ``x+ = phi x + psi u``.

    Raises :class:`InternalInconsistency` when the staircase rank and the PBH
    sweep disagree on reachability.
    """
    phi = as_cmatrix(phi, "phi")
    if phi.shape[0] != phi.shape[1]:
        raise DimensionMismatch(f"phi must be square, got {phi.shape}")
    psi = np.asarray(psi, dtype=np.complex128)
    d = phi.shape[0]
    if psi.ndim != 2 or psi.shape[0] != d:
        raise DimensionMismatch(f"psi must have {d} rows, got {psi.shape}")
    deficient, margin = pbh_deficient(phi, psi, tol)
    basis, weakest = _staircase(phi, psi, d, tol.rank_rel)
    # A coupling just above the cutoff on a pair that PBH finds deficient is
    # rounding amplified by an ill-conditioned uncontrollable part; accept a
    # slightly higher cutoff before calling it an inconsistency.
    while basis.shape[1] == d and deficient and weakest <= _STAIRCASE_SLACK * tol.rank_rel:
        basis, weakest = _staircase(phi, psi, d, weakest * (1 + 1e-9))
    rank = basis.shape[1]
    reachable = rank == d
    if reachable:
        to_origin = True
    else:
        image = _range_of_power(phi, d, tol)
        if image.shape[1] == 0:
            to_origin = True
        else:
            joint = rank_info(np.hstack([basis, image]), tol, scale=1.0).rank
            to_origin = joint == rank
    if cross_check and reachable == bool(deficient):
        raise InternalInconsistency(
            f"staircase rank {rank}/{d} disagrees with PBH sweep "
            f"(deficient eigenvalues: {deficient})")
    return OracleVerdict(bool(reachable), bool(to_origin), int(rank), int(d),
                         tuple(deficient), float(margin))


def _solve_tail(phi, psi, blocks, target, j, tol):
    # inputs on the last j steps only (earlier inputs zero); the target is
    # first projected onto the j-step reachable space, a consistent system
    # is then solved with block equilibration since block norms grow like
    # |phi|^k
    p = psi.shape[1]
    tail = blocks[len(blocks) - j:]
    big = np.hstack(tail)
    q = _krylov_basis(phi, psi, j, tol)
    reach = q @ (q.conj().T @ target)
    weights = np.repeat([max(norm2(b), np.finfo(float).tiny) for b in tail], p)
    v, *_ = np.linalg.lstsq(big / weights, reach, rcond=None)
    sol = v / weights
    return sol, float(np.linalg.norm(big @ sol - target))


def steer(ss, x0, xT, steps, tol=DEFAULT_TOL):
    """Least-squares inputs driving ``x0`` as close as possible to ``xT``.

    Among the minimizers the input of least block-weighted norm is returned
    (each step weighted by ``|phi^k psi|``); this is the plain minimum-norm
    input whenever those block norms are equal.  Directions that need a
    very large input are solved only approximately, so solutions that keep
    the first inputs at zero are tried too and the smallest achieved
    residual wins; from ``x0 = 0`` this makes the residual non-increasing
    in ``steps``.  ``ss`` is anything with ``phi_s`` and ``psi_s``.

    Returns ``(inputs, residual)``: a list of ``steps`` input columns and
    the achieved ``|x(steps) - xT|``.
    """
    phi = np.asarray(ss.phi_s, dtype=np.complex128)
    psi = np.asarray(ss.psi_s, dtype=np.complex128)
    d, p = psi.shape
    x0 = np.asarray(x0, dtype=np.complex128).reshape(d)
    xT = np.asarray(xT, dtype=np.complex128).reshape(d)
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be positive")
    # blocks[k] = phi^(steps-1-k) psi, so x(steps) = phi^steps x0 + sum blocks[k] u_k
    blocks = [psi]
    for _ in range(steps - 1):
        blocks.append(phi @ blocks[-1])
    blocks.reverse()
    free = x0
    for _ in range(steps):
        free = phi @ free
    target = xT - free
    best_j, best_sol, best_res = 0, None, float(np.linalg.norm(target))
    for j in range(steps, 0, -1):
        sol, res = _solve_tail(phi, psi, blocks, target, j, tol)
        if res < best_res:
            best_j, best_sol, best_res = j, sol, res
    full = np.zeros(steps * p, dtype=np.complex128)
    if best_sol is not None:
        full[(steps - best_j) * p:] = best_sol
    inputs = [full[k * p:(k + 1) * p].reshape(p, 1) for k in range(steps)]
    return inputs, best_res


@dataclass(frozen=True)
class ScanRow:
    h: float
    verdict: str
    criterion: str
    pathological_node: bool


def period_grid(h_min, h_max, count):
    if count < 1:
        raise ValueError("count must be at least 1")
    if not (0 < h_min <= h_max):
        raise ValueError("need 0 < h_min <= h_max")
    if count == 1:
        return [float(h_min)]
    if h_min == h_max:
        raise ValueError("need h_min < h_max for more than one grid point")
    return [float(x) for x in np.linspace(h_min, h_max, count)]


def scan_periods(sys, h_min, h_max, count, tol=DEFAULT_TOL, workers=None):
    """Analyze ``sys`` at every period of a uniform grid.

    Rows are ordered by ``h`` whatever the evaluation order; ``workers``
    greater than one evaluates grid points in a thread pool.
    """
    from .analyzer import analyze, is_pathological

    def one(h):
        s = sys.with_period(h)
        rep = analyze(s, tol)
        flag, _ = is_pathological(s.node.A, h, tol)
        return ScanRow(h, rep.verdict.value, rep.criterion, bool(flag))

    grid = period_grid(h_min, h_max, count)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, grid))
    else:
        rows = [one(h) for h in grid]
    return sorted(rows, key=lambda r: r.h)


def scan_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["h", "verdict", "criterion", "pathological_node"])
    for r in rows:
        writer.writerow([f"{r.h:.12g}", r.verdict, r.criterion,
                         "true" if r.pathological_node else "false"])
    return buf.getvalue()


__all__ = [
    "OracleVerdict",
    "ScanRow",
    "kalman_rank",
    "pbh_deficient",
    "period_grid",
    "reachable_basis",
    "scan_csv",
    "scan_periods",
    "steer",
]
