"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``; row
vectors are 1-D arrays.  All routines are pure functions.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import ConvergenceFailure, NonPositivePeriod, NonSquare

_EPS = np.finfo(float).eps
# Perturbation of a k-fold defective eigenvalue scales like (c*eps)**(1/k).
_DEFECT_C = 1e3
_WIDE_CAP = 1e-2
_TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds for every rank and eigenvalue decision.

    ``rank_rel`` is a relative singular-value cutoff.  ``eig_cluster`` is a
    relative clustering radius: two eigenvalues merge when they are closer than
    ``eig_cluster * (1 + spectral_radius)``.  ``chain_residual`` bounds the
    relative residual of eigenvectors and Jordan chains.
    """

    rank_rel: float = 1e-9
    eig_cluster: float = 1e-7
    chain_residual: float = 1e-8

    def __post_init__(self):
        for name in ("rank_rel", "eig_cluster", "chain_residual"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if self.rank_rel >= 1:
            raise ValueError(f"rank_rel must be < 1, got {self.rank_rel!r}")

    def cluster_radius(self, spectral_radius):
        return self.eig_cluster * (1.0 + spectral_radius)

    def replace(self, **changes):
        fields = {"rank_rel": self.rank_rel, "eig_cluster": self.eig_cluster,
                  "chain_residual": self.chain_residual}
        fields.update({k: v for k, v in changes.items() if v is not None})
        return Tolerance(**fields)


DEFAULT_TOL = Tolerance()


def as_cmatrix(x, name="matrix"):
    """Return ``x`` as a finite 2-D complex128 array (scalars become 1x1)."""
    m = np.array(x, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    elif m.ndim == 1:
        m = m.reshape(1, -1)
    elif m.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {m.shape}")
    if m.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def _require_square(m, name="matrix"):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {m.shape}")


def norm2(m):
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def expm(m):
    """Matrix exponential of a square matrix."""
    m = as_cmatrix(m)
    _require_square(m)
    return scipy.linalg.expm(m)


def expm_with_integral(m, h):
    """Return ``(exp(M h), int_0^h exp(M t) dt)`` from one augmented exponential.

    Both blocks come out of the same call, so they are mutually consistent::

        expm([[M, I], [0, 0]] * h) == [[exp(M h), int_0^h exp(M t) dt], [0, I]]
    """
    m = as_cmatrix(m)
    _require_square(m)
    h = float(h)
    if not (np.isfinite(h) and h > 0):
        raise NonPositivePeriod(f"sampling period must be positive, got {h!r}")
    n = m.shape[0]
    aug = np.zeros((2 * n, 2 * n), dtype=np.complex128)
    aug[:n, :n] = m
    aug[:n, n:] = np.eye(n)
    big = scipy.linalg.expm(aug * h)
    return big[:n, :n].copy(), big[:n, n:].copy()


class RankInfo(NamedTuple):
    """Numerical rank together with how far the decision is from flipping.

    ``margin`` is ``min(smallest kept sigma / cutoff, cutoff / largest dropped
    sigma)``; values near 1 flag a fragile decision.
    """

    rank: int
    margin: float
    cutoff: float


def _rank_from_singular_values(s, cutoff):
    kept = s[s > cutoff]
    dropped = s[s <= cutoff]
    margin = np.inf
    if cutoff > 0:
        if kept.size:
            margin = min(margin, float(kept.min() / cutoff))
        if dropped.size and dropped.max() > 0:
            margin = min(margin, float(cutoff / dropped.max()))
    return RankInfo(int(kept.size), margin, float(cutoff))


def rank_info(m, tol=DEFAULT_TOL, scale=None):
    """Rank of ``m`` counting singular values above ``rank_rel * scale``.

    ``scale`` defaults to the largest singular value of ``m``.
    """
    m = np.asarray(m, dtype=np.complex128)
    if m.size == 0:
        return RankInfo(0, np.inf, 0.0)
    try:
        s = np.linalg.svd(m, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    top = float(s[0]) if scale is None else float(scale)
    if top == 0.0:
        return RankInfo(0, np.inf, 0.0)
    return _rank_from_singular_values(s, tol.rank_rel * top)


def rank_tol(m, tol=DEFAULT_TOL):
    return rank_info(m, tol).rank


def kron(a, b):
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))


def normalize_phase(v, rel=1e-12):
    """Scale ``v`` to unit norm with its first significant entry positive real."""
    v = np.asarray(v, dtype=np.complex128)
    nrm = np.linalg.norm(v)
    if nrm == 0:
        return v.copy()
    v = v / nrm
    idx = np.flatnonzero(np.abs(v) > rel)[0]
    return v * (abs(v[idx]) / v[idx])


def phase_factor(v, rel=1e-12):
    """The scalar ``c`` such that ``c * v`` equals ``normalize_phase(v)``."""
    v = np.asarray(v, dtype=np.complex128)
    nrm = np.linalg.norm(v)
    idx = np.flatnonzero(np.abs(v) > rel * nrm)[0]
    return (abs(v[idx]) / v[idx]) / nrm


def orth_rows(rows, tol=DEFAULT_TOL, scale=None):
    """Orthonormal basis (as rows) of the row space of ``rows``."""
    rows = np.asarray(rows, dtype=np.complex128)
    if rows.size == 0:
        return np.zeros((0, rows.shape[-1] if rows.ndim == 2 else 0), dtype=np.complex128)
    _, s, vh = np.linalg.svd(rows, full_matrices=False)
    top = s[0] if scale is None else scale
    if top == 0:
        return np.zeros((0, rows.shape[1]), dtype=np.complex128)
    r = int(np.sum(s > tol.rank_rel * top))
    return vh[:r]


def left_null_space(k, tol=DEFAULT_TOL, scale=None, max_dim=None):
    """Orthonormal rows ``v`` with ``v @ k ~ 0``.

    A direction is null when its singular value is at most ``rank_rel * scale``
    (``scale`` defaults to the 2-norm of ``k``).  At most ``max_dim`` rows are
    returned, taken from the smallest singular values.
    """
    k = np.asarray(k, dtype=np.complex128)
    rows = k.shape[0]
    if scale is None:
        scale = norm2(k)
    u, s, _ = np.linalg.svd(k, full_matrices=True)
    sv = np.zeros(rows)
    sv[: s.size] = s
    cutoff = tol.rank_rel * max(scale, np.finfo(float).tiny)
    null_idx = [i for i in range(rows - 1, -1, -1) if sv[i] <= cutoff]
    if max_dim is not None:
        null_idx = null_idx[:max_dim]
    null_idx.sort()
    return u[:, null_idx].conj().T


@dataclass(frozen=True)
class EigenCluster:
    """A group of computed eigenvalues treated as one eigenvalue.

    ``value`` is the arithmetic mean of ``members``; for a defective
    eigenvalue the mean is far more accurate than any single member.
    """

    value: complex
    multiplicity: int
    members: tuple


def eigvals(m):
    m = np.asarray(m, dtype=np.complex128)
    try:
        return scipy.linalg.eigvals(m)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc


def eigen_sort_key(value):
    value = complex(value)
    mag = abs(value)
    arg = cmath.phase(value) % _TWO_PI
    if mag == 0 or _TWO_PI - arg <= 1e-9:
        arg = 0.0
    return (-round(mag, 9), round(arg, 9))


def sort_eigenvalues(values):
    """Deterministic order: descending modulus, ties by argument in [0, 2pi)."""
    return sorted(values, key=eigen_sort_key)


def cluster_values(values, radius, scale=0.0, defective=False, accept=None):
    """Single-linkage merge of ``values`` into :class:`EigenCluster` objects.

    Clusters merge while their means are within ``radius``.  With
    ``defective=True`` a merge may also happen within
    ``scale * (c * eps) ** (1/k)``, the spread a k-fold defective eigenvalue
    suffers under backward-stable eigensolvers; ``k`` counts every value near
    the candidate pair and the allowance is capped at ``1e-2 * scale``.  Such
    wide merges are kept only if ``accept(mean, members)`` is true.
    """
    groups = [[complex(v)] for v in values]
    refused = set()

    def wide_limit(k):
        return min(scale * (_DEFECT_C * _EPS) ** (1.0 / k), _WIDE_CAP * scale)

    while len(groups) > 1:
        means = [np.mean(g) for g in groups]
        candidates = []
        for a in range(len(groups)):
            for b in range(a + 1, len(groups)):
                d = abs(means[a] - means[b])
                if d <= radius:
                    candidates.append((d, a, b, False))
                    continue
                if not defective:
                    continue
                k = len(groups[a]) + len(groups[b])
                centre = (means[a] * len(groups[a]) + means[b] * len(groups[b])) / k
                k = max(k, sum(len(g) for g, mu in zip(groups, means)
                               if abs(mu - centre) <= 2 * d))
                if d <= wide_limit(k):
                    candidates.append((d, a, b, True))
        merged = False
        for d, a, b, wide in sorted(candidates, key=lambda c: c[0]):
            key = (tuple(groups[a]), tuple(groups[b]))
            if wide:
                if key in refused:
                    continue
                centre = np.mean(groups[a] + groups[b])
                if accept is not None and not accept(centre, groups[a] + groups[b]):
                    refused.add(key)
                    continue
            groups[a] = groups[a] + groups[b]
            del groups[b]
            merged = True
            break
        if not merged:
            break
    clusters = [EigenCluster(complex(np.mean(g)), len(g), tuple(sorted(g, key=eigen_sort_key)))
                for g in groups]
    return sorted(clusters, key=lambda c: eigen_sort_key(c.value))


def eig_clusters(m, tol=DEFAULT_TOL):
    """Eigenvalues of ``m`` grouped into clusters (multiplicity-aware).

    Spread-out members of a defective eigenvalue are merged only when their
    mean is numerically an eigenvalue, i.e. ``m - mean I`` loses rank.
    """
    m = as_cmatrix(m)
    _require_square(m)
    n = m.shape[0]
    if n == 0:
        return []
    vals, left, right = _eig_with_condition(m)
    kappa = dict(zip(vals, _condition_numbers(left, right)))
    rho = float(np.max(np.abs(vals)))
    scale = max(norm2(m), rho)

    def accept(mu, members):
        # the spread must be explainable by rounding amplified by the
        # eigenvalue condition numbers, and mu must really be an eigenvalue
        spread = max(abs(v - mu) for v in members)
        if spread > _DEFECT_C * _EPS * scale * max(kappa.get(v, np.inf) for v in members):
            return False
        return rank_info(m - mu * np.eye(n), tol, scale=scale).rank < n

    return cluster_values(vals, tol.cluster_radius(rho), scale=scale, defective=True,
                          accept=accept)


def _eig_with_condition(m):
    try:
        vals, left, right = scipy.linalg.eig(m, left=True, right=True)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return [complex(v) for v in vals], left, right


def _condition_numbers(left, right):
    # kappa_i = |y_i| |x_i| / |y_i^H x_i|; infinite for an exactly defective pair
    out = []
    for i in range(left.shape[1]):
        y, x = left[:, i], right[:, i]
        dot = abs(np.vdot(y, x))
        num = np.linalg.norm(y) * np.linalg.norm(x)
        with np.errstate(over="ignore"):
            out.append(float(num / dot) if dot > 0 else np.inf)
    return out


def _split_if_spurious(m, cluster, tol, scale):
    """Undo a merge when the mean is not an eigenvalue but the members are."""
    n = m.shape[0]
    null = left_null_space(m - cluster.value * np.eye(n), tol, scale=scale,
                           max_dim=cluster.multiplicity)
    if null.shape[0] > 0 or cluster.multiplicity == 1:
        return [(cluster, null)]
    out = []
    for mem in cluster.members:
        c = EigenCluster(mem, 1, (mem,))
        out.append((c, left_null_space(m - mem * np.eye(n), tol, scale=scale, max_dim=1)))
    return out


def eigen_decomposition(m, tol=DEFAULT_TOL):
    """List of ``(EigenCluster, left eigenvector rows)`` covering ``sigma(m)``."""
    m = as_cmatrix(m)
    _require_square(m)
    scale = max(norm2(m), np.finfo(float).tiny)
    result = []
    for cl in eig_clusters(m, tol):
        result.extend(_split_if_spurious(m, cl, tol, scale))
    return sorted(result, key=lambda item: eigen_sort_key(item[0].value))


def eig_left(m, tol=DEFAULT_TOL):
    """Eigenvalues with their full left eigenspaces.

    Returns a list of ``(eigenvalue, [v, ...])`` where every ``v`` is a unit
    row vector with ``v @ (m - eigenvalue I) ~ 0``.  Eigenvalues closer than the
    clustering radius are reported once.
    """
    out = []
    for cl, null in eigen_decomposition(m, tol):
        out.append((cl.value, [normalize_phase(v) for v in null]))
    return out


def pbh_rank(a, b, s, tol=DEFAULT_TOL):
    """Rank of the pencil ``[s I - a, b]`` with the ``b`` block scaled to ``|a|``.

    Column-block scaling leaves the exact rank unchanged and keeps the input
    block from swamping (or vanishing next to) the state block.
    """
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    n = a.shape[0]
    nb = norm2(b)
    scale = max(norm2(a), 1.0)
    bs = b * (scale / nb) if nb > 0 else b
    pencil = np.hstack([s * np.eye(n) - a, bs])
    # absolute scale: a zero pencil at an exact eigenvalue must have rank 0
    return rank_info(pencil, tol, scale=max(scale, abs(s)))
