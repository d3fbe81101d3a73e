"""Left Jordan chains and generalized left Jordan chains.

Conventions (row vectors acting from the left):

* a left Jordan chain ``v1, ..., va`` of ``W`` at ``lam`` satisfies
  ``v1 (W - lam I) = 0`` and ``vk (W - lam I) = v(k-1)``;
* a generalized chain ``x1, ..., xg`` of ``E`` about ``H`` at ``theta``
  satisfies ``x1 (theta I - E) = 0`` and ``xj (theta I - E) = x(j-1) H``.

Chains are scaled so their top vector (``v1`` / ``x1``) has unit norm and its
first significant entry is positive real.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import IllConditioned, NonSquare, NotAnEigenvector
from .numkernel import (
    DEFAULT_TOL,
    EigenCluster,
    as_cmatrix,
    eig_clusters,
    eigen_sort_key,
    left_null_space,
    norm2,
    normalize_phase,
    orth_rows,
    phase_factor,
)

COND_LIMIT = 1e12


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class JordanChain:
    eigenvalue: complex
    vectors: tuple  # v1 first

    @property
    def length(self):
        return len(self.vectors)


@dataclass(frozen=True)
class GeneralizedJordanChain:
    """Generalized left chain of ``E`` about ``coupling``.

    ``annihilated`` means the last vector maps to zero under ``coupling``, so
    the chain may be continued indefinitely by zero vectors.  ``capped`` means
    the extension stopped at the requested maximum length, not because the
    next equation was inconsistent.
    """

    eigenvalue: complex
    vectors: tuple
    coupling: np.ndarray = field(repr=False)
    annihilated: bool = False
    capped: bool = False

    @property
    def length(self):
        return len(self.vectors)

    def usable_length(self, cap):
        """``min(cap, gamma)`` where an annihilated chain has unbounded length."""
        return cap if self.annihilated else min(cap, self.length)

    def padded(self, k):
        """First ``k`` chain vectors, padding an annihilated chain with zeros."""
        if k <= self.length:
            return list(self.vectors[:k])
        if not self.annihilated:
            raise ValueError(f"chain of length {self.length} cannot be padded to {k}")
        zero = np.zeros_like(self.vectors[0])
        return list(self.vectors) + [zero] * (k - self.length)


@dataclass(frozen=True)
class JordanBlockGroup:
    """All Jordan blocks of one eigenvalue, largest first."""

    eigenvalue: complex
    sizes: tuple
    chains: tuple

    @property
    def algebraic_multiplicity(self):
        return sum(self.sizes)

    @property
    def eigenvectors(self):
        return [c.vectors[0] for c in self.chains]


@dataclass(frozen=True)
class JordanStructure:
    matrix_dim: int
    blocks: tuple
    transform: np.ndarray = field(repr=False)
    jordan: np.ndarray = field(repr=False)

    @property
    def is_diagonalizable(self):
        return all(s == 1 for g in self.blocks for s in g.sizes)

    @property
    def eigenvalues(self):
        return [g.eigenvalue for g in self.blocks]

    def group(self, lam, radius):
        for g in self.blocks:
            if abs(g.eigenvalue - lam) <= radius:
                return g
        raise KeyError(lam)


def _complement_rows(rows, against, tol):
    """Component of ``rows`` orthogonal to the row space of ``against``."""
    if against.shape[0] == 0:
        return rows
    q = orth_rows(against, tol)
    return rows - (rows @ q.conj().T) @ q


def _null_ladder(k, m, tol, scale):
    """Nested left null spaces ``N_j = {v : v k^j = 0}`` up to dimension ``m``."""
    n = k.shape[0]
    ladder = [np.zeros((0, n), dtype=np.complex128)]
    while True:
        prev = ladder[-1]
        if prev.shape[0] == 0:
            proj = np.eye(n)
        else:
            proj = np.eye(n) - prev.conj().T @ prev
        nxt = left_null_space(k @ proj, tol, scale=scale, max_dim=m)
        # keep N_{j-1} inside N_j exactly
        nxt = orth_rows(np.vstack([prev, nxt]), tol) if prev.shape[0] else nxt
        if nxt.shape[0] > m:
            nxt = nxt[:m]
        if nxt.shape[0] <= prev.shape[0]:
            break
        ladder.append(nxt)
        if nxt.shape[0] == m:
            break
    return ladder


def _chains_for_cluster(w, mu, m, tol, scale):
    n = w.shape[0]
    k = w - mu * np.eye(n)
    ladder = _null_ladder(k, m, tol, scale)
    dims = [x.shape[0] for x in ladder]
    if dims[-1] != m:
        raise IllConditioned(
            f"eigenvalue {mu:.6g}: generalized eigenspace has dimension {dims[-1]}, "
            f"expected {m}")
    depth = len(dims) - 1
    at_least = [0] + [dims[j] - dims[j - 1] for j in range(1, depth + 1)] + [0]
    tops = []  # (level, top vector)
    for level in range(depth, 0, -1):
        exact = at_least[level] - at_least[level + 1]
        if exact <= 0:
            continue
        images = [t @ np.linalg.matrix_power(k, lv - level) for lv, t in tops]
        against = np.vstack([ladder[level - 1]] + [im[None, :] for im in images]) \
            if images else ladder[level - 1]
        rest = _complement_rows(ladder[level], against, tol)
        _, s, vh = np.linalg.svd(rest, full_matrices=False)
        if s.size < exact or s[exact - 1] <= tol.rank_rel * max(s[0], 1e-300):
            raise IllConditioned(f"eigenvalue {mu:.6g}: cannot separate Jordan chains")
        tops.extend((level, vh[i]) for i in range(exact))
    chains = []
    for level, t in sorted(tops, key=lambda x: -x[0]):
        vecs = [t]
        for _ in range(level - 1):
            vecs.append(vecs[-1] @ k)
        vecs = vecs[::-1]  # v1 first
        c = phase_factor(vecs[0])
        chains.append(JordanChain(complex(mu), tuple(_frozen(v * c) for v in vecs)))
    return chains


def jordan_structure(w, tol=DEFAULT_TOL):
    """Left Jordan decomposition ``T W T^-1 = J`` of a (small) square matrix.

    Rows of ``T`` list each block's chain from its highest-order vector down
    to the eigenvector.  Raises :class:`IllConditioned` when the structure is
    numerically ambiguous or ``cond(T) > 1e12``.
    """
    w = as_cmatrix(w, "W")
    if w.shape[0] != w.shape[1]:
        raise NonSquare(f"W must be square, got {w.shape}")
    n = w.shape[0]
    scale = max(norm2(w), np.finfo(float).tiny)
    groups = []
    for cl in eig_clusters(w, tol):
        try:
            chains = _chains_for_cluster(w, cl.value, cl.multiplicity, tol, scale)
        except IllConditioned:
            if cl.multiplicity == 1:
                raise
            # merged values that are distinct eigenvalues after all
            chains = []
            for mem in cl.members:
                chains.extend(_chains_for_cluster(w, mem, 1, tol, scale))
            for ch in chains:
                groups.append(JordanBlockGroup(ch.eigenvalue, (1,), (ch,)))
            continue
        chains.sort(key=lambda c: -c.length)
        groups.append(JordanBlockGroup(complex(cl.value), tuple(c.length for c in chains),
                                       tuple(chains)))
    groups.sort(key=lambda g: eigen_sort_key(g.eigenvalue))

    rows = []
    jb = np.zeros((n, n), dtype=np.complex128)
    pos = 0
    for g in groups:
        for ch in g.chains:
            rows.extend(ch.vectors[::-1])
            a = ch.length
            jb[pos:pos + a, pos:pos + a] = g.eigenvalue * np.eye(a) + np.eye(a, k=1)
            pos += a
    if pos != n:
        raise IllConditioned(f"Jordan blocks cover {pos} of {n} dimensions")
    t = np.array(rows)
    cond = np.linalg.cond(t)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditioned(f"Jordan transform condition number {cond:.3g} exceeds {COND_LIMIT:g}")
    resid = norm2(t @ w - jb @ t)
    if resid > tol.chain_residual * max(scale, 1.0) * norm2(t):
        raise IllConditioned(f"Jordan form residual {resid:.3g} too large")
    return JordanStructure(n, tuple(groups), _frozen(t), _frozen(jb))


def _extend_jointly(k, hc, top, length, tol, scale):
    """Solve for ``x2..x_length`` all at once given ``x1 = top``."""
    n = k.shape[0]
    m = length - 1
    big = np.zeros((m * n, m * n), dtype=np.complex128)
    for c in range(m):
        big[c * n:(c + 1) * n, c * n:(c + 1) * n] = k
        if c > 0:
            big[(c - 1) * n:c * n, c * n:(c + 1) * n] = -hc
    rhs = np.zeros(m * n, dtype=np.complex128)
    rhs[:n] = top @ hc
    sol, *_ = np.linalg.lstsq(big.T, rhs, rcond=tol.rank_rel)
    resid = np.linalg.norm(sol @ big - rhs)
    if resid > tol.chain_residual * (np.linalg.norm(rhs) + scale * np.linalg.norm(sol)):
        return None
    return [sol[c * n:(c + 1) * n] for c in range(m)]


def generalized_chain(e, hc, theta, top, tol=DEFAULT_TOL, max_length=None):
    """Maximal generalized left Jordan chain of ``e`` about ``hc`` on ``top``.

    Each extension is the minimum-norm least-squares solution of
    ``x (theta I - e) = x_prev hc`` and is accepted only when its residual is
    below ``chain_residual``.  If a greedy step fails, the whole tail is
    re-solved jointly before giving up.  The chain stops at ``max_length``
    (default ``n``).
    """
    e = as_cmatrix(e, "E")
    hc = as_cmatrix(hc, "H")
    n = e.shape[0]
    top = np.asarray(top, dtype=np.complex128).reshape(-1)
    k = theta * np.eye(n) - e
    scale = max(norm2(e), abs(theta), norm2(hc), np.finfo(float).tiny)
    if np.linalg.norm(top) == 0 or \
            np.linalg.norm(top @ k) > tol.chain_residual * scale * np.linalg.norm(top):
        raise NotAnEigenvector(f"top vector is not a left eigenvector at {theta}")
    cap = n if max_length is None else int(max_length)
    vecs = [normalize_phase(top)]
    annihilated = capped = False
    while True:
        if len(vecs) >= cap:
            capped = True
            break
        b = vecs[-1] @ hc
        if np.linalg.norm(b) <= tol.chain_residual * scale * np.linalg.norm(vecs[-1]):
            annihilated = True
            break
        x, *_ = np.linalg.lstsq(k.T, b, rcond=tol.rank_rel)
        resid = np.linalg.norm(x @ k - b)
        if resid <= tol.chain_residual * (np.linalg.norm(b) + scale * np.linalg.norm(x)):
            vecs.append(x)
            continue
        tail = _extend_jointly(k, hc, vecs[0], len(vecs) + 1, tol, scale)
        if tail is None:
            break
        vecs = [vecs[0]] + tail
    return GeneralizedJordanChain(complex(theta), tuple(_frozen(v) for v in vecs),
                                  _frozen(hc), annihilated, capped)


def chain_filtration(e, hc, theta, depth, tol=DEFAULT_TOL, eigvecs=None):
    """Left eigenvectors of ``e`` at ``theta`` adapted to chain length.

    Returns ``[(top, level), ...]`` where ``level`` is the length of the longest
    generalized chain about ``hc`` (capped at ``depth``) that the top admits.
    The tops form a basis of the eigenspace chosen so that the chains they
    generate are independent.
    """
    e = as_cmatrix(e, "E")
    hc = as_cmatrix(hc, "H")
    n = e.shape[0]
    k = theta * np.eye(n) - e
    scale = max(norm2(e), abs(theta), norm2(hc), np.finfo(float).tiny)
    if eigvecs is None:
        x1 = left_null_space(k, tol, scale=scale)
    else:
        x1 = orth_rows(np.asarray(eigvecs), tol)
    layers = [x1]
    for lv in range(2, depth + 1):
        big = np.zeros((lv * n, lv * n), dtype=np.complex128)
        for c in range(lv):
            big[c * n:(c + 1) * n, c * n:(c + 1) * n] = k
            if c > 0:
                big[(c - 1) * n:c * n, c * n:(c + 1) * n] = -hc
        null = left_null_space(big, tol, scale=scale)
        heads = null[:, :n] if null.shape[0] else np.zeros((0, n), dtype=np.complex128)
        xk = orth_rows(heads, tol, scale=1.0) if heads.shape[0] else heads
        # stay inside the eigenspace found at level 1
        if xk.shape[0] and x1.shape[0]:
            xk = orth_rows((xk @ x1.conj().T) @ x1, tol, scale=1.0)
        layers.append(xk)
        if xk.shape[0] == 0:
            break
    out = []
    deeper = np.zeros((0, n), dtype=np.complex128)
    for lv in range(len(layers), 0, -1):
        cur = layers[lv - 1]
        if cur.shape[0] == 0:
            continue
        rest = _complement_rows(cur, deeper, tol) if deeper.shape[0] else cur
        new = orth_rows(rest, tol, scale=1.0)
        for v in new:
            out.append((normalize_phase(v), lv))
        deeper = np.vstack([deeper, new]) if deeper.shape[0] else new
    return out


def generalized_chains(e, hc, theta, depth, tol=DEFAULT_TOL, eigvecs=None):
    """One maximal chain (capped at ``depth``) per adapted top at ``theta``."""
    return [generalized_chain(e, hc, theta, top, tol, max_length=depth)
            for top, _ in chain_filtration(e, hc, theta, depth, tol, eigvecs)]


__all__ = [
    "EigenCluster",
    "GeneralizedJordanChain",
    "JordanBlockGroup",
    "JordanChain",
    "JordanStructure",
    "chain_filtration",
    "generalized_chain",
    "generalized_chains",
    "jordan_structure",
]
