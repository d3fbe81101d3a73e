"""Networked LTI systems: validation, assembly, ZOH discretization, JSON I/O.

A network of ``N`` identical nodes ``x_i' = A x_i + sum_j w_ij H C x_j +
delta_i B u_i`` has the compact form ``X' = Phi X + Psi U`` with::

    Phi = I_N (x) A + W (x) HC,      Psi = Delta (x) B

Zero-order-hold sampling of both control and transmission channels with
period ``h`` gives ``X[k+1] = Phi_s X[k] + Psi_s U[k]`` where::

    Phi_s = I_N (x) e^{Ah} + W (x) H(h),    Psi_s = Delta (x) B(h)
    H(h) = int_0^h e^{At} dt HC,            B(h) = int_0^h e^{At} dt B
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, NonPositivePeriod, ParseError, ValidationError
from .numkernel import DEFAULT_TOL, Tolerance, expm_with_integral, kron

REAL_TOL = 1e-14
STRUCTURAL_ZERO = 1e-14


def _frozen(a):
    a = np.array(a, dtype=np.complex128)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    a.setflags(write=False)
    return a


def _check_real(name, m):
    if np.max(np.abs(m.imag), initial=0.0) > REAL_TOL:
        raise ValidationError("complex entries are not supported", name)


@dataclass(frozen=True)
class NodeDynamics:
    """Identical node model ``(A, B, C, H)``; dimensions n, p, m."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    H: np.ndarray

    def __post_init__(self):
        for name in "ABCH":
            m = _frozen(getattr(self, name))
            _check_real(name, m)
            if not np.all(np.isfinite(m)):
                raise ValidationError("entries must be finite", name)
            object.__setattr__(self, name, m)
        n = self.A.shape[0]
        if self.A.shape != (n, n):
            raise DimensionMismatch(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise DimensionMismatch(f"B must have {n} rows, got {self.B.shape}")
        if self.C.shape[1] != n:
            raise DimensionMismatch(f"C must have {n} columns, got {self.C.shape}")
        if self.H.shape != (n, self.C.shape[0]):
            raise DimensionMismatch(
                f"H must be {n}x{self.C.shape[0]} to match C, got {self.H.shape}")

    @property
    def n(self):
        return self.A.shape[0]

    @property
    def p(self):
        return self.B.shape[1]

    @property
    def m(self):
        return self.C.shape[0]

    @property
    def HC(self):
        return self.H @ self.C


@dataclass(frozen=True)
class NetworkTopology:
    """Weighted digraph ``W`` (``w_ij``: edge j -> i) and driver pattern ``delta``."""

    W: np.ndarray
    delta: tuple

    def __post_init__(self):
        w = _frozen(self.W)
        _check_real("W", w)
        big_n = w.shape[0]
        if w.shape != (big_n, big_n):
            raise DimensionMismatch(f"W must be square, got {w.shape}")
        for i in range(big_n):
            if w[i, i] != 0:
                raise ValidationError("w_ii must be 0", f"W[{i}][{i}]")
        delta = tuple(int(d) for d in self.delta)
        if len(delta) != big_n:
            raise DimensionMismatch(f"delta must have {big_n} entries, got {len(delta)}")
        for i, d in enumerate(self.delta):
            if d not in (0, 1) or isinstance(d, float) and not float(d).is_integer():
                raise ValidationError("delta entries must be 0 or 1", f"delta[{i}]")
        object.__setattr__(self, "W", w)
        object.__setattr__(self, "delta", delta)

    @property
    def N(self):
        return self.W.shape[0]

    @property
    def Delta(self):
        return np.diag(np.array(self.delta, dtype=np.complex128))

    def support(self):
        """Boolean edge pattern; weights below 1e-14 count as structural zeros."""
        return np.abs(self.W) > STRUCTURAL_ZERO


@dataclass(frozen=True)
class NetworkedSystem:
    node: NodeDynamics
    topo: NetworkTopology
    h: float

    def __post_init__(self):
        h = float(self.h)
        if not (math.isfinite(h) and h > 0):
            raise NonPositivePeriod(f"sampling period must be positive, got {self.h!r}")
        object.__setattr__(self, "h", h)

    @property
    def N(self):
        return self.topo.N

    @property
    def n(self):
        return self.node.n

    def with_period(self, h):
        return NetworkedSystem(self.node, self.topo, h)


@dataclass(frozen=True)
class SampledSystem:
    """ZOH-sampled network with its constituent blocks kept for reuse."""

    phi_s: np.ndarray
    psi_s: np.ndarray
    eAh: np.ndarray
    Hh: np.ndarray
    Bh: np.ndarray
    h: float
    W: np.ndarray = field(repr=False)
    Delta: np.ndarray = field(repr=False)

    def rebuild(self):
        big_n = self.W.shape[0]
        phi = kron(np.eye(big_n), self.eAh) + kron(self.W, self.Hh)
        psi = kron(self.Delta, self.Bh)
        return phi, psi

    @property
    def is_nonsingular(self):
        return bool(np.linalg.matrix_rank(self.phi_s) == self.phi_s.shape[0])


@dataclass(frozen=True)
class MultiRateSpec:
    """Multi-rate pattern: ``TMS`` holds control ``l`` transmission periods,
    ``CMS`` holds transmission ``l`` control periods."""

    base: NetworkedSystem
    kind: str
    l: int

    def __post_init__(self):
        if self.kind not in ("TMS", "CMS"):
            raise ValidationError("kind must be 'TMS' or 'CMS'", "multirate.kind")
        if isinstance(self.l, bool) or int(self.l) != self.l or self.l < 1:
            raise ValidationError("l must be an integer >= 1", "multirate.l")
        object.__setattr__(self, "l", int(self.l))


def assemble_continuous(sys):
    """Continuous-time compact pair ``(Phi, Psi)``."""
    nd, tp = sys.node, sys.topo
    phi = kron(np.eye(tp.N), nd.A) + kron(tp.W, nd.HC)
    psi = kron(tp.Delta, nd.B)
    return phi, psi


def discretize(sys):
    """ZOH discretization of both channels at period ``sys.h``."""
    nd, tp = sys.node, sys.topo
    eah, integral = expm_with_integral(nd.A, sys.h)
    hh = integral @ nd.HC
    bh = integral @ nd.B
    phi = kron(np.eye(tp.N), eah) + kron(tp.W, hh)
    psi = kron(tp.Delta, bh)
    return SampledSystem(_frozen(phi), _frozen(psi), _frozen(eah), _frozen(hh), _frozen(bh),
                         sys.h, tp.W, _frozen(tp.Delta))


def make_system(A, B, W, h, C=None, H=None, delta=None):
    """Build a :class:`NetworkedSystem` applying the document defaults."""
    A = np.atleast_2d(np.asarray(A, dtype=np.complex128))
    n = A.shape[0]
    B = np.asarray(B, dtype=np.complex128)
    if B.ndim == 1:
        B = B.reshape(n, -1)
    C = np.eye(n) if C is None else np.atleast_2d(np.asarray(C, dtype=np.complex128))
    H = np.eye(n) if H is None else np.atleast_2d(np.asarray(H, dtype=np.complex128))
    W = np.atleast_2d(np.asarray(W, dtype=np.complex128))
    if delta is None:
        delta = [1] * W.shape[0]
    return NetworkedSystem(NodeDynamics(A, B, C, H), NetworkTopology(W, tuple(delta)), h)


# --- JSON documents -------------------------------------------------------

_KNOWN_KEYS = {"A", "B", "C", "H", "W", "delta", "h", "multirate", "tolerance"}


def _matrix(doc, key, required=True):
    if key not in doc:
        if required:
            raise ValidationError("missing required field", key)
        return None
    raw = doc[key]
    if not isinstance(raw, list) or not raw:
        raise ValidationError("must be a non-empty nested array", key)
    if any(isinstance(row, list) and row and isinstance(row[0], list) for row in raw):
        raise ValidationError("heterogeneous node dynamics are not supported", key)
    if not all(isinstance(row, list) for row in raw):
        raise ValidationError("must be a nested array of rows", key)
    width = len(raw[0])
    for i, row in enumerate(raw):
        if len(row) != width or width == 0:
            raise ValidationError("rows must be non-empty and equal length", f"{key}[{i}]")
        for j, x in enumerate(row):
            if isinstance(x, bool) or not isinstance(x, (int, float)):
                raise ValidationError("entries must be real numbers", f"{key}[{i}][{j}]")
            if not math.isfinite(x):
                raise ValidationError("entries must be finite", f"{key}[{i}][{j}]")
    return np.array(raw, dtype=float)


def _parse_tolerance(raw):
    if not isinstance(raw, dict):
        raise ValidationError("must be an object", "tolerance")
    for k in raw:
        if k not in ("rank_rel", "eig_cluster", "chain_residual"):
            raise ValidationError("unknown tolerance field", f"tolerance.{k}")
        v = raw[k]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ValidationError("must be a number", f"tolerance.{k}")
    try:
        return DEFAULT_TOL.replace(**raw)
    except ValueError as exc:
        raise ValidationError(str(exc), "tolerance") from None


def parse_document(text, lenient=False):
    """Parse a system document into ``(system_or_spec, Tolerance or None)``."""
    if isinstance(text, (bytes, bytearray)):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not UTF-8: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ValidationError("top level must be an object", "$")
    unknown = sorted(set(doc) - _KNOWN_KEYS)
    if unknown:
        if not lenient:
            raise ValidationError("unknown key", unknown[0])
        warnings.warn(f"ignoring unknown keys: {', '.join(unknown)}", stacklevel=2)

    A = _matrix(doc, "A")
    B = _matrix(doc, "B")
    W = _matrix(doc, "W")
    C = _matrix(doc, "C", required=False)
    H = _matrix(doc, "H", required=False)
    n = A.shape[0]
    if A.shape != (n, n):
        raise ValidationError(f"must be square, got {A.shape[0]}x{A.shape[1]}", "A")
    if B.shape[0] != n:
        raise ValidationError(f"must have {n} rows", "B")
    if C is None:
        C = np.eye(n)
    if C.shape[1] != n:
        raise ValidationError(f"must have {n} columns", "C")
    if H is None:
        H = np.eye(n)
    if H.shape != (n, C.shape[0]):
        raise ValidationError(f"must be {n}x{C.shape[0]}", "H")
    big_n = W.shape[0]
    if W.shape != (big_n, big_n):
        raise ValidationError("must be square", "W")
    for i in range(big_n):
        if W[i, i] != 0:
            raise ValidationError("w_ii must be 0", f"W[{i}][{i}]")

    delta = doc.get("delta", [1] * big_n)
    if not isinstance(delta, list) or len(delta) != big_n:
        raise ValidationError(f"must be an array of {big_n} entries", "delta")
    for i, d in enumerate(delta):
        if isinstance(d, bool) or d not in (0, 1):
            raise ValidationError("entries must be 0 or 1", f"delta[{i}]")

    if "h" not in doc:
        raise ValidationError("missing required field", "h")
    h = doc["h"]
    if isinstance(h, bool) or not isinstance(h, (int, float)) or not math.isfinite(h) or h <= 0:
        raise ValidationError("must be a positive finite number", "h")

    sys = NetworkedSystem(NodeDynamics(A, B, C, H), NetworkTopology(W, tuple(delta)), h)
    tol = _parse_tolerance(doc["tolerance"]) if "tolerance" in doc else None

    if "multirate" in doc:
        mr = doc["multirate"]
        if not isinstance(mr, dict):
            raise ValidationError("must be an object", "multirate")
        extra = sorted(set(mr) - {"kind", "l"})
        if extra:
            raise ValidationError("unknown key", f"multirate.{extra[0]}")
        if "kind" not in mr:
            raise ValidationError("missing required field", "multirate.kind")
        l = mr.get("l")
        if isinstance(l, bool) or not isinstance(l, int) or l < 1:
            raise ValidationError("must be an integer >= 1", "multirate.l")
        return MultiRateSpec(sys, mr["kind"], l), tol
    return sys, tol


def parse_system(text, lenient=False):
    """Parse a system document into a :class:`NetworkedSystem` or :class:`MultiRateSpec`."""
    return parse_document(text, lenient)[0]


def _real_rows(m):
    return [[float(x) for x in row] for row in np.real(m)]


def system_to_dict(obj, tol: Optional[Tolerance] = None):
    spec = obj if isinstance(obj, MultiRateSpec) else None
    sys = spec.base if spec else obj
    doc = {
        "A": _real_rows(sys.node.A),
        "B": _real_rows(sys.node.B),
        "C": _real_rows(sys.node.C),
        "H": _real_rows(sys.node.H),
        "W": _real_rows(sys.topo.W),
        "delta": list(sys.topo.delta),
        "h": sys.h,
    }
    if spec:
        doc["multirate"] = {"kind": spec.kind, "l": spec.l}
    if tol is not None:
        doc["tolerance"] = {"rank_rel": tol.rank_rel, "eig_cluster": tol.eig_cluster,
                            "chain_residual": tol.chain_residual}
    return doc


def serialize_system(obj, tol=None):
    return json.dumps(system_to_dict(obj, tol), indent=2)
