"""Three-valued verdicts and the report object every criterion returns."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

SIG_DIGITS = 12


class Verdict(str, enum.Enum):
    CONTROLLABLE = "Controllable"
    UNCONTROLLABLE = "Uncontrollable"
    INCONCLUSIVE = "Inconclusive"

    @property
    def definite(self):
        return self is not Verdict.INCONCLUSIVE

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class AnalysisReport:
    """Outcome of one criterion.

    ``evidence`` is a free-form dict (witness vectors, eigenvalues, rank
    deficits, the list of verified conditions).  ``margins`` pairs a check
    name with its rank margin; values near 1 mark fragile decisions.
    """

    verdict: Verdict
    criterion: str
    evidence: dict = field(default_factory=dict)
    margins: tuple = ()
    flags: tuple = ()
    extra: dict = field(default_factory=dict)

    def with_flags(self, *flags):
        merged = tuple(dict.fromkeys(self.flags + tuple(flags)))
        return replace(self, flags=merged)

    def to_dict(self):
        doc = {
            "verdict": self.verdict.value,
            "criterion": self.criterion,
            "evidence": to_jsonable(self.evidence),
            "margins": [[name, to_jsonable(m)] for name, m in self.margins],
            "flags": list(self.flags),
        }
        doc.update(to_jsonable(self.extra))
        return doc

    def to_json(self, indent=2):
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)


def round_sig(x, digits=SIG_DIGITS):
    if x == 0 or not math.isfinite(x):
        return x
    return float(f"{x:.{digits}g}")


def to_jsonable(obj):
    """Convert numpy values into JSON-friendly data with stable rounding.

    Complex numbers become ``[re, im]``; non-finite floats become ``None``.
    """
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [to_jsonable(float(obj.real)), to_jsonable(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        x = round_sig(x)
        return 0.0 if x == 0 else x
    return obj
