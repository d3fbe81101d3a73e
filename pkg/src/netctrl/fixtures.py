"""The four reference networks used by the demos and the acceptance tests.

``s1``  two-node chain of a defective node, driven at node 1, h = 0.1
``s2``  the same node on a two-node cycle
``s3``  oscillatory node sampled at h = pi (pathological for the node alone),
        two-node cycle, one scalar input
``s4``  two-node chain whose node loses controllability under sampling.
        Only A, B, W and h are fixed by the scenario; H = I, C = diag{1, 0}
        and delta = (1, 1) are our choice.  The verdict does not depend on
        them because the singular topology forces the node pair itself to be
        controllable, and it is not.
"""
import json
import math

from .sysmodel import make_system, serialize_system

_SPECS = {
    "s1": dict(A=[[1, 0], [1, 1]], B=[[1, 0], [0, 1]], C=[[1, 0], [0, 0]],
               H=[[1, 0], [0, 1]], W=[[0, 0], [1, 0]], delta=[1, 0], h=0.1),
    "s2": dict(A=[[1, 0], [1, 1]], B=[[1, 0], [0, 1]], C=[[1, 0], [0, 0]],
               H=[[1, 0], [0, 1]], W=[[0, 1], [1, 0]], delta=[1, 0], h=0.1),
    "s3": dict(A=[[1, 1], [-1, 1]], B=[[1], [0]], C=[[1, 0], [0, 1]],
               H=[[1, 0], [0, 1]], W=[[0, 1], [1, 0]], delta=[1, 0], h=math.pi),
    "s4": dict(A=[[1, 0], [1, 1]], B=[[0, 0], [0, 1]], C=[[1, 0], [0, 0]],
               H=[[1, 0], [0, 1]], W=[[0, 0], [1, 0]], delta=[1, 1], h=0.1),
}

NAMES = tuple(sorted(_SPECS))


def fixture(name):
    """The :class:`NetworkedSystem` called ``name`` (``s1`` .. ``s4``)."""
    try:
        spec = _SPECS[name.lower()]
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; expected one of {', '.join(NAMES)}") from None
    return make_system(**spec)


def fixture_json(name):
    return serialize_system(fixture(name))


def fixture_dict(name):
    return json.loads(fixture_json(name))
