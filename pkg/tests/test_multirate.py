import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment
from numpy.testing import assert_allclose

from netctrl import fixtures
from netctrl.analyzer import Verdict, decompose
from netctrl.errors import ValidationError
from netctrl.multirate import (
    CMS_STACKING,
    analyze_multirate,
    check_cms,
    check_tms,
    geometric_sum,
    lift_cms,
    lift_tms,
    tms_spectrum,
)
from netctrl.numkernel import eig_clusters, kron
from netctrl.oracle import kalman_rank
from netctrl.sysmodel import MultiRateSpec, discretize

from conftest import random_system

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _small(seed):
    rng = np.random.default_rng(seed)
    return random_system(rng, N=int(rng.integers(2, 4)), n=int(rng.integers(1, 3))), rng


def test_geometric_sum():
    phi = np.array([[0.5, 1.0], [0.0, 2.0]])
    ref = np.eye(2) + phi + phi @ phi
    assert_allclose(geometric_sum(phi, 3), ref, atol=1e-14)
    assert_allclose(geometric_sum(phi, 1), np.eye(2))


@pytest.mark.parametrize("name", fixtures.NAMES)
def test_l1_lifts_are_single_rate(name):
    s = fixtures.fixture(name)
    ss = discretize(s)
    for lift, kind in ((lift_tms, "TMS"), (lift_cms, "CMS")):
        lifted = lift(MultiRateSpec(s, kind, 1))
        assert np.array_equal(lifted.phi, ss.phi_s)
        assert np.array_equal(lifted.psi, ss.psi_s)


def test_wrong_kind():
    spec = MultiRateSpec(fixtures.fixture("s1"), "CMS", 2)
    with pytest.raises(ValidationError):
        lift_tms(spec)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(min_value=2, max_value=3))
def test_tms_matches_simulation(seed, l):
    s, rng = _small(seed)
    ss = discretize(s)
    lifted = lift_tms(MultiRateSpec(s, "TMS", l))
    x0 = rng.standard_normal(ss.phi_s.shape[0])
    u = rng.standard_normal(ss.psi_s.shape[1])
    x = x0.astype(complex)
    for _ in range(l):
        x = ss.phi_s @ x + ss.psi_s @ u
    one = lifted.phi @ x0 + lifted.psi @ u
    assert np.linalg.norm(x - one) <= 1e-9 * max(1.0, np.linalg.norm(x))


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=4))
def test_spectral_mapping(seed, l):
    s, _ = _small(seed)
    ss = discretize(s)
    lifted = lift_tms(MultiRateSpec(s, "TMS", l))
    # cluster means: raw eigenvalues of a defective matrix split by ~eps^(1/k)
    want = np.array([cl.value ** l for cl in eig_clusters(ss.phi_s)
                     for _ in range(cl.multiplicity)])
    got = np.array([cl.value for cl in eig_clusters(lifted.phi) for _ in range(cl.multiplicity)])
    assert want.size == got.size
    cost = np.abs(want[:, None] - got[None, :])
    r, c = linear_sum_assignment(cost)
    scale = 1.0 + np.max(np.abs(want))
    assert cost[r, c].max() <= 1e-6 * scale


def test_cms_input_stacking():
    s = fixtures.fixture("s1")
    ss = discretize(s)
    lifted = lift_cms(MultiRateSpec(s, "CMS", 3))
    delta = s.topo.Delta
    blocks = [kron(delta, ss.eAh @ ss.eAh @ ss.Bh), kron(delta, ss.eAh @ ss.Bh),
              kron(delta, ss.Bh)]
    assert_allclose(lifted.psi, np.hstack(blocks), atol=1e-13)
    assert_allclose(lifted.phi, discretize(s.with_period(0.3)).phi_s, atol=1e-13)
    assert lifted.period == pytest.approx(0.3)


def test_tms_spectrum_collisions():
    s = fixtures.fixture("s3")
    fam = decompose(discretize(s), s.topo)
    pairs, collisions = tms_spectrum(fam, 2)
    assert len(pairs) == 4
    for base, lifted in pairs:
        assert lifted == pytest.approx(base ** 2)
    assert all(len(bases) > 1 for _, bases in collisions)


@pytest.mark.parametrize("name, kind, l, verdict", [
    ("s1", "TMS", 2, Verdict.CONTROLLABLE),
    ("s2", "CMS", 2, Verdict.CONTROLLABLE),
    ("s3", "TMS", 3, Verdict.CONTROLLABLE),
    ("s4", "CMS", 2, Verdict.UNCONTROLLABLE),
    ("s4", "TMS", 2, Verdict.UNCONTROLLABLE),
])
def test_analyze_multirate_fixtures(name, kind, l, verdict):
    rep = analyze_multirate(MultiRateSpec(fixtures.fixture(name), kind, l))
    assert rep.verdict is verdict
    d = rep.to_dict()
    assert (d["kind"], d["l"]) == (kind, l)


def test_cms_pathological_base_flag():
    rep = check_cms(MultiRateSpec(fixtures.fixture("s3"), "CMS", 1))
    assert "pathological_base_sampling" in rep.flags
    assert rep.evidence["input_stacking"] == CMS_STACKING


@settings(max_examples=30, deadline=None)
@given(seeds, st.sampled_from(["TMS", "CMS"]), st.integers(min_value=1, max_value=3))
def test_criterion_verdicts_confirmed_by_oracle(seed, kind, l):
    s, _ = _small(seed)
    spec = MultiRateSpec(s, kind, l)
    rep = (check_tms if kind == "TMS" else check_cms)(spec)
    lifted = (lift_tms if kind == "TMS" else lift_cms)(spec)
    ora = kalman_rank(lifted.phi, lifted.psi)
    if rep.verdict is Verdict.CONTROLLABLE:
        assert ora.reachable
    elif rep.verdict is Verdict.UNCONTROLLABLE:
        assert not ora.reachable
