import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from netctrl import fixtures
from netctrl.analyzer import (
    AnalysisReport,
    Verdict,
    analyze,
    check_chain,
    check_circle,
    check_diagonalizable,
    check_necessary,
    check_scalar,
    check_selfloop,
    check_star,
    circle_eigenvalues,
    decompose,
    eigenspace_phis,
    is_chain,
    is_cycle,
    is_pathological,
    is_star,
    pbh_single_continuous,
    pbh_sweep,
    to_jsonable,
)
from netctrl.errors import NotApplicable, UnknownEigenvalue, ZeroWeight
from netctrl.numkernel import eigvals, expm_with_integral, pbh_rank
from netctrl.oracle import kalman_rank
from netctrl.sysmodel import discretize, make_system

from conftest import random_system

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _fam(name):
    s = fixtures.fixture(name)
    ss = discretize(s)
    return s, ss, decompose(ss, s.topo)


class TestPBH:
    def test_controllable_pair(self):
        fails, margin = pbh_sweep(np.array([[0.0, 1], [0, 0]]), np.array([[0.0], [1]]))
        assert fails == [] and margin > 1

    def test_uncontrollable_pair_witness(self):
        a = np.diag([1.0, 2.0])
        fails, _ = pbh_sweep(a, np.array([[1.0], [0.0]]))
        (f,) = fails
        assert abs(f.value - 2) < 1e-12
        assert np.linalg.norm(f.witness @ a - 2 * f.witness) < 1e-12

    def test_continuous_single(self):
        assert pbh_single_continuous(np.eye(2), np.eye(2)).verdict is Verdict.CONTROLLABLE


class TestPathological:
    def test_oscillator_at_pi(self):
        flag, wit = is_pathological(np.array([[1.0, 1], [-1, 1]]), np.pi)
        assert flag
        la, lb, k = wit[0]
        assert {round(la.imag), round(lb.imag)} == {1, -1} and k == 1

    def test_not_pathological(self):
        assert not is_pathological(np.array([[1.0, 1], [-1, 1]]), 1.0)[0]
        assert not is_pathological(np.eye(2), np.pi)[0]

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_pathological_implies_sampled_pbh_loss(self, seed):
        rng = np.random.default_rng(seed)
        omega = float(rng.integers(1, 4))
        sigma = float(rng.integers(-1, 2))
        n = int(rng.integers(2, 4))
        a = np.zeros((n, n))
        a[:2, :2] = [[sigma, omega], [-omega, sigma]]
        if n == 3:
            a[2, 2] = -1.0
        # strictly diagonally dominant, hence invertible
        q = rng.integers(-1, 2, (n, n)) + 4 * np.eye(n)
        a = q @ a @ np.linalg.inv(q)
        b = np.eye(n)
        h = np.pi / omega * int(rng.integers(1, 3))
        flag, _ = is_pathological(a, h)
        assert flag
        e, g = expm_with_integral(a, h)
        bh = g @ b[:, :1]
        worst = min(pbh_rank(e, bh, lam).rank for lam in eigvals(e))
        assert worst < n


class TestDecompose:
    def test_s1_entries(self):
        _, ss, fam = _fam("s1")
        assert len(fam.entries) == 1
        assert_allclose(fam.entries[0].E, ss.eAh, atol=1e-14)
        assert not fam.jordan.is_diagonalizable

    def test_s2_entries_and_shared(self):
        _, _, fam = _fam("s2")
        by_lam = {round(e.lam.real): e.E for e in fam.entries}
        assert_allclose(by_lam[1], [[1.2103, 0], [0.1159, 1.1052]], atol=5e-4)
        assert_allclose(by_lam[-1], [[1.0, 0], [0.1052, 1.1052]], atol=5e-4)
        shared = [t for t, owners in fam.distinct_eigenvalues()
                  if len({i for i, _ in owners}) > 1]
        assert len(shared) == 1 and abs(shared[0] - np.exp(0.1)) < 1e-9

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_spectrum_union(self, seed):
        s = random_system(np.random.default_rng(seed))
        ss = discretize(s)
        try:
            fam = decompose(ss, s.topo)
        except Exception:
            return
        assert fam.union_error <= 1e-6


class TestEigenspace:
    def test_s1_basis(self):
        _, ss, fam = _fam("s1")
        b = eigenspace_phis(fam, fam.nearest_eigenvalue(1.1052))
        assert b.complete and b.dim == 2
        assert_allclose(b.basis[0], [1, 0, 0, 0], atol=1e-12)
        assert_allclose(b.basis[1], [0, -0.9516, 1, 0], atol=5e-4)

    def test_unknown_eigenvalue(self):
        _, _, fam = _fam("s1")
        with pytest.raises(UnknownEigenvalue):
            eigenspace_phis(fam, 3.0)

    @settings(max_examples=50, deadline=None)
    @given(seeds)
    def test_basis_vectors_are_eigenvectors(self, seed):
        s = random_system(np.random.default_rng(seed))
        ss = discretize(s)
        try:
            fam = decompose(ss, s.topo)
        except Exception:
            return
        scale = max(np.linalg.norm(ss.phi_s, 2), 1.0)
        for theta, _ in fam.distinct_eigenvalues():
            b = eigenspace_phis(fam, theta)
            for eta in b.basis:
                r = np.linalg.norm(eta @ ss.phi_s - b.theta * eta) / np.linalg.norm(eta)
                assert r <= 1e-6 * scale
            if fam.jordan.is_diagonalizable:
                assert b.dim == b.direct_dim


class TestTopologies:
    def test_patterns(self):
        chain = np.array([[0, 0, 0], [1, 0, 0], [0, 2, 0]])
        star = np.array([[0, 0, 0], [1, 0, 0], [-1, 0, 0]])
        cycle = np.array([[0, 0, 3], [1, 0, 0], [0, 2, 0]])
        assert is_chain(chain) and not is_chain(cycle)
        assert is_star(star) and not is_star(chain)
        assert is_cycle(cycle) and not is_cycle(chain)

    def test_chain_s1(self):
        s, ss, _ = _fam("s1")
        assert check_chain(ss, s.topo).verdict is Verdict.CONTROLLABLE

    def test_chain_not_applicable(self):
        s, ss, _ = _fam("s2")
        with pytest.raises(NotApplicable):
            check_chain(ss, s.topo)

    def test_star_agrees_with_oracle(self):
        a = np.array([[0.0, 1], [-2, -3]])
        b = np.array([[0.0], [1]])
        w = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
        s = make_system(a, b, w, 0.5, delta=[1, 0, 1])
        ss = discretize(s)
        rep = check_star(ss, s.topo, node=s.node)
        ora = kalman_rank(ss.phi_s, ss.psi_s)
        if rep.verdict.definite:
            assert (rep.verdict is Verdict.CONTROLLABLE) == ora.reachable

    def test_star_not_applicable(self):
        s, ss, _ = _fam("s1")
        with pytest.raises(NotApplicable):
            check_star(ss, s.topo, node=s.node)

    @pytest.mark.parametrize("w", [
        [[0, 2], [3, 0]],
        [[0, 0, -1], [2, 0, 0], [0, 1, 0]],
        [[0, 0, 0, 0.5], [-1, 0, 0, 0], [0, 2, 0, 0], [0, 0, -3, 0]],
    ])
    def test_circle_closed_form(self, w):
        w = np.array(w, dtype=float)
        closed = np.sort_complex(np.array(circle_eigenvalues(w)))
        numeric = np.sort_complex(np.linalg.eigvals(w))
        assert_allclose(closed, numeric, atol=1e-8)

    def test_circle_zero_weight(self):
        with pytest.raises(ZeroWeight):
            circle_eigenvalues(np.array([[0.0, 0.0], [1.0, 0.0]]))

    def test_circle_s2(self):
        s, ss, fam = _fam("s2")
        assert check_circle(ss, s.topo, fam=fam).verdict is Verdict.CONTROLLABLE


class TestSpecialDynamics:
    def test_scalar_uncontrollable(self):
        # two undriven identical leaves of a star cannot be told apart
        w = np.array([[0, 0, 0], [1, 0, 0], [1, 0, 0]], dtype=float)
        s = make_system([[-1.0]], [[1.0]], w, 0.2, delta=[1, 0, 0])
        rep = check_scalar(s)
        assert rep.verdict is Verdict.UNCONTROLLABLE

    def test_scalar_not_applicable(self):
        with pytest.raises(NotApplicable):
            check_scalar(fixtures.fixture("s1"))
        with pytest.raises(NotApplicable):
            check_scalar(make_system([[0.0]], [[1.0]], [[0, 1], [1, 0]], 0.1))

    def test_selfloop(self):
        s = make_system(np.eye(2), np.eye(2), [[0, 1], [1, 0]], 0.5, delta=[1, 0])
        rep = check_selfloop(s)
        ora = kalman_rank(*[getattr(discretize(s), k) for k in ("phi_s", "psi_s")])
        assert rep.verdict.definite
        assert (rep.verdict is Verdict.CONTROLLABLE) == ora.reachable
        with pytest.raises(NotApplicable):
            check_selfloop(fixtures.fixture("s1"))


class TestNecessary:
    def test_s4_singular_topology(self):
        s, ss, fam = _fam("s4")
        rep = check_necessary(ss, fam)
        assert rep.verdict is Verdict.UNCONTROLLABLE
        assert rep.criterion == "necessary_singular_topology"
        assert rep.evidence["rank"] == 1 and rep.evidence["required_rank"] == 2

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_degenerate_driver(self, seed):
        s = random_system(np.random.default_rng(seed))
        s = make_system(s.node.A, s.node.B, s.topo.W, s.h, s.node.C, s.node.H,
                        delta=[0] * s.N)
        ss = discretize(s)
        rep = analyze(s)
        if ss.is_nonsingular:
            assert rep.verdict is Verdict.UNCONTROLLABLE


class TestAnalyze:
    @pytest.mark.parametrize("name, verdict, criterion", [
        ("s1", Verdict.CONTROLLABLE, "chain_topology"),
        ("s2", Verdict.CONTROLLABLE, "circle_topology"),
        ("s3", Verdict.CONTROLLABLE, "circle_topology"),
        ("s4", Verdict.UNCONTROLLABLE, "necessary_singular_topology"),
    ])
    def test_fixtures(self, name, verdict, criterion):
        rep = analyze(fixtures.fixture(name))
        assert (rep.verdict, rep.criterion) == (verdict, criterion)

    def test_s3_pathology_note(self):
        rep = analyze(fixtures.fixture("s3"))
        assert "pathological_node_sampling" in rep.flags
        assert rep.evidence["note"] == "node sampling pathological, eliminated by network"

    def test_diagonalizable_s2(self):
        s, ss, fam = _fam("s2")
        rep = check_diagonalizable(ss, fam)
        assert rep.verdict is Verdict.CONTROLLABLE
        assert rep.evidence["conditions"]["shared_eigenvalues"]

    def test_singular_transition_flag(self):
        # A with eigenvalue driving e^{Ah} + lam H(h) singular
        s = make_system([[0.0]], [[1.0]], [[0, 1], [1, 0]], 1.0, C=[[1.0]], H=[[-1.0]],
                        delta=[1, 0])
        rep = analyze(s)
        if not discretize(s).is_nonsingular:
            assert "reachability_based" in rep.flags
            assert "controllable_to_origin" in rep.evidence

    @settings(max_examples=60, deadline=None)
    @given(seeds)
    def test_soundness(self, seed):
        s = random_system(np.random.default_rng(seed))
        ss = discretize(s)
        rep = analyze(s, exhaustive=True)
        ora = kalman_rank(ss.phi_s, ss.psi_s)
        assert rep.verdict.definite
        assert (rep.verdict is Verdict.CONTROLLABLE) == ora.reachable

    def test_exhaustive_lists_every_criterion(self):
        quick = analyze(fixtures.fixture("s2"))
        full = analyze(fixtures.fixture("s2"), exhaustive=True)
        assert quick.verdict is full.verdict and quick.criterion == full.criterion
        names = [c["criterion"] for c in full.to_dict()["evidence"]["criteria"]]
        assert names == ["necessary_conditions", "circle_topology",
                         "diagonalizable_topology", "eigenspace_annihilation"]

    def test_json_deterministic(self):
        a = analyze(fixtures.fixture("s1")).to_json()
        b = analyze(fixtures.fixture("s1")).to_json()
        assert a == b
        doc = json.loads(a)
        assert doc["verdict"] == "Controllable"


def test_to_jsonable():
    out = to_jsonable({"z": 1 + 2j, "x": float("nan"), "m": np.array([[1.0, 2.0]]),
                       "v": Verdict.INCONCLUSIVE, "f": 1.0 / 3})
    assert out["z"] == [1.0, 2.0]
    assert out["x"] is None
    assert out["m"] == [[1.0, 2.0]]
    assert out["v"] == "Inconclusive"
    assert out["f"] == 0.333333333333


def test_report_with_flags():
    rep = AnalysisReport(Verdict.CONTROLLABLE, "x", {}).with_flags("a", "a", "b")
    assert rep.flags == ("a", "b")
