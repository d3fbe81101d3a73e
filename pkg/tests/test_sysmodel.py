import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from netctrl import fixtures
from netctrl.errors import DimensionMismatch, NonPositivePeriod, ParseError, ValidationError
from netctrl.numkernel import kron
from netctrl.sysmodel import (
    MultiRateSpec,
    NetworkTopology,
    NodeDynamics,
    assemble_continuous,
    discretize,
    make_system,
    parse_document,
    parse_system,
    serialize_system,
    system_to_dict,
)

from conftest import random_system

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def _doc(**overrides):
    doc = fixtures.fixture_dict("s1")
    doc.update(overrides)
    return json.dumps(doc)


class TestTypes:
    def test_node_rejects_complex(self):
        with pytest.raises(ValidationError):
            NodeDynamics(np.array([[1j]]), np.eye(1), np.eye(1), np.eye(1))

    def test_node_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            NodeDynamics(np.eye(2), np.ones((3, 1)), np.eye(2), np.eye(2))

    def test_topology_zero_diagonal(self):
        with pytest.raises(ValidationError, match="w_ii must be 0"):
            NetworkTopology(np.ones((2, 2)), (1, 1))

    def test_topology_delta_binary(self):
        with pytest.raises(ValidationError):
            NetworkTopology(np.zeros((2, 2)), (1, 2))

    def test_period_positive(self):
        with pytest.raises(NonPositivePeriod):
            make_system([[1.0]], [[1.0]], [[0.0]], 0.0)

    def test_multirate_spec_validation(self):
        s = fixtures.fixture("s1")
        with pytest.raises(ValidationError):
            MultiRateSpec(s, "XMS", 2)
        with pytest.raises(ValidationError):
            MultiRateSpec(s, "TMS", 0)


class TestAssembly:
    def test_decoupled(self):
        a, b = np.array([[0.0, 1], [-1, 0]]), np.array([[0.0], [1]])
        phi, psi = assemble_continuous(make_system(a, b, np.zeros((3, 3)), 0.1))
        assert_allclose(phi, kron(np.eye(3), a))
        assert_allclose(psi, kron(np.eye(3), b))

    def test_s1_coupling_block(self):
        phi, _ = assemble_continuous(fixtures.fixture("s1"))
        assert_allclose(phi[2:, :2], np.diag([1.0, 0.0]))

    def test_single_node(self):
        s = make_system([[2.0]], [[3.0]], [[0.0]], 0.5, delta=[0])
        phi, psi = assemble_continuous(s)
        assert_allclose(phi, [[2.0]])
        assert_allclose(psi, [[0.0]])


class TestDiscretize:
    def test_s1_printed_matrices(self):
        ss = discretize(fixtures.fixture("s1"))
        assert_allclose(ss.Hh, [[0.1052, 0], [0.0053, 0]], atol=5e-4)
        assert_allclose(ss.Bh, [[0.1052, 0], [0.0053, 0.1052]], atol=5e-4)

    def test_s3_printed_matrices(self):
        ss = discretize(fixtures.fixture("s3"))
        assert_allclose(ss.Hh, [[-12.0703, 12.0703], [-12.0703, -12.0703]], atol=5e-4)
        assert_allclose(ss.Bh, [[-12.0703], [-12.0703]], atol=5e-4)

    def test_zero_coupling_decouples(self):
        s = make_system([[0.0, 1], [-2, -1]], [[0.0], [1]], [[0, 1], [1, 0]], 0.3,
                        H=np.zeros((2, 2)))
        ss = discretize(s)
        assert_allclose(ss.phi_s, kron(np.eye(2), ss.eAh), atol=1e-15)

    @settings(max_examples=40, deadline=None)
    @given(seeds)
    def test_rebuild_matches(self, seed):
        ss = discretize(random_system(np.random.default_rng(seed)))
        phi, psi = ss.rebuild()
        assert_allclose(phi, ss.phi_s, atol=1e-12)
        assert_allclose(psi, ss.psi_s, atol=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(seeds, st.sampled_from([1e-3, 1e-4, 1e-5]))
    def test_first_order_consistency(self, seed, h):
        s = random_system(np.random.default_rng(seed), h=h)
        ss = discretize(s)
        a = np.linalg.norm(s.node.A, 2)
        bound = 2 * h * (a + np.linalg.norm(s.topo.W, 2) * np.linalg.norm(s.node.HC, 2))
        assert np.linalg.norm(ss.phi_s - np.eye(ss.phi_s.shape[0]), 2) <= bound + 1e-15


class TestParse:
    def test_s1(self):
        s = parse_system(fixtures.fixture_json("s1").encode())
        assert (s.N, s.n, s.h) == (2, 2, 0.1)

    def test_delta_default(self):
        doc = fixtures.fixture_dict("s1")
        del doc["delta"]
        assert parse_system(json.dumps(doc)).topo.delta == (1, 1)

    def test_c_h_default_identity(self):
        doc = fixtures.fixture_dict("s1")
        del doc["C"], doc["H"]
        s = parse_system(json.dumps(doc))
        assert_allclose(s.node.C, np.eye(2))
        assert_allclose(s.node.H, np.eye(2))

    def test_nonzero_diagonal(self):
        with pytest.raises(ValidationError, match="w_ii must be 0") as exc:
            parse_system(_doc(W=[[1, 0], [1, 0]]))
        assert exc.value.path == "W[0][0]"

    def test_malformed_json(self):
        with pytest.raises(ParseError):
            parse_system(b"{not json")

    def test_not_utf8(self):
        with pytest.raises(ParseError):
            parse_system(b"\xff\xfe")

    @pytest.mark.parametrize("override, path", [
        ({"A": [[1, 2, 3]]}, "A"),
        ({"B": [[1], [2], [3]]}, "B"),
        ({"A": [[[1]]]}, "A"),
        ({"A": [[1, "x"], [0, 1]]}, "A[0][1]"),
        ({"delta": [1, 2]}, "delta[1]"),
        ({"delta": [1]}, "delta"),
        ({"h": -0.1}, "h"),
        ({"h": True}, "h"),
        ({"tolerance": {"rank_rel": 0}}, "tolerance"),
        ({"tolerance": {"bogus": 1}}, "tolerance.bogus"),
        ({"multirate": {"kind": "TMS", "l": 0}}, "multirate.l"),
        ({"multirate": {"kind": "QMS", "l": 2}}, "multirate.kind"),
    ])
    def test_validation_paths(self, override, path):
        with pytest.raises(ValidationError) as exc:
            parse_system(_doc(**override))
        assert exc.value.path == path
        assert str(exc.value).startswith(path + ":")

    def test_missing_field(self):
        doc = fixtures.fixture_dict("s1")
        del doc["h"]
        with pytest.raises(ValidationError, match="missing"):
            parse_system(json.dumps(doc))

    def test_unknown_key_strict_and_lenient(self):
        with pytest.raises(ValidationError):
            parse_system(_doc(comment="x"))
        with pytest.warns(UserWarning, match="comment"):
            s = parse_system(_doc(comment="x"), lenient=True)
        assert s.N == 2

    def test_multirate_and_tolerance(self):
        obj, tol = parse_document(_doc(multirate={"kind": "CMS", "l": 3},
                                       tolerance={"rank_rel": 1e-8}))
        assert isinstance(obj, MultiRateSpec) and (obj.kind, obj.l) == ("CMS", 3)
        assert tol.rank_rel == 1e-8 and tol.eig_cluster == 1e-7

    @pytest.mark.parametrize("name", fixtures.NAMES)
    def test_round_trip(self, name):
        s = fixtures.fixture(name)
        again = parse_system(serialize_system(s))
        assert system_to_dict(again) == system_to_dict(s)

    def test_round_trip_multirate(self):
        spec = MultiRateSpec(fixtures.fixture("s2"), "TMS", 2)
        again = parse_system(serialize_system(spec))
        assert system_to_dict(again) == system_to_dict(spec)


def test_unknown_fixture():
    with pytest.raises(KeyError):
        fixtures.fixture("s9")
