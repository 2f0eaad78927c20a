import numpy as np
import pytest
import scipy.linalg

from foliation_lab.cone import (
    certified_relations,
    estimate_foliation_cone,
    is_dense_in_sphere,
    is_transversal_type,
)
from foliation_lab.field import PolyVectorField
from foliation_lab.scenarios import get_scenario
from foliation_lab.variety import AnalyticSetModel, canonicalize, projective_angle, subspaces_equal


def cone_at(sid, p, seed=0, **kw):
    sc = get_scenario(sid)
    return estimate_foliation_cone(sc.field, sc.E, np.asarray(p, dtype=complex),
                                   rng=np.random.default_rng(seed), **kw)


@pytest.mark.parametrize("sid", ["E1.3.1", "E1.3.2", "E1.3.3"])
def test_planar_cones_fill_c2(sid):
    cone = cone_at(sid, [0, 0])
    assert cone.relations is None
    assert cone.span_hint is not None and cone.span_hint.shape[1] == 2


@pytest.mark.parametrize("c", [0.0, 0.3, -0.5j, 0.8])
def test_example_14_cone(c):
    cone = cone_at("E1.4", [0, 0, c])
    assert cone.relations.shape == (1, 3)
    assert projective_angle(cone.relations[0], np.array([0, 0, 1])) < 1e-8
    assert subspaces_equal(cone.span_hint, np.eye(3)[:, :2])
    assert np.max(np.abs(cone.directions[:, 2])) <= 1e-8


@pytest.mark.parametrize("p", [(0, 0.5, 0), (0, 0, 0.5), (0, 0, 0)])
def test_example_15_cone(p):
    cone = cone_at("E1.5", p)
    assert projective_angle(cone.relations[0], np.array([0, 1, -1])) < 1e-6
    assert subspaces_equal(cone.span_hint, np.array([[1, 0, 0], [0, 1, 1]]).T)


def test_cone_is_scale_invariant():
    cone = cone_at("E1.5", [0, 0, 0])
    lam = 3.7 * np.exp(1.1j)
    assert np.allclose(canonicalize(lam * cone.directions), cone.directions)


def test_denser_sampling_keeps_relations():
    sparse = cone_at("E1.5", [0, 0.5, 0], samples_per_scale=100)
    dense = cone_at("E1.5", [0, 0.5, 0], samples_per_scale=1000, seed=9)
    assert subspaces_equal(sparse.relations.conj().T, dense.relations.conj().T)


def test_relation_certificate_threshold():
    rng = np.random.default_rng(1)
    D = rng.normal(size=(50, 3)) + 1j * rng.normal(size=(50, 3))
    D[:, 2] = 1e-6 * rng.normal(size=50)  # small, but no exact relation
    assert len(certified_relations(D)) == 0
    D[:, 2] = 0
    assert len(certified_relations(D)) == 1


def test_density_detects_missing_cap():
    basis = np.eye(2, dtype=complex)
    rng = np.random.default_rng(0)
    v = rng.normal(size=(5000, 2)) + 1j * rng.normal(size=(5000, 2))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    assert is_dense_in_sphere(v, basis)
    keep = np.abs(v[:, 0]) < 0.9  # remove every direction near e1
    assert not is_dense_in_sphere(v[keep], basis)


def test_degenerate_scales_are_reported():
    X = PolyVectorField.parse("x ; y ; 0")
    E = AnalyticSetModel.parse("linear base=(0,0,0) span=(0,0,1)", singular=True)
    cone = estimate_foliation_cone(X, E, np.zeros(3, complex), scales=[0.1, 1e-320])
    assert 1e-320 in cone.skipped_scales


def test_transversal_example_14():
    sc = get_scenario("E1.4")
    v = is_transversal_type(sc.field, sc.E, np.array([0, 0, 0.3j]), rng=np.random.default_rng(0))
    assert v.verdict == "transversal" and v.min_angle == pytest.approx(np.pi / 2)


@pytest.mark.parametrize("p", [(0, 0.5, 0), (0, 0, 0.5), (0, 0, 0)])
def test_transversal_example_15(p):
    sc = get_scenario("E1.5")
    v = is_transversal_type(sc.field, sc.E, np.array(p, dtype=complex), rng=np.random.default_rng(2))
    assert v.verdict == "transversal" and v.min_angle >= 0.1


def test_not_transversal_example_16():
    sc = get_scenario("E1.16")
    v = is_transversal_type(sc.field, sc.E, np.array([0, -0.4j, 0]), rng=np.random.default_rng(0))
    assert v.verdict == "not_transversal"
    z, d, q, e = v.witness
    assert projective_angle(d, [0, 1, 0]) <= 1e-3
    assert projective_angle(e, [0, 1, 0]) <= 1e-3


def test_not_transversal_example_18():
    sc = get_scenario("E1.18")
    v = is_transversal_type(sc.field, sc.E, np.array([0.6, 0, 0]), rng=np.random.default_rng(0))
    assert v.verdict == "not_transversal"
    assert projective_angle(v.witness[1], [1, 0, 0]) <= 1e-3


def test_transversal_needs_points_of_e():
    sc = get_scenario("E1.4")
    with pytest.raises(ValueError):
        is_transversal_type(sc.field, sc.E, np.array([0.5, 0, 0]))


def test_span_hint_is_orthonormal():
    cone = cone_at("E1.5", [0, 0, 0.5])
    assert np.allclose(cone.span_hint.conj().T @ cone.span_hint, np.eye(2))
    assert subspaces_equal(scipy.linalg.null_space(cone.relations), cone.span_hint)
