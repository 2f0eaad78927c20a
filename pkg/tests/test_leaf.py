import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from foliation_lab.field import Polydisc, PolyVectorField
from foliation_lab.leaf import (
    XI,
    ChartError,
    FlowError,
    LeafChart,
    Model,
    certified_flow_disc_radius,
    classify_model_leaf,
    flow,
)
from foliation_lab.scenarios import get_scenario, scenario_ids

LINEAR = PolyVectorField.parse("x ; 2*y", Polydisc.unit(2, 4.0))


def test_linear_flow_closed_form():
    p = np.array([1.0, 1.0])
    for t in (0.3, 0.2 + 0.4j, -0.5j):
        res = flow(LINEAR, p, t)
        exact = np.array([np.exp(t), np.exp(2 * t)])
        assert np.linalg.norm(res.endpoint - exact) <= 1e-8 * np.linalg.norm(exact)


def test_constant_field_on_invariant_plane():
    X = get_scenario("E1.15").field
    c = 0.4 - 0.2j
    res = flow(X, [0, 0, c], 1.5 + 0.5j)
    assert np.allclose(res.endpoint, [c * (1.5 + 0.5j), 0, c], atol=1e-12)


def test_half_turn():
    X = PolyVectorField.parse("x ; 0")
    res = flow(X, [0.5, 0], 1j * np.pi)
    assert np.allclose(res.endpoint, [-0.5, 0], atol=1e-9)
    assert res.certified


def test_exit_reports_fraction():
    X = PolyVectorField.parse("x ; 0")
    with pytest.raises(FlowError) as err:
        flow(X, [0.5, 0], 1.0)
    assert err.value.exit_fraction == pytest.approx(np.log(2), rel=1e-6)


def test_uncertified_when_leaving_safety_region():
    X = PolyVectorField.parse("1 ; 0")
    res = flow(X, [0, 0], 0.95)
    assert not res.certified and res.max_gauge == pytest.approx(0.95)


def test_constant_field_radius_tends_to_one():
    X = PolyVectorField.parse("1 ; 0")
    assert certified_flow_disc_radius(X, [0, 0], safety=0.999) == pytest.approx(0.999, rel=1e-3)


def test_euler_field_radius_lower_bound():
    X = PolyVectorField.parse("x")
    assert certified_flow_disc_radius(X, [0.5], safety=0.9) >= 0.9 * 0.5


def test_radius_against_blow_out_time():
    # |t| < R must keep the flow inside; the exact exit along t real is ln(4)/2
    X = PolyVectorField.parse("x ; 2*y")
    p = np.array([0.25, 0.25])
    R = certified_flow_disc_radius(X, p, safety=0.9)
    exit_time = np.log(4) / 2
    assert 0.9 * exit_time * 0.9 <= R <= exit_time
    # and the certified disc really stays in the domain
    for th in np.linspace(0, 2 * np.pi, 24, endpoint=False):
        assert flow(X, p, 0.999 * R * np.exp(1j * th)).max_gauge < 1


def test_radius_rejects_bad_safety_and_zero_field():
    X = PolyVectorField.parse("x ; 2*y")
    with pytest.raises(ValueError):
        certified_flow_disc_radius(X, [0.1, 0.1], safety=1.0)
    with pytest.raises(FlowError):
        certified_flow_disc_radius(PolyVectorField.parse("0 ; 0"), [0.1, 0.1])


def test_classify_example_15_plane():
    c = 0.3 + 0.1j
    ch = classify_model_leaf("E1.15", [0, 0, c])
    assert ch.model == Model.disc(1.0) and ch.base_param == 0
    assert np.allclose(ch(np.array(0.2j)), [0.2j, 0, c])


def test_classify_example_16_punctured():
    ch = classify_model_leaf("E1.16", [0, 0.4, 0.2j])
    assert ch.model.kind == "punctured_disc" and ch.model.r == 1.0
    assert ch.base_param == pytest.approx(0.4)
    assert np.allclose(ch(np.array(-0.1)), [0, -0.1, 0.2j])


def test_classify_example_15_g_leaf():
    w0 = 0.3 - 0.2j
    ch = classify_model_leaf("E1.15", [w0, w0**2 / 2, w0**2 / 2])
    assert ch.family == "g-leaf" and ch.base_param == pytest.approx(w0)
    assert ch.model.kind == "punctured_disc"


def test_classify_uncovered_point():
    with pytest.raises(ChartError):
        classify_model_leaf("E1.15", [0.3, 0.2, 0.1])


@pytest.mark.parametrize("sid", [s for s in scenario_ids() if get_scenario(s).leaf_families])
def test_registered_charts_are_consistent(sid):
    sc = get_scenario(sid)
    rng = np.random.default_rng(5)
    for fam in sc.leaf_families:
        for p in fam.sample(rng, 3):
            rep = fam.chart(p).validate(sc.field, sc.E, samples=1000, rng=rng)
            assert rep["max_tangency_residual"] <= 1e-8
            assert rep["min_separation"] > 0 and rep["min_derivative"] > 0


def test_validate_catches_wrong_chart():
    X = get_scenario("E1.15").field
    bad = LeafChart(Model.disc(0.5), (XI, XI, sp.Float(0.3)), 0j)
    with pytest.raises(ChartError):
        bad.validate(X)
    on_E = LeafChart(Model.disc(0.9), (XI, sp.Integer(0), sp.Integer(0)), 0.1)
    with pytest.raises(ChartError):
        on_E.validate(X, get_scenario("E1.15").E)
    flat = LeafChart(Model.disc(0.9), (sp.Integer(0), sp.Integer(0), sp.Float(0.3)), 0.1)
    with pytest.raises(ChartError):
        flat.validate()


points = st.tuples(st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))
times = st.builds(complex, st.floats(-0.3, 0.3), st.floats(-0.3, 0.3))


@settings(max_examples=100)
@given(points, times, times)
def test_group_law(p, s, t):
    X = PolyVectorField.parse("x*y + 1 ; z - y ; I*x", Polydisc.unit(3))
    z = np.array([p[0] + 1j * p[1], p[2] + 1j * p[3], 0.1])
    a = flow(X, z, s)
    b = flow(X, a.endpoint, t)
    c = flow(X, z, s + t)
    if a.certified and b.certified and c.certified:
        assert np.linalg.norm(b.endpoint - c.endpoint) <= 1e-7


@given(points)
def test_tangency(p):
    X = PolyVectorField.parse("x*y + 1 ; z - y ; I*x", Polydisc.unit(3))
    z = np.array([p[0] + 1j * p[1], p[2] + 1j * p[3], -0.2j])
    h = 1e-5
    fd = (flow(X, z, h).endpoint - flow(X, z, -h).endpoint) / (2 * h)
    fdi = (flow(X, z, 1j * h).endpoint - flow(X, z, -1j * h).endpoint) / (2j * h)
    assert np.linalg.norm(fd - X(z)) <= 1e-6
    assert np.linalg.norm(fdi - X(z)) <= 1e-6
