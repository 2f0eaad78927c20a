import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from foliation_lab.eta import (
    EtaError,
    EtaSample,
    PathSpec,
    completeness_probe,
    discontinuity_scan,
    eta_at,
    eta_exact,
    eta_lower_flow,
    eta_sequence_limits,
    eta_upper_ambient,
    ex32_bounds_check,
    ex32_density,
    extremal_radius,
    metric_length,
    model_uniformizer,
    threshold,
)
from foliation_lab.field import Polydisc, PolyVectorField
from foliation_lab.leaf import Model, classify_model_leaf
from foliation_lab.scenarios import get_scenario

D1 = Model.disc(1.0)
PD1 = Model.punctured_disc(1.0)


def test_extremal_radius_closed_forms():
    assert extremal_radius(D1, 0) == 1.0
    assert extremal_radius(Model.disc(0.3), 0) == pytest.approx(0.3)
    assert extremal_radius(PD1, np.exp(-1)) == pytest.approx(2 / np.e, rel=1e-14)
    z = 0.2 + 0.3j
    assert extremal_radius(Model.disc(2.0), z) == pytest.approx((4 - abs(z) ** 2) / 2)
    assert extremal_radius(Model.punctured_disc(0.5), z) == pytest.approx(2 * abs(z) * np.log(0.5 / abs(z)))


def test_extremal_radius_rejects_puncture_and_outside():
    with pytest.raises(EtaError):
        extremal_radius(PD1, 0)
    with pytest.raises(EtaError):
        extremal_radius(D1, 1.0)


@pytest.mark.parametrize("model,zeta", [(PD1, 0.3), (PD1, -0.05j), (Model.disc(0.7, 0.1), 0.4),
                                        (Model.punctured_disc(0.8, 0.1j, 0.3), 0.5 + 0.1j)])
def test_uniformizer_realises_extremal_radius(model, zeta):
    phi = model_uniformizer(model, zeta)
    h = 1e-6
    deriv = (phi(h) - phi(-h)) / (2 * h)
    assert phi(0) == pytest.approx(zeta, abs=1e-12)
    assert abs(deriv) == pytest.approx(extremal_radius(model, zeta), rel=1e-6)
    v = 0.95 * np.exp(2j * np.pi * np.arange(16) / 16)
    assert np.all(model.contains(phi(v)))


@pytest.mark.parametrize("c", [0.5, 0.1j, -1e-3])
def test_eta_exact_on_plane_leaves(c):
    smp = eta_exact(classify_model_leaf("E1.15", [0, 0, c]))
    assert smp.s == 1.0 and smp.eta == 1.0 and smp.kind == "exact"


def test_eta_exact_punctured_leaves_do_not_depend_on_height():
    vals = {eta_exact(classify_model_leaf("E1.16", [0, 0.5, c])).s for c in (0.5, 0.1, 1e-4, 0.3j)}
    assert len(vals) == 1
    assert vals.pop() == pytest.approx(2 * 0.5 * np.log(2))


def test_eta_exact_vanishes_at_puncture():
    s = [eta_exact(classify_model_leaf("E1.16", [0, 10.0**-k, 0.2])).s for k in range(1, 8)]
    assert np.all(np.diff(s) < 0) and s[-1] < 1e-5


def test_eta_lower_flow_examples():
    X = get_scenario("E1.15").field
    for c in (0.5, 0.2j):
        lo = eta_lower_flow(X, [0, 0, c])
        assert lo.kind == "lower" and 0.8 <= lo.s <= 1.0
    X1 = PolyVectorField.parse("x")
    assert eta_lower_flow(X1, [0.5]).s <= 2 * 0.5 * np.log(2)
    with pytest.raises(EtaError):
        eta_lower_flow(X, [0.3, 0, 0])


def test_eta_upper_ambient_examples():
    assert eta_upper_ambient(Polydisc.unit(1), [0]).s == 1.0
    assert eta_upper_ambient(Polydisc.unit(2), [0, 0]).s == pytest.approx(np.sqrt(2))
    assert eta_upper_ambient(Polydisc.unit(3), [0, 0, 0.3]).s >= 1.0
    with pytest.raises(EtaError):
        eta_upper_ambient(Polydisc.unit(2), [1, 0])


def test_eta_is_square_of_s():
    smp = EtaSample(np.zeros(1), 0.7, "exact")
    assert smp.eta == 0.7**2
    with pytest.raises(EtaError):
        EtaSample(np.zeros(1), -1.0, "exact")
    with pytest.raises(EtaError):
        EtaSample(np.zeros(1), 1.0, "interval", lower=2.0, upper=1.0)


def test_eta_at_extends_by_zero_and_brackets():
    sc = get_scenario("E1.15")
    assert eta_at(sc, [0.2, 0, 0]).s == 0.0
    smp = eta_at(sc, [0.1, 0.2, 0.3])
    assert smp.kind == "interval" and smp.lower <= smp.s <= smp.upper


def test_sequence_example_15():
    sc = get_scenario("E1.15")
    p = eta_sequence_limits(sc, "p_n", horizon=10_000)
    assert np.all(p.etas == 1.0) and p.limit == 1.0
    q = eta_sequence_limits(sc, "q_n", ns=[10, 100, 1000, 10_000])
    assert np.all(np.diff(q.etas) < 0) and q.limit < 1e-5
    # uniformizer images stay on the leaf closure or near E
    assert np.all(p.image_distance < 1.0)


def test_sequence_example_16_separatrix():
    sc = get_scenario("E1.16")
    q = eta_sequence_limits(sc, "q_n", ns=[10, 100, 1000, 10_000])
    assert q.limit < 1e-2
    p = eta_sequence_limits(sc, "p_n", horizon=200)
    assert np.ptp(p.etas) == 0 and p.etas[0] > 0


def test_sequence_must_stay_in_domain():
    from foliation_lab.scenarios import Sequence

    sc = get_scenario("E1.15")
    escape = Sequence("escape", lambda n: (0, 0, 0.5 * n), (0, 0, 0), 1.0)
    with pytest.raises(EtaError):
        eta_sequence_limits(sc, escape, ns=[1, 2, 3])


def test_scan_example_17_has_no_flags():
    res = discontinuity_scan(get_scenario("E1.17"), grid=10, gap_frac=0.05)
    assert res.flags.sum() == 0


@pytest.mark.parametrize("sid", ["E1.16", "E1.18"])
def test_scan_flags_hug_separatrices(sid):
    sc = get_scenario(sid)
    res = discontinuity_scan(sc, grid=12, gap_frac=0.05)
    assert res.flags.sum() > 0
    assert res.largest_flag_cluster() >= 5
    assert np.all(sc.E.distance(res.flagged) <= 0.15)


def test_scan_counts_skipped_points():
    res = discontinuity_scan(get_scenario("E1.14"), grid=6)
    assert res.skipped > 0 and res.skipped == np.sum(res.n_probes < 2)


def test_disc_radial_length():
    ch = classify_model_leaf("E1.15", [0, 0, 0.5])
    for eps in (1e-1, 1e-3, 1e-6):
        path = PathSpec.segment(0, 1 - eps, chart=ch)
        assert metric_length(path) == pytest.approx(np.log((2 - eps) / eps), rel=1e-9)


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-6])
def test_punctured_radial_length(eps):
    ch = classify_model_leaf("E1.16", [0, 0.5, 0.2])
    path = PathSpec.segment(0.5, eps, chart=ch)
    exact = np.log(np.log(1 / eps)) - np.log(np.log(2))
    assert metric_length(path) == pytest.approx(exact, abs=1e-9)


def test_constant_density_length():
    path = PathSpec.segment(np.zeros(2), np.array([0.3, 0.4j]))
    assert metric_length(path, s_func=lambda z: np.full(len(z), 0.25)) == pytest.approx(2 * 0.5 / 0.25)


def test_length_needs_positive_density():
    path = PathSpec.segment(np.zeros(2), np.array([0.3, 0.4j]))
    with pytest.raises(EtaError):
        metric_length(path, s_func=lambda z: np.zeros(len(z)))


def test_completeness_separatrix_and_synthetic():
    assert completeness_probe(get_scenario("E1.16"), [0, 0.5, 0]).verdict == "complete"
    ray = [("flat", PathSpec.segment(np.array([0.5, 0]), np.zeros(2)))]
    rep = completeness_probe(rays=ray, s_func=lambda z: np.ones(len(z)))
    assert rep.verdict == "incomplete"


@pytest.mark.parametrize("sid", ["E3.2", "E3.2.k2"])
def test_completeness_example_32(sid):
    assert completeness_probe(get_scenario(sid), [0, 0, 0.1]).verdict == "complete"


def test_threshold_is_unbounded_and_increasing():
    k = np.arange(1, 1000)
    assert np.all(np.diff(threshold(k)) > 0) and threshold(10**9) > 10


def test_ex32_density_formula():
    X = PolyVectorField.parse("x ; y ; 0")
    h = ex32_density(np.array([0.25, 0, 0]), 1, 1.0, X)
    assert h == pytest.approx(16 / np.log(4) ** 2, rel=1e-14)
    with pytest.raises(EtaError):
        ex32_density(np.array([0, 0, 0.2]), 1, 1.0, X)


def test_ex32_bounds():
    lo, hi = ex32_bounds_check(PolyVectorField.parse("x ; y ; 0"), 1, 0.5)
    assert abs(lo - 1) <= 1e-12 and abs(hi - 1) <= 1e-12
    lo2, hi2 = ex32_bounds_check(PolyVectorField.parse("x^2 ; y^2 ; 0"), 2, 0.5)
    assert lo2 == pytest.approx(2**-0.5, rel=1e-9) and hi2 == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(EtaError):
        ex32_bounds_check(PolyVectorField.parse("x ; y ; 0"), 1, 0.5, grid=np.zeros((1, 3)))


phases = st.tuples(*[st.floats(0, 2 * np.pi)] * 3)


@given(phases, st.floats(0.05, 0.8), st.floats(0.05, 0.8))
def test_phase_invariance(th, a, b):
    sc = get_scenario("E1.16")
    rot = np.exp(1j * np.array(th))
    for p in (np.array([0, a, b]), np.array([a, 0, b]), np.array([a, b, 0])):
        assert eta_at(sc, rot * p).s == pytest.approx(eta_at(sc, p).s, rel=1e-12)
