import numpy as np
import pytest

from foliation_lab.scenarios import (
    Expectation,
    ScenarioError,
    get_scenario,
    normalize_id,
    scenario_ids,
)
from foliation_lab.variety import singular_locus

ALL = scenario_ids()


def test_registry_covers_every_worked_example():
    for sid in ("E1.3.1", "E1.3.2", "E1.3.3", "E1.4", "E1.5", "E1.14", "E1.15", "E1.16", "E1.17",
                "E1.18", "E3.2"):
        assert sid in ALL


@pytest.mark.parametrize("alias,sid", [("E1.3(2)", "E1.3.2"), ("e1.16", "E1.16"), ("1.18", "E1.18"),
                                       ("E3.2(k=2)", "E3.2.k2"), ("E3.2(k=1)", "E3.2")])
def test_aliases(alias, sid):
    assert normalize_id(alias) == sid


def test_unknown_scenario():
    with pytest.raises(ScenarioError, match="unknown scenario"):
        get_scenario("E9.9")


@pytest.mark.parametrize("sid", ALL)
def test_expectations_carry_citations(sid):
    sc = get_scenario(sid)
    assert sc.expectations
    assert all(e.citation for e in sc.expectations)


def test_expectation_without_citation_is_rejected():
    with pytest.raises(ValueError):
        Expectation("cone", {}, None, 0.0, "")


@pytest.mark.parametrize("sid", ALL)
def test_singular_set_model_matches_zeros(sid):
    sc = get_scenario(sid)
    pts, _ = singular_locus(sc.field, grid_density=2)
    assert len(pts) > 0
    assert np.all(sc.E.distance(pts) <= 1e-8)


@pytest.mark.parametrize("sid", ALL)
def test_model_of_e_is_zero_set(sid):
    sc = get_scenario(sid)
    rng = np.random.default_rng(0)
    for pc in sc.E.pieces:
        q = pc.sample_near(np.zeros(sc.n, dtype=complex), 0.3, 20, rng)
        assert np.max(np.linalg.norm(sc.field(q), axis=1)) == 0


def test_sequences_converge_to_their_targets():
    for sid in ("E1.15", "E1.16", "E1.18"):
        sc = get_scenario(sid)
        for seq in sc.sequences.values():
            assert np.linalg.norm(seq(10**6) - np.asarray(seq.target)) < 1e-5
