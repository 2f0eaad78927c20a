"""Builtin scenarios: the worked examples as fields, singular sets, leaf tables and expectations."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from .field import Polydisc, PolyVectorField, normal_form
from .leaf import XI, Model, coordinate_family, curve_family
from .variety import AnalyticSetModel


class ScenarioError(KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown scenario"


@dataclass(frozen=True)
class Expectation:
    """One declared outcome: what to run, what should come out, and where it is claimed."""

    kind: str
    target: dict
    expected: object
    tol: float = 0.0
    citation: str = ""

    def __post_init__(self):
        if not self.citation:
            raise ValueError(f"expectation {self.kind} lacks a citation")


@dataclass(frozen=True, eq=False)
class Sequence:
    """Points p(n) -> target, with the eta limit the example claims."""

    name: str
    point: object
    target: tuple
    limit: float
    start: int = 1

    def __call__(self, n):
        return np.asarray(self.point(n), dtype=complex)


@dataclass(frozen=True, eq=False)
class Scenario:
    id: str
    title: str
    field: PolyVectorField
    E: AnalyticSetModel
    leaf_families: tuple = ()
    expectations: tuple = ()
    sequences: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def domain(self):
        return self.field.domain

    @property
    def n(self):
        return self.field.n

    def family(self, name):
        for fam in self.leaf_families:
            if fam.name == name:
                return fam
        raise ScenarioError(f"scenario {self.id} has no leaf family {name!r}")


def _axes(n, which):
    text = "; ".join(
        "linear base=(" + ",".join("0" for _ in range(n)) + ") span=("
        + ",".join("1" if j == i else "0" for j in range(n)) + ")"
        for i in which)
    return AnalyticSetModel.parse(text, singular=True)


def _field(text, radii, label):
    return PolyVectorField.parse(text, Polydisc((0,) * len(radii), radii), label)


def _e13(kind, **params):
    X = normal_form(kind, **params)
    E = AnalyticSetModel.parse("linear base=(0,0)", singular=True)
    fams = (
        coordinate_family("x-axis", X.domain, plane=1, param=0),
        coordinate_family("y-axis", X.domain, plane=0, param=1),
    )
    return X, E, fams


_CITE_13 = "Example 1.3: C_0F_X = C^2 in each of these cases"


def _build_e13(sid, kind, title, **params):
    X, E, fams = _e13(kind, **params)
    if kind == "poincare_dulac":
        fams = fams[1:]  # y = 0 is not invariant once a x^n d/dy is present
    exp = (Expectation("cone", {"point": (0, 0)}, {"dense": True}, 0.05, _CITE_13),)
    return Scenario(sid, title, X, E, fams, exp)


def _e14():
    X = _field("x ; exp(z)*y ; 0", (1, 1, 1), "E1.14")
    E = _axes(3, [2])
    fams = (
        coordinate_family("Sigma1", X.domain, plane=0, param=1),
        coordinate_family("Sigma2", X.domain, plane=1, param=0),
    )
    exp = (
        Expectation("transversal", {"point": (0, 0, 0.3)}, "transversal", 0.1,
                    "Example 1.14: by Example 1.4, F_X is of transversal type"),
        Expectation("scan", {"grid": 8}, "no_flags", 0.05,
                    "Example 1.14: the map eta extends continuously to all of M"),
    )
    return Scenario("E1.14", "x d/dx + e^z y d/dy on the unit polydisc", X, E, fams, exp,
                    params={"transversal": True})


def _e4():
    X = _field("x ; (2 + z)*y ; 0", (1, 1, 1), "E1.4")
    E = _axes(3, [2])
    fams = (
        coordinate_family("Sigma1", X.domain, plane=0, param=1),
        coordinate_family("Sigma2", X.domain, plane=1, param=0),
    )
    cite = "Example 1.4: C_pF_X = <e1, e2> for each p = (0,0,c) in E"
    exp = tuple(
        Expectation("cone", {"point": (0, 0, c)},
                    {"relations": [[0, 0, 1]], "span": [[1, 0, 0], [0, 1, 0]]}, 1e-8, cite)
        for c in (0.0, 0.3, -0.5j)
    ) + (Expectation("transversal", {"point": (0, 0, 0.3)}, "transversal", 0.5,
                     "Example 1.4: F_X is transversal type at each p in E"),)
    return Scenario("E1.4", "x d/dx + h(z) y d/dy with h(z) = 2 + z", X, E, fams, exp,
                    params={"transversal": True})


def _e5_like(sid, radii=(1, 1, 1)):
    X = _field("x ; z*y ; z*y", radii, sid)
    E = _axes(3, [1, 2])
    d = X.domain
    diag = curve_family(
        "diagonal", (sp.Integer(0), XI, XI), Model.punctured_disc(min(radii[1], radii[2])),
        param_of=lambda p: p[1],
        on_curve=lambda p, tol: abs(p[0]) <= tol and abs(p[1] - p[2]) <= tol,
    )
    fams = (
        coordinate_family("Sigma2", d, plane=1, param=0),
        coordinate_family("Sigma3", d, plane=2, param=0),
        diag,
    )
    return X, E, fams


def _e5():
    X, E, fams = _e5_like("E1.5")
    cite = "Example 1.5: C_pF_X = <(1,0,0), (0,1,1)> for each p in E"
    want = {"relations": [[0, 1, -1]], "span": [[1, 0, 0], [0, 1, 1]]}
    exp = tuple(Expectation("cone", {"point": p}, want, 1e-8, cite)
                for p in ((0, 0.5, 0), (0, 0, 0.5), (0, 0, 0)))
    exp += (Expectation("transversal", {"point": (0, 0.5, 0)}, "transversal", 0.1,
                        "Example 1.5: F_X is transversal type"),
            Expectation("transversal", {"point": (0, 0, 0.5)}, "transversal", 0.1,
                        "Example 1.5: F_X is transversal type"))
    return Scenario("E1.5", "x d/dx + zy d/dy + zy d/dz", X, E, fams, exp,
                    params={"transversal": True})


def _e15():
    X = _field("z ; x*y ; x*y", (1, 1, 1), "E1.15")
    E = _axes(3, [0, 1])
    H = coordinate_family("H", X.domain, plane=1, param=0, kind="disc", nonzero=(2,))
    g = curve_family(
        "g-leaf", (XI, XI**2 / 2, XI**2 / 2), Model.punctured_disc(1.0),
        param_of=lambda p: p[0],
        on_curve=lambda p, tol: abs(p[1] - p[0] ** 2 / 2) <= tol and abs(p[2] - p[0] ** 2 / 2) <= tol,
    )
    seqs = {
        "p_n": Sequence("p_n", lambda n: (0, 0, 1 / n), (0, 0, 0), 1.0, start=2),
        "q_n": Sequence("q_n", lambda n: (0.5 / n, (0.5 / n) ** 2 / 2, (0.5 / n) ** 2 / 2),
                        (0, 0, 0), 0.0),
    }
    exp = (
        Expectation("eta_sequence", {"sequence": "p_n", "horizon": 10_000}, 1.0, 1e-12,
                    "Example 1.15: eta(p_n) = 1 for all n >= 1"),
        Expectation("eta_sequence", {"sequence": "q_n", "horizon": 10_000}, 0.0, 1e-2,
                    "Example 1.15: eta(q_n) -> 0"),
        Expectation("eta_gap", {"sequences": ["p_n", "q_n"], "horizon": 10_000}, 0.9, 0.0,
                    "Example 1.15: eta does not extend continuously to 0 in E"),
        Expectation("transversal", {"point": (0, 0, 0)}, "not_transversal", 1e-3,
                    "Example 1.15: (1,0,0) lies in the closure of T_0F_X and in T_0E"),
    )
    return Scenario("E1.15", "z d/dx + xy d/dy + xy d/dz on the unit polydisc", X, E, (H, g), exp,
                    seqs)


def _e16(radii=(1, 1, 1)):
    X = _field("x ; z*y ; 0", radii, "E1.16")
    E = _axes(3, [1, 2])
    d = X.domain
    fams = (
        coordinate_family("Sigma1", d, plane=0, param=1, nonzero=(2,)),
        coordinate_family("Sigma2", d, plane=1, param=0),
        coordinate_family("Sigma3", d, plane=2, param=0, nonzero=(1,)),
    )
    seqs = {
        "p_n": Sequence("p_n", lambda n: (0, 0.5, 1 / n), (0, 0.5, 0), 2 * 0.5 * np.log(2), start=2),
        "q_n": Sequence("q_n", lambda n: (0.5 / n, 0.5, 0), (0, 0.5, 0), 0.0),
    }
    exp = (
        Expectation("transversal", {"point": (0, 0.5, 0)}, "not_transversal", 1e-3,
                    "Example 1.16: F_X is not of transversal type at each p in the y-axis"),
        Expectation("transversal", {"point": (0, 0, 0.5)}, "transversal", 0.1,
                    "Example 1.16: F_X is transversal type at each p in E_2"),
        Expectation("eta_sequence", {"sequence": "p_n", "horizon": 1000}, None, 1e-12,
                    "Example 1.16: eta(p_n) = eta(p_m) != 0 for all n, m"),
        Expectation("eta_sequence", {"sequence": "q_n", "horizon": 10_000}, 0.0, 1e-2,
                    "Example 1.16: if q_n in L with q_n -> p, then eta(q_n) -> 0"),
        Expectation("scan", {"grid": 12}, "flags_near_separatrix", 0.05,
                    "Example 1.16: eta does not have a continuous extension to any p in E_1"),
        Expectation("complete", {"point": (0, 0.5, 0)}, "complete", 0.0,
                    "Example 1.16: L union {p} is a disc, so L is a separatrix"),
        Expectation("complete", {"point": (0, 0, 0.5)}, "complete", 0.0,
                    "Example 1.16: the map eta extends continuously to the set M u E_2"),
    )
    return Scenario("E1.16", "x d/dx + zy d/dy on P(0, r)", X, E, fams, exp, seqs)


def _e17(radii=(1, 1, 1)):
    X, E, fams = _e5_like("E1.17", radii)
    exp = (
        Expectation("transversal", {"point": (0, 0.5, 0)}, "transversal", 0.1,
                    "Example 1.17: Example 1.5 shows that F_X is transversal type"),
        Expectation("scan", {"grid": 12}, "no_flags", 0.05,
                    "Example 1.17: eta can be extended continuously to all of M"),
        Expectation("converge", {"U": 0.5, "steps": [8, 16, 32, 64]}, "monotone_below", 1e-2,
                    "Theorem 2.1: eta_{U_n} -> eta_U uniformly on compact subsets of U"),
    )
    return Scenario("E1.17", "x d/dx + zy d/dy + zy d/dz on P(0, r)", X, E, fams, exp,
                    params={"transversal": True})


def _e18(radii=(1, 1, 1)):
    X = _field("x*y ; z*y ; z*x", radii, "E1.18")
    E = _axes(3, [0, 1, 2])
    d = X.domain
    fams = (
        coordinate_family("Sigma1", d, plane=0, param=1, nonzero=(2,)),
        coordinate_family("Sigma2", d, plane=1, param=2, nonzero=(0,)),
        coordinate_family("Sigma3", d, plane=2, param=0, nonzero=(1,)),
    )
    seqs = {
        "p_n": Sequence("p_n", lambda n: (0.5, 1 / n, 0), (0.5, 0, 0), 2 * 0.5 * np.log(2), start=2),
        "q_n": Sequence("q_n", lambda n: (0.5, 0, 0.5 / n), (0.5, 0, 0), 0.0),
    }
    cite_nt = "Example 1.18: F_X is not transversal type for any p in E"
    axis_points = [(0.4, 0, 0), (-0.3j, 0, 0), (0, 0.5, 0), (0, 0.2 + 0.2j, 0), (0, 0, 0.6),
                   (0, 0, -0.35), (0.7, 0, 0), (0, -0.45, 0), (0, 0, 0.25j), (0.15, 0, 0)]
    exp = tuple(Expectation("transversal", {"point": p}, "not_transversal", 1e-3, cite_nt)
                for p in axis_points)
    exp += (
        Expectation("eta_sequence", {"sequence": "p_n", "horizon": 1000}, None, 1e-12,
                    "Example 1.18: eta(p_n) = eta(p_m) != 0 for all n, m"),
        Expectation("eta_sequence", {"sequence": "q_n", "horizon": 10_000}, 0.0, 1e-2,
                    "Example 1.18: for any q_n in L with q_n -> p, eta(q_n) -> 0"),
        Expectation("scan", {"grid": 12}, "flags_near_separatrix", 0.05,
                    "Example 1.18: eta does not extend continuously to any point of E minus 0"),
        Expectation("complete", {"point": (0.5, 0, 0)}, "complete", 0.0,
                    "Example 1.18: L is a separatrix through p"),
        Expectation("complete", {"point": (0, 0.5, 0)}, "complete", 0.0,
                    "Example 1.18: L is a separatrix through p"),
        Expectation("complete", {"point": (0, 0, 0.5)}, "complete", 0.0,
                    "Example 1.18: L is a separatrix through p"),
    )
    return Scenario("E1.18", "xy d/dx + zy d/dy + zx d/dz on P(0, r)", X, E, fams, exp, seqs)


def _e32(k):
    text = "x ; y ; 0" if k == 1 else f"x^{k} ; y^{k} ; 0"
    X = _field(text, (0.35, 0.35, 0.5), f"E3.2 k={k}")
    E = _axes(3, [2])
    sid = "E3.2" if k == 1 else f"E3.2.k{k}"
    bounds = (1.0, 1.0) if k == 1 else (2 ** -0.5, 1.0)
    exp = (
        Expectation("ex32_bounds", {}, bounds, 1e-12 if k == 1 else 1e-3,
                    "Example 3.2: C^-1 |pi(z)|^k <= |X(z)| <= C |pi(z)|^k"),
        Expectation("complete", {"point": (0, 0, 0)}, "complete", 0.0,
                    "Example 3.2: Lambda_U is also complete at E in U"),
        Expectation("complete", {"point": (0, 0, 0.2)}, "complete", 0.0,
                    "Example 3.2: Lambda_U is also complete at E in U"),
    )
    params = {"k": k, "r": 1.0, "rho": 0.5, "transversal": True}
    return Scenario(sid, f"(z1^{k}, z2^{k}, 0) with the comparison density h", X, E, (), exp,
                    params=params)


_BUILDERS = {
    "E1.3.1": lambda: _build_e13("E1.3.1", "linearizable", "x d/dx + 2i y d/dy", alpha=2j),
    "E1.3.2": lambda: _build_e13("E1.3.2", "resonant_negative", "x d/dx - y(1 + xy) d/dy",
                                 alpha=-1, f="x*y"),
    "E1.3.3": lambda: _build_e13("E1.3.3", "poincare_dulac", "x d/dx + (2y + x^2) d/dy",
                                 n=2, a=1),
    "E1.4": _e4,
    "E1.5": _e5,
    "E1.14": _e14,
    "E1.15": _e15,
    "E1.16": _e16,
    "E1.17": _e17,
    "E1.18": _e18,
    "E3.2": lambda: _e32(1),
    "E3.2.k2": lambda: _e32(2),
}


def scenario_ids():
    return tuple(_BUILDERS)


def normalize_id(name):
    s = str(name).strip().upper().replace(" ", "")
    s = re.sub(r"^E?", "E", s)
    s = re.sub(r"\((\d)\)$", r".\1", s)  # E1.3(2) -> E1.3.2
    s = re.sub(r"[(\-_.]?K=?(\d)\)?$", r".k\1", s)  # E3.2(k=2), E3.2-k2 -> E3.2.k2
    if s == "E3.2.k1":
        s = "E3.2"
    if s not in _BUILDERS:
        raise ScenarioError(f"unknown scenario {name!r}")
    return s


@lru_cache(maxsize=None)
def _cached(sid):
    return _BUILDERS[sid]()


def get_scenario(name):
    return _cached(normalize_id(name))
