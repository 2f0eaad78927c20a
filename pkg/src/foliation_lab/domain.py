"""Hausdorff distance of polydiscs and eta as a function of the domain."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import sympy as sp
from scipy.optimize import minimize

from .eta import EtaSample, eta_exact, eta_lower_flow, eta_upper_ambient, extremal_radius
from .field import Polydisc, PolyVectorField
from .leaf import XI, ChartError, Model, classify_model_leaf

REFINE_TOL = 1e-3


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    shape: Polydisc
    density: int = 6

    def __post_init__(self):
        if self.density < 2:
            raise DomainError("sampler density must be at least 2")


def _as_polydisc(U):
    return U.shape if isinstance(U, DomainSpec) else U


# -- exact distances to a closed polydisc and to its boundary ----------------


def dist_to_closure(points, V):
    excess = np.clip(np.abs(np.asarray(points) - V.c) - V.r, 0.0, None)
    return np.sqrt(np.sum(excess**2, axis=-1))


def dist_to_boundary(points, V):
    """Nearest boundary point moves one coordinate onto its circle, the rest into their discs."""
    d = np.abs(np.asarray(points) - V.c)
    to_disc = np.clip(d - V.r, 0.0, None) ** 2
    to_circle = (d - V.r) ** 2
    total = to_disc.sum(axis=-1, keepdims=True)
    return np.sqrt(np.min(total - to_disc + to_circle, axis=-1))


# -- samplers -----------------------------------------------------------------


def _torus(U, m):
    ang = 2 * np.pi * np.arange(m) / m
    grids = np.meshgrid(*[U.c[j] + U.r[j] * np.exp(1j * ang) for j in range(U.n)], indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _boundary(U, m, rng):
    """Points of bd U: coordinate j on its circle, the others spread over their closed discs."""
    out = []
    k = m ** max(U.n - 1, 0) * 4
    for j in range(U.n):
        ang = 2 * np.pi * np.arange(m) / m
        base = np.repeat(U.c[j] + U.r[j] * np.exp(1j * ang), k)
        pts = np.empty((len(base), U.n), dtype=complex)
        pts[:, j] = base
        for i in range(U.n):
            if i == j:
                continue
            rad = U.r[i] * np.sqrt(rng.uniform(size=len(base)))
            rad[rng.uniform(size=len(base)) < 0.3] = U.r[i]  # the rim carries the extremes often
            pts[:, i] = U.c[i] + rad * np.exp(2j * np.pi * rng.uniform(size=len(base)))
        out.append(pts)
    return np.concatenate(out)


def _polish(f, start, U, on_circle=None):
    """Local maximisation of f over closed U (or bd U with coordinate ``on_circle`` fixed)."""
    n = U.n

    def unpack(x):
        pts = np.empty(n, dtype=complex)
        for i in range(n):
            if i == on_circle:
                pts[i] = U.c[i] + U.r[i] * np.exp(1j * x[2 * i])
            else:
                rho = U.r[i] * np.sin(x[2 * i]) ** 2  # folded so the disc is covered smoothly
                pts[i] = U.c[i] + rho * np.exp(1j * x[2 * i + 1])
        return pts

    x0 = np.zeros(2 * n)
    for i in range(n):
        d = start[i] - U.c[i]
        if i == on_circle:
            x0[2 * i] = np.angle(d)
        else:
            x0[2 * i] = np.arcsin(np.sqrt(min(abs(d) / U.r[i], 1.0)))
            x0[2 * i + 1] = np.angle(d)
    res = minimize(lambda x: -f(unpack(x)[None])[0], x0, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
    return max(-res.fun, f(start[None])[0])


def _directed(A_kind, U, V, m, rng, polish=True):
    """sup over A of the distance to B, A/B both closures or both boundaries."""
    if A_kind == "closure":
        # distance to a convex set is convex, so its max over U sits on the torus
        pts = _torus(U, m)
        f = lambda z: dist_to_closure(z, V)  # noqa: E731
        vals = f(pts)
        best = float(vals.max())
        if polish:
            for i in np.argsort(vals)[-3:]:
                best = max(best, _polish(f, pts[i], U, on_circle=None))
        return best
    pts = _boundary(U, m, rng)
    f = lambda z: dist_to_boundary(z, V)  # noqa: E731
    vals = f(pts)
    best = float(vals.max())
    if polish:
        k = len(pts) // U.n
        for i in np.argsort(vals)[-3:]:
            best = max(best, _polish(f, pts[i], U, on_circle=int(i // k)))
    return best


def _key(U):
    return tuple(v for c in U.center for v in (c.real, c.imag)) + U.radii


def hausdorff_rho(U, V, sample_density=None, max_rounds=6, seed=0):
    """rho(U, V) = H(closure U, closure V) + H(bd U, bd V) for polydiscs.

    Distances to the second set are exact; the first set is sampled and the
    best samples are polished by local optimisation.  The density doubles
    until two rounds agree within 1e-3.
    """
    density = sample_density or (U.density if isinstance(U, DomainSpec) else 6)
    U, V = _as_polydisc(U), _as_polydisc(V)
    if U.n != V.n:
        raise DomainError("domains live in different dimensions")
    if U == V:
        return 0.0
    if _key(V) < _key(U):
        U, V = V, U  # a fixed order makes the sampled value exactly symmetric
    rng = np.random.default_rng(seed)
    prev = None
    m = max(2, density)
    for _ in range(max_rounds):
        h_cl = max(_directed("closure", U, V, 2 * m, rng), _directed("closure", V, U, 2 * m, rng))
        h_bd = max(_directed("boundary", U, V, m, rng), _directed("boundary", V, U, m, rng))
        val = h_cl + h_bd
        if prev is not None and abs(val - prev) <= REFINE_TOL:
            return val
        prev = val
        m *= 2
    raise DomainError("hausdorff_rho refinement budget exhausted")


# -- eta of a restricted foliation ---------------------------------------------


def _component_disc(expr, center, radius):
    """{xi : |expr(xi) - center| < radius} as (centre, radius), None if unconstrained.

    Handles a + b xi and, when the disc is centred on a, a + b xi^k.
    Anything else raises ChartError.
    """
    poly = sp.Poly(sp.expand(expr), XI)
    deg = poly.degree()
    coeffs = {m[0]: complex(c) for m, c in poly.terms()}
    a = coeffs.get(0, 0j)
    if deg <= 0:
        return ("const", abs(a - center) < radius)
    lead = coeffs[deg]
    if deg == 1:
        return ((center - a) / lead, radius / abs(lead))
    if len(coeffs) - (1 if 0 in coeffs else 0) == 1 and abs(a - center) < 1e-15:
        return (0j, (radius / abs(lead)) ** (1.0 / deg))
    raise ChartError(f"cannot classify |{expr} - c| < r as a disc")


def restricted_sigma(chart, U, zeta):
    """sigma of the component through zeta of chart^{-1}(U) intersected with the model.

    Returns (kind, value, (lower, upper)).  Nested discs give an exact disc or
    punctured-disc value; a lens gives an interval.
    """
    discs = [(chart.model.center, chart.model.r)]
    for j, expr in enumerate(chart.components):
        d = _component_disc(expr, U.c[j], U.r[j])
        if d[0] == "const":
            if not d[1]:
                raise ChartError("the leaf misses U")
            continue
        discs.append(d)
    puncture = chart.model.puncture
    smallest = min(discs, key=lambda d: d[1])
    nested = all(abs(smallest[0] - c) + smallest[1] <= r + 1e-12 for c, r in discs)
    if nested:
        c, r = smallest
        if puncture is not None and abs(puncture - c) < r:
            model = Model.punctured_disc(r, c, puncture)
        else:
            model = Model.disc(r, c)
        val = extremal_radius(model, zeta)
        return "exact", val, (val, val), model
    # an inscribed disc about zeta bounds from below, each enclosing set from above
    rho = min(r - abs(zeta - c) for c, r in discs)
    if puncture is not None:
        rho = min(rho, abs(zeta - puncture))
    uppers = []
    for c, r in discs:
        if puncture is not None and abs(puncture - c) < r:
            uppers.append(extremal_radius(Model.punctured_disc(r, c, puncture), zeta))
        else:
            uppers.append(extremal_radius(Model.disc(r, c), zeta))
    return "interval", 0.5 * (rho + min(uppers)), (rho, min(uppers)), None


def restrict_field(X, U):
    return PolyVectorField(X.components, _as_polydisc(U), X.label)


def eta_restricted(scenario, U, p):
    """eta_U(p) on the component of (leaf through p) n U; 0 on E."""
    U = _as_polydisc(U)
    p = np.asarray(p, dtype=complex)
    if not U.contains(p):
        raise DomainError("p is not in U")
    if scenario.E.contains(p, tol=1e-14):
        return EtaSample(p, 0.0, "exact", "E", provenance="extension by 0 on E")
    try:
        chart = classify_model_leaf(scenario, p)
    except ChartError:
        lo = eta_lower_flow(restrict_field(scenario.field, U), p).s
        hi = eta_upper_ambient(U, p).s
        return EtaSample(p, 0.5 * (lo + hi), "interval", lower=lo, upper=hi,
                         provenance="flow lower / ambient upper on U")
    if U.contains_polydisc(scenario.domain):
        return eta_exact(chart)
    speed = float(np.linalg.norm(chart.derivative(np.asarray(chart.base_param))))
    try:
        kind, val, (lo, hi), model = restricted_sigma(chart, U, chart.base_param)
    except ChartError as exc:
        lo = eta_lower_flow(restrict_field(scenario.field, U), p).s
        hi = min(eta_upper_ambient(U, p).s, eta_exact(chart).s)
        return EtaSample(p, 0.5 * (lo + hi), "interval", chart.label, lo, hi,
                         provenance=f"unclassified restriction: {exc}")
    if kind == "exact":
        return EtaSample(p, speed * val, "exact", chart.label, provenance=f"restricted {model}")
    return EtaSample(p, speed * val, "interval", chart.label, speed * lo, speed * hi,
                     provenance="lens-shaped restriction")


# -- convergence experiment ----------------------------------------------------


@dataclass
class ConvergenceRow:
    n: int
    rho: float
    sup_gaps: tuple  # one per compact


@dataclass
class ConvergenceReport:
    rows: list
    compacts: list  # (label, points)
    include_E: bool

    def gaps(self, j=0):
        return np.array([r.sup_gaps[j] for r in self.rows])

    def monotone_from(self, n0=8):
        g = np.array([max(r.sup_gaps) for r in self.rows if r.n >= n0])
        return bool(np.all(np.diff(g) <= 1e-15))


def default_compacts(scenario, U, include_E=True, m=5, frac=0.8):
    """Points of U on registered leaves (and on E) inside the closed polydisc frac * U."""
    axes = [U.c[j] + frac * U.r[j] * np.linspace(-1, 1, m) for j in range(U.n)]
    mesh = np.stack([g.ravel() for g in np.meshgrid(*axes, indexing="ij")], axis=-1).astype(complex)
    on_leaves = []
    for fam in scenario.leaf_families:
        if fam.project is None:
            continue
        for q in mesh:
            q2 = fam.project(q)
            if fam.member(q2) and U.contains(q2):
                on_leaves.append(q2)
    K = [("leaves", np.unique(np.asarray(on_leaves), axis=0))]
    if include_E:
        onE = []
        for pc in scenario.E.pieces:
            for q in mesh:
                q2 = pc.project(q)
                if U.contains(q2):
                    onE.append(q2)
        near = np.asarray(on_leaves)
        K.append(("E and leaves", np.unique(np.concatenate([np.asarray(onE), near]), axis=0)))
    return K


def domain_family(U, kind, steps):
    U = _as_polydisc(U)
    out = []
    for n in steps:
        if kind == "shrink":
            out.append(Polydisc(U.center, tuple(r * (1 + 1 / n) for r in U.radii)))
        elif kind == "translate":
            shift = np.zeros(U.n, dtype=complex)
            shift[0] = 0.5 * U.r[0] / n
            out.append(Polydisc(tuple(U.c + shift), U.radii))
        else:
            raise DomainError(f"unknown domain family {kind!r}")
    return out


def convergence_experiment(scenario, U, Un=None, compacts=None, family="shrink",
                           steps=(8, 16, 32, 64), include_E=True, transversal=None):
    """sup over each compact of |eta_{U_n} - eta_U| along a family U_n -> U.

    The includes-E mode needs transversal type on U; it is refused for
    scenarios not declared transversal.
    """
    U = _as_polydisc(U)
    if transversal is None:
        transversal = bool(scenario.params.get("transversal", False))
    if include_E and not transversal:
        raise DomainError(f"{scenario.id} is not of transversal type on U; "
                          "compacts meeting E are not supported")
    if Un is None:
        Un = domain_family(U, family, steps)
    else:
        steps = tuple(range(1, len(Un) + 1)) if steps is None else steps
    for V in Un:
        if not scenario.domain.contains_polydisc(V):
            raise DomainError("some U_n leaves the ambient domain")
    if compacts is None:
        compacts = default_compacts(scenario, U, include_E)
    base = [np.array([eta_restricted(scenario, U, q).eta for q in K]) for _, K in compacts]
    rows = []
    for n, V in zip(steps, Un):
        gaps = []
        for (label, K), b in zip(compacts, base):
            if not np.all(V.contains(K)):
                raise DomainError(f"compact {label} is not inside U_{n}")
            vals = np.array([eta_restricted(scenario, V, q).eta for q in K])
            gaps.append(float(np.max(np.abs(vals - b))))
        rows.append(ConvergenceRow(int(n), hausdorff_rho(U, V), tuple(gaps)))
    return ConvergenceReport(rows, list(compacts), include_E)
