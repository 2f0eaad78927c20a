"""Leaves: complex-time flows with certified disc radii, and closed-form leaf charts."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp
from scipy.integrate import solve_ivp

SAFETY = 0.9
XI = sp.Symbol("xi")


class FlowError(RuntimeError):
    """Flow left the domain or the integrator gave up."""

    def __init__(self, msg, exit_fraction=None, partial=None):
        super().__init__(msg)
        self.exit_fraction = exit_fraction
        self.partial = partial


class ChartError(ValueError):
    pass


@dataclass(frozen=True)
class FlowResult:
    endpoint: np.ndarray
    t_used: complex
    step_count: int
    certified: bool
    max_gauge: float = 0.0


def _check_point(X, p):
    p = np.asarray(p, dtype=complex)
    if p.shape != (X.n,):
        raise ValueError(f"point has shape {p.shape}, expected ({X.n},)")
    if not X.domain.contains(p):
        raise ValueError("starting point is outside the domain")
    return p


def flow(X, p, t, tol=1e-10, safety=SAFETY):
    """Integrate dz/ds = X(z) along the segment s in [0, t] of complex time.

    DOP853 with rtol = tol.  ``certified`` is set when the whole path stays
    in the domain shrunk by ``safety``.  Leaving the domain raises FlowError
    carrying the fraction of the segment completed.
    """
    p = _check_point(X, p)
    t = complex(t)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if t == 0:
        return FlowResult(p.copy(), 0j, 0, bool(X.domain.gauge(p) <= safety),
                          float(X.domain.gauge(p)))

    def rhs(tau, z):
        return t * X(z)

    def leave(tau, z):
        return X.domain.gauge(z) - 1.0

    leave.terminal = True
    leave.direction = 1
    sol = solve_ivp(rhs, (0.0, 1.0), p, method="DOP853", rtol=tol, atol=tol * 1e-3,
                    events=leave, dense_output=True)
    if sol.status == 1:
        frac = float(sol.t_events[0][0])
        raise FlowError(f"trajectory left the domain after {frac:.4g} of the segment",
                        exit_fraction=frac, partial=sol.y[:, -1])
    if sol.status != 0:
        raise FlowError(f"integrator failed: {sol.message}", exit_fraction=float(sol.t[-1]),
                        partial=sol.y[:, -1])
    taus = np.linspace(0.0, 1.0, 4 * len(sol.t) + 1)
    g = float(np.max(X.domain.gauge(sol.sol(taus).T)))
    return FlowResult(sol.y[:, -1].copy(), t, len(sol.t) - 1, g <= safety, g)


def _first_ray_exit(X, p, level, cap, angles, tol):
    """Smallest s at which some ray s -> Phi(p, s e^{i theta}) reaches gauge ``level``.

    All rays are integrated as one system and stopped at the first crossing;
    returns ``cap`` when every ray stays inside up to s = cap.
    """
    dom = X.domain
    m, n = len(angles), X.n
    rot = np.exp(1j * angles)[:, None]

    def rhs(s, y):
        return (rot * X(y.reshape(m, n))).ravel()

    def leave(s, y):
        return float(np.max(dom.gauge(y.reshape(m, n)))) - level

    leave.terminal = True
    leave.direction = 1
    sol = solve_ivp(rhs, (0.0, cap), np.tile(p, m), method="DOP853", rtol=tol,
                    atol=tol * 1e-3, events=leave)
    if sol.status == 1:
        return float(sol.t_events[0][0])
    if sol.status != 0:
        raise FlowError(f"integrator failed: {sol.message}")
    return cap


def certified_flow_disc_radius(X, p, safety=SAFETY, rays=64, max_rays=4096, tol=1e-9,
                               extend=True):
    """Radius R such that t -> Phi(p, t) is holomorphic on |t| < R with image in the domain.

    The Picard bound R = safety * d(p, bd U') / sup_{U'} |X| is always
    available, U' being the domain shrunk by ``safety``.  With ``extend``
    the flow is also traced along equally spaced rays until one leaves U';
    that exit time s_min certifies the disc as long as s_min * pi / rays
    stays below the time (1 - safety) min r / sup_M |X| needed to cross
    from U' to the boundary, and rays are added until it does.  The larger
    of the two radii is returned.
    """
    if not 0 < safety < 1:
        raise ValueError("safety must lie in (0, 1)")
    p = _check_point(X, p)
    dom = X.domain
    level = safety if dom.gauge(p) < safety else 0.5 * (1.0 + float(dom.gauge(p)))
    inner = dom.shrink(level)
    M = X.sup_norm_bound(inner)
    if not M > 0:
        raise FlowError("field vanishes identically near p")
    r_pic = safety * inner.boundary_distance(p) / M
    if not extend:
        return r_pic
    margin = (1.0 - level) * float(np.min(dom.r))
    M_out = X.sup_norm_bound(dom)
    cap = 256.0 * max(r_pic, margin / M_out)
    m = rays
    while True:
        s_min = _first_ray_exit(X, p, level, cap, 2 * np.pi * np.arange(m) / m, tol)
        need = int(np.ceil(1.01 * np.pi * s_min * M_out / margin))
        if need <= m or m >= max_rays:
            break
        m = min(max_rays, max(need, 2 * m))
    # shave the integration tolerance off the ray bound
    r_ray = min(s_min, margin * m / (np.pi * M_out)) * (1.0 - 1e-6)
    return max(r_pic, r_ray)


@dataclass(frozen=True)
class Model:
    """disc(r) or punctured_disc(r) with optional center and puncture."""

    kind: str
    r: float
    center: complex = 0j
    puncture: complex | None = None

    def __post_init__(self):
        if self.kind not in ("disc", "punctured_disc"):
            raise ChartError(f"unknown model {self.kind!r}")
        if not self.r > 0:
            raise ChartError("model radius must be positive")
        object.__setattr__(self, "center", complex(self.center))
        if self.kind == "punctured_disc":
            pu = self.center if self.puncture is None else complex(self.puncture)
            if abs(pu - self.center) >= self.r:
                raise ChartError("puncture must lie inside the disc")
            object.__setattr__(self, "puncture", pu)
        elif self.puncture is not None:
            raise ChartError("a disc model has no puncture")

    @classmethod
    def disc(cls, r, center=0j):
        return cls("disc", float(r), center)

    @classmethod
    def punctured_disc(cls, r, center=0j, puncture=None):
        return cls("punctured_disc", float(r), center, puncture)

    def contains(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        inside = np.abs(zeta - self.center) < self.r
        if self.kind == "punctured_disc":
            inside &= zeta != self.puncture
        return inside

    def sample(self, rng, m, margin=1e-3):
        rad = self.r * np.sqrt(rng.uniform(margin, (1 - margin) ** 2, size=m))
        zeta = self.center + rad * np.exp(2j * np.pi * rng.uniform(size=m))
        if self.kind == "punctured_disc":
            zeta = zeta[np.abs(zeta - self.puncture) > margin * self.r]
        return zeta

    def __str__(self):
        return f"{self.kind}({self.r:g})"


@dataclass(frozen=True, eq=False)
class LeafChart:
    """Injective holomorphic chart gamma: model -> C^n of a leaf, with gamma(base_param) = p."""

    model: Model
    components: tuple  # sympy expressions in XI
    base_param: complex
    label: str = ""
    family: str = ""
    fast: tuple | None = field(default=None, repr=False)  # optional numpy (gamma, gamma')
    _n: int = field(init=False, repr=False)

    def __post_init__(self):
        comps = tuple(sp.sympify(c) for c in self.components)
        for c in comps:
            if c.free_symbols - {XI}:
                raise ChartError("chart components may only use xi")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "base_param", complex(self.base_param))
        object.__setattr__(self, "_n", len(comps))
        if not bool(self.model.contains(self.base_param)):
            raise ChartError("base parameter is not inside the model")

    @property
    def n(self):
        return self._n

    @cached_property
    def _f(self):
        return sp.lambdify(XI, list(self.components), modules="numpy")

    @cached_property
    def _df(self):
        return sp.lambdify(XI, [sp.diff(c, XI) for c in self.components], modules="numpy")

    def _eval(self, fn, zeta):
        z = np.asarray(zeta, dtype=complex)
        return np.stack([np.broadcast_to(np.asarray(v, dtype=complex), z.shape) for v in fn(z)],
                        axis=-1)

    def __call__(self, zeta):
        if self.fast is not None:
            return self.fast[0](np.asarray(zeta, dtype=complex))
        return self._eval(self._f, zeta)

    def derivative(self, zeta):
        if self.fast is not None:
            return self.fast[1](np.asarray(zeta, dtype=complex))
        return self._eval(self._df, zeta)

    @property
    def base_point(self):
        return self(self.base_param)

    def with_model(self, model, base_param=None):
        return LeafChart(model, self.components,
                         self.base_param if base_param is None else base_param,
                         self.label, self.family, self.fast)

    def validate(self, X=None, E=None, samples=1000, rng=None, tol=1e-8):
        """Check injectivity, gamma' != 0 and (given X) tangency on sampled points.

        Returns a dict of the measured minima and maxima; raises ChartError
        on the first violated invariant.
        """
        rng = rng if rng is not None else np.random.default_rng(0)
        a = self.model.sample(rng, samples)
        b = self.model.sample(rng, samples)
        k = min(len(a), len(b))
        a, b = a[:k], b[:k]
        keep = np.abs(a - b) > 1e-9 * self.model.r
        sep = np.linalg.norm(self(a[keep]) - self(b[keep]), axis=-1) / np.abs(a - b)[keep]
        if not sep.min() > 0:
            raise ChartError(f"chart {self.label} is not injective on sampled pairs")
        d = self.derivative(a)
        dn = np.linalg.norm(d, axis=-1)
        if not dn.min() > 0:
            raise ChartError(f"chart {self.label} has a critical point")
        report = {"min_separation": float(sep.min()), "min_derivative": float(dn.min())}
        if X is not None:
            v = X(self(a))
            vn = np.linalg.norm(v, axis=-1)
            if not vn.min() > 0:
                raise ChartError(f"chart {self.label} meets the singular set")
            # sine of the angle between X(gamma) and gamma', without cancellation
            coef = np.sum(np.conj(d) * v, axis=-1) / dn**2
            resid = np.linalg.norm(v - coef[:, None] * d, axis=-1) / vn
            report["max_tangency_residual"] = float(resid.max())
            if resid.max() > tol:
                raise ChartError(f"chart {self.label} is not tangent to the field "
                                 f"(residual {resid.max():.2e})")
        if E is not None and len(E.pieces):
            dist = E.distance(self(a))
            report["min_distance_to_E"] = float(np.min(dist))
            if not np.min(dist) > 0:
                raise ChartError(f"chart {self.label} meets E inside its model")
        return report


@dataclass(frozen=True, eq=False)
class LeafFamily:
    """A registered family of closed-form leaves.

    ``member(p)`` decides whether p lies on one of the family's leaves,
    ``chart(p)`` builds the leaf chart through it, and ``project(q)`` (for
    scan-capable families) returns the nearest point of the family's union.
    """

    name: str
    member: object
    chart: object
    project: object = None
    sampler: object = None

    def sample(self, rng, count):
        """``count`` random points on the family's leaves."""
        return self.sampler(rng, count)


def coordinate_family(name, domain, plane, param, kind="punctured_disc", nonzero=()):
    """Leaves {z_plane = 0, z_param = xi, other coordinates fixed}.

    ``plane`` may be None for families not confined to a coordinate plane;
    ``nonzero`` lists coordinates that must not vanish on the family.
    """
    n = domain.n
    c, r = domain.c, domain.r
    planes = () if plane is None else (plane,)

    def member(p, tol=1e-12):
        p = np.asarray(p, dtype=complex)
        ok = all(abs(p[j]) <= tol for j in planes)
        ok &= all(abs(p[j]) > tol for j in nonzero)
        if kind == "punctured_disc":
            ok &= abs(p[param] - c[param]) > tol
        return bool(ok) and bool(domain.contains(p))

    def chart(p):
        p = np.asarray(p, dtype=complex)
        base = p.copy()
        base[list(planes)] = 0
        comps = [XI if j == param else sp.Float(base[j].real, 17) + sp.I * sp.Float(base[j].imag, 17)
                 for j in range(n)]
        unit = np.zeros(n, dtype=complex)
        unit[param] = 1

        def gamma(zeta):
            out = np.broadcast_to(base, zeta.shape + (n,)).copy()
            out[..., param] = zeta
            return out

        def dgamma(zeta):
            return np.broadcast_to(unit, zeta.shape + (n,)).copy()

        model = (Model.punctured_disc(r[param], c[param]) if kind == "punctured_disc"
                 else Model.disc(r[param], c[param]))
        return LeafChart(model, tuple(comps), p[param], label=f"{name}@{_fmt(base)}",
                         family=name, fast=(gamma, dgamma))

    def project(q):
        q = np.array(q, dtype=complex)
        q[list(planes)] = 0
        return q

    def sampler(rng, count):
        out = []
        while len(out) < count:
            q = c + r * np.sqrt(rng.uniform(size=n)) * np.exp(2j * np.pi * rng.uniform(size=n))
            q = project(0.95 * (q - c) + c)
            if member(q):
                out.append(q)
        return np.asarray(out)

    return LeafFamily(name, member, chart, project if planes else None, sampler)


def _fmt(p):
    return "(" + ",".join(f"{complex(v):.6g}".strip("()") for v in p) + ")"


def curve_family(name, components, model, param_of, on_curve):
    """A single leaf given by an explicit curve xi -> components(xi)."""
    comps = tuple(sp.sympify(c) for c in components)
    f = sp.lambdify(XI, list(comps), modules="numpy")
    df = sp.lambdify(XI, [sp.diff(c, XI) for c in comps], modules="numpy")

    def stack(fn):
        def ev(zeta):
            return np.stack([np.broadcast_to(np.asarray(v, dtype=complex), zeta.shape)
                             for v in fn(zeta)], axis=-1)
        return ev

    fast = (stack(f), stack(df))

    def member(p, tol=1e-10):
        p = np.asarray(p, dtype=complex)
        return bool(on_curve(p, tol)) and bool(model.contains(param_of(p)))

    def chart(p):
        return LeafChart(model, comps, param_of(np.asarray(p, dtype=complex)), label=name,
                         family=name, fast=fast)

    def sampler(rng, count):
        zeta = np.zeros(0, dtype=complex)
        while len(zeta) < count:
            zeta = np.concatenate([zeta, model.sample(rng, count, margin=0.05)])
        return fast[0](zeta[:count])

    return LeafFamily(name, member, chart, None, sampler)


def classify_model_leaf(scenario, p, tol=1e-12):
    """The registered closed-form chart through p, with base_param solving gamma(zeta0) = p."""
    from .scenarios import get_scenario

    sc = get_scenario(scenario) if isinstance(scenario, str) else scenario
    p = np.asarray(p, dtype=complex)
    for fam in sc.leaf_families:
        if fam.member(p, tol):
            ch = fam.chart(p)
            if np.linalg.norm(ch.base_point - p) > 1e-9 * max(1.0, np.linalg.norm(p)):
                raise ChartError(f"family {fam.name} chart misses p")
            return ch
    raise ChartError(f"no registered leaf chart of {sc.id} covers {_fmt(p)}")
