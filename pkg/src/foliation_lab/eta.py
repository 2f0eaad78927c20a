"""The modulus of uniformization: exact values on model charts, certified bounds elsewhere.

Conventions: ``s`` is the extremal derivative sup |f'(0)| for holomorphic
discs f into the leaf with the Euclidean norm, and ``eta = s**2``.  Leafwise
lengths use the element 2 |dz| / s, so a punctured-disc leaf reproduces its
Poincare lengths.  On the singular set eta is extended by 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .leaf import (
    SAFETY,
    ChartError,
    LeafChart,
    Model,
    certified_flow_disc_radius,
    classify_model_leaf,
)

LADDER = tuple(2.0 ** -k for k in range(1, 21))
CAUCHY_TOL = 1e-3


class EtaError(ValueError):
    pass


@dataclass(frozen=True)
class EtaSample:
    point: np.ndarray
    s: float
    kind: str  # exact | lower | upper | interval
    leaf_ref: str = ""
    lower: float | None = None
    upper: float | None = None
    provenance: str = ""
    eta: float = field(init=False)

    def __post_init__(self):
        if not self.s >= 0:
            raise EtaError(f"s must be non-negative, got {self.s}")
        if self.kind not in ("exact", "lower", "upper", "interval"):
            raise EtaError(f"unknown sample kind {self.kind!r}")
        if self.kind == "interval" and not (self.lower <= self.upper):
            raise EtaError("interval sample needs lower <= upper")
        object.__setattr__(self, "eta", float(self.s) ** 2)


# -- model geometry ---------------------------------------------------------


def _unit_coords(model, zeta):
    """Unit-disc coordinate w of zeta with the puncture moved to 0, and |dw/dzeta|."""
    u = (np.asarray(zeta, dtype=complex) - model.center) / model.r
    if model.kind == "disc":
        return u, np.full(np.shape(u), 1.0 / model.r)
    b = (model.puncture - model.center) / model.r
    w = (u - b) / (1 - np.conj(b) * u)
    dw = (1 - abs(b) ** 2) / np.abs(1 - np.conj(b) * u) ** 2 / model.r
    return w, dw


def extremal_radius(model, zeta):
    """sup |phi'(0)| over holomorphic phi from the unit disc into the model with phi(0) = zeta.

    disc(r): (r^2 - |zeta|^2) / r;  punctured_disc(r): 2 |zeta| ln(r / |zeta|).
    Off-centre punctures are moved to the centre by a disc automorphism.
    """
    zeta = np.asarray(zeta, dtype=complex)
    if not np.all(np.abs(zeta - model.center) < model.r):
        raise EtaError("zeta lies outside the model")
    w, dw = _unit_coords(model, zeta)
    aw = np.abs(w)
    if model.kind == "disc":
        sigma = 1.0 - aw**2
    else:
        if np.any(aw == 0):
            raise EtaError("zeta is the puncture")
        sigma = -2.0 * aw * np.log(aw)
    out = sigma / dw
    return float(out) if out.ndim == 0 else out


def punctured_covering(w):
    """The universal covering w -> exp((w + 1) / (w - 1)) of the punctured unit disc."""
    w = np.asarray(w, dtype=complex)
    return np.exp((w + 1) / (w - 1))


def model_uniformizer(model, zeta0):
    """A covering map phi from the unit disc onto the model with phi(0) = zeta0.

    |phi'(0)| equals extremal_radius(model, zeta0).
    """
    w0, _ = _unit_coords(model, zeta0)
    if model.kind == "disc":
        b = 0j
        inner = lambda v: (v + w0) / (1 + np.conj(w0) * v)  # noqa: E731
    else:
        b = (model.puncture - model.center) / model.r
        tau = np.log(complex(w0))
        a = (tau + 1) / (tau - 1)
        inner = lambda v: punctured_covering((v + a) / (1 + np.conj(a) * v))  # noqa: E731

    def phi(v):
        u = inner(np.asarray(v, dtype=complex))
        return model.center + model.r * (u + b) / (1 + np.conj(b) * u)

    return phi


# -- samples ------------------------------------------------------------------


def eta_exact(chart: LeafChart, zeta=None):
    zeta = chart.base_param if zeta is None else complex(zeta)
    if not bool(chart.model.contains(zeta)):
        raise EtaError("zeta is outside the chart model or at its puncture")
    speed = float(np.linalg.norm(chart.derivative(np.asarray(zeta))))
    s = speed * extremal_radius(chart.model, zeta)
    return EtaSample(chart(np.asarray(zeta)), s, "exact", chart.label,
                     provenance=f"chart {chart.model}")


def eta_lower_flow(X, p, safety=SAFETY, extend=True):
    p = np.asarray(p, dtype=complex)
    v = float(np.linalg.norm(X(p)))
    if v == 0:
        raise EtaError("X vanishes at p, so p lies in E")
    R = certified_flow_disc_radius(X, p, safety, extend=extend)
    return EtaSample(p, R * v, "lower", provenance=f"flow disc R={R:.6g}")


def eta_upper_ambient(U, p):
    p = np.asarray(p, dtype=complex)
    rel = np.abs(p - U.c) / U.r
    if np.any(rel >= 1):
        raise EtaError("p is not interior to U")
    s = float(np.linalg.norm(U.r * (1 - rel**2)))
    return EtaSample(p, s, "upper", provenance="coordinatewise Schwarz-Pick")


def eta_at(scenario, p, safety=SAFETY, extend=True):
    """Best available sample at p: exact on a registered chart, 0 on E, else an interval."""
    p = np.asarray(p, dtype=complex)
    if scenario.E.contains(p, tol=1e-14) or np.linalg.norm(scenario.field(p)) == 0:
        return EtaSample(p, 0.0, "exact", "E", provenance="extension by 0 on E")
    try:
        return eta_exact(classify_model_leaf(scenario, p))
    except ChartError:
        pass
    lo = eta_lower_flow(scenario.field, p, safety, extend).s
    hi = eta_upper_ambient(scenario.domain, p).s
    return EtaSample(p, 0.5 * (lo + hi), "interval", lower=lo, upper=hi,
                     provenance="flow lower / ambient upper")


# -- sequences ----------------------------------------------------------------


@dataclass
class SequenceReport:
    name: str
    ns: np.ndarray
    samples: list
    limit: float
    oscillation: float
    expected: float | None
    image_distance: np.ndarray  # per n: max distance of alpha_n(zeta-grid) to leaf u E

    @property
    def etas(self):
        return np.array([s.eta for s in self.samples])

    @property
    def ss(self):
        return np.array([s.s for s in self.samples])


def _zeta_grid():
    rad = np.array([0.0, 0.25, 0.5])
    ang = 2 * np.pi * np.arange(8) / 8
    return np.unique(np.round((rad[:, None] * np.exp(1j * ang)).ravel(), 15))


def eta_sequence_limits(scenario, sequence, horizon=10_000, ns=None):
    """eta along a builtin sequence, with a Cauchy limit estimate and uniformizer images.

    For each n the uniformizer alpha_n = chart o model covering is sampled on a
    fixed zeta-grid and the largest distance of those images to E (or to the
    target's leaf, when the target is off E) is recorded.
    """
    seq = scenario.sequences[sequence] if isinstance(sequence, str) else sequence
    if ns is None:
        ns = np.arange(seq.start, horizon + 1)
    ns = np.asarray(ns, dtype=int)
    target = np.asarray(seq.target, dtype=complex)
    target_in_E = scenario.E.contains(target)
    target_leaf = None if target_in_E else classify_model_leaf(scenario, target)
    grid = _zeta_grid()
    samples, dists = [], []
    for n in ns:
        p = seq(int(n))
        if not scenario.domain.contains(p):
            raise EtaError(f"sequence {seq.name} leaves the domain at n={n}")
        ch = classify_model_leaf(scenario, p)
        samples.append(eta_exact(ch))
        img = ch(model_uniformizer(ch.model, ch.base_param)(grid))
        d = scenario.E.distance(img)
        if target_leaf is not None:
            cand = target_leaf(target_leaf.model.sample(np.random.default_rng(0), 4000))
            d = np.minimum(d, np.min(np.linalg.norm(img[:, None] - cand[None], axis=-1), axis=1))
        dists.append(float(np.max(d)))
    etas = np.array([s.eta for s in samples])
    tail = etas[-max(3, len(etas) // 10):]
    return SequenceReport(seq.name, ns, samples, float(etas[-1]), float(np.ptp(tail)),
                          seq.limit, np.array(dists))


# -- discontinuity scan -------------------------------------------------------


@dataclass
class ScanResult:
    points: np.ndarray  # (N, n) grid points
    index: np.ndarray  # (N, n) integer grid coordinates
    s_min: np.ndarray
    s_max: np.ndarray
    n_probes: np.ndarray
    flags: np.ndarray
    gap_tol: float
    witnesses: dict  # flat grid index -> [(family, probe point, s)]

    @property
    def skipped(self):
        return int(np.sum(self.n_probes < 2))

    @property
    def flagged(self):
        return self.points[self.flags]

    def largest_flag_cluster(self):
        """Size of the largest face-connected cluster of flagged grid cells."""
        flagged = {tuple(i) for i in self.index[self.flags]}
        best, seen = 0, set()
        for start in flagged:
            if start in seen:
                continue
            stack, size = [start], 0
            seen.add(start)
            while stack:
                c = stack.pop()
                size += 1
                for ax in range(len(c)):
                    for d in (-1, 1):
                        nb = c[:ax] + (c[ax] + d,) + c[ax + 1:]
                        if nb in flagged and nb not in seen:
                            seen.add(nb)
                            stack.append(nb)
            best = max(best, size)
        return best


def scan_grid(domain, N, extent=0.9):
    """Cell-centred real grid with N points per axis covering extent * radius."""
    axes = [c.real + extent * r * (2 * np.arange(N) + 1 - N) / N
            for c, r in zip(domain.center, domain.radii)]
    mesh = np.meshgrid(*axes, indexing="ij")
    idx = np.meshgrid(*[np.arange(N)] * domain.n, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1).astype(complex)
    spacing = np.array([2 * extent * r / N for r in domain.radii])
    return pts, np.stack([i.ravel() for i in idx], axis=-1), spacing


def discontinuity_scan(scenario, grid=12, gap_tol=None, gap_frac=0.1, extent=0.9):
    """Empirical D_F: compare eta across leaf families meeting a neighbourhood of each grid point.

    A probe for grid point q is the projection of q onto a scan-capable
    family's union when it lies within one grid spacing of q, plus q itself
    when q is on a registered leaf.  q is flagged when its probe values
    spread by more than gap_tol (default gap_frac * max s over all probes).
    Points with fewer than two probes are skipped and counted.
    """
    pts, index, spacing = scan_grid(scenario.domain, grid, extent)
    h = float(np.max(spacing)) * (1 + 1e-9)
    fams = [f for f in scenario.leaf_families if f.project is not None]
    probes = []
    for q in pts:
        found = []
        for fam in fams:
            q2 = fam.project(q)
            if np.linalg.norm(q2 - q) <= h and fam.member(q2):
                found.append((fam.name, q2, eta_exact(fam.chart(q2)).s))
        if not scenario.E.contains(q, tol=1e-14):
            try:
                ch = classify_model_leaf(scenario, q)
                found.append((ch.family, q, eta_exact(ch).s))
            except ChartError:
                pass
        probes.append(found)
    all_s = [s for found in probes for _, _, s in found]
    max_s = max(all_s) if all_s else 0.0
    tol = gap_frac * max_s if gap_tol is None else float(gap_tol)
    m = len(pts)
    s_min, s_max = np.full(m, np.nan), np.full(m, np.nan)
    count = np.zeros(m, dtype=int)
    flags = np.zeros(m, dtype=bool)
    wit = {}
    for i, found in enumerate(probes):
        count[i] = len(found)
        if not found:
            continue
        vals = np.array([s for _, _, s in found])
        s_min[i], s_max[i] = vals.min(), vals.max()
        if len(found) >= 2 and vals.max() - vals.min() > tol:
            flags[i] = True
            wit[i] = found
    return ScanResult(pts, index, s_min, s_max, count, flags, tol, wit)


# -- lengths and completeness -------------------------------------------------


@dataclass(frozen=True, eq=False)
class PathSpec:
    """u in [0, 1] -> path(u) with derivative; in chart coordinates when ``chart`` is set."""

    map: object
    derivative: object
    chart: LeafChart | None = None

    @classmethod
    def segment(cls, start, end, chart=None):
        a, b = np.asarray(start, dtype=complex), np.asarray(end, dtype=complex)
        return cls(lambda u: a + np.multiply.outer(u, b - a) if a.ndim else a + u * (b - a),
                   lambda u: np.broadcast_to(b - a, np.shape(u) + a.shape), chart)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


def _graded_integral(f, delta, depth=60, sub=2):
    """Integral of f over [0, 1 - delta] on a mesh graded geometrically towards u = 1."""
    stop = 1.0 - delta
    breaks = [0.0]
    gap = 1.0
    for _ in range(depth):
        gap *= 0.5
        nxt = 1.0 - gap
        if nxt >= stop:
            break
        breaks.append(nxt)
    breaks.append(stop)
    total = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        edges = np.linspace(a, b, sub + 1)
        for lo, hi in zip(edges[:-1], edges[1:]):
            u = 0.5 * (hi - lo) * _GL_NODES + 0.5 * (hi + lo)
            total += 0.5 * (hi - lo) * float(np.dot(_GL_WEIGHTS, f(u)))
    return total


def metric_length(path, s_func=None, delta=0.0, sub=2):
    """Length of the path for the metric 2 |dz| / s, truncated at u = 1 - delta.

    With a chart path the density is the model's: 2 |dzeta| / sigma(zeta).
    Otherwise ``s_func`` maps ambient points to s.
    """
    if path.chart is not None:
        model = path.chart.model

        def f(u):
            z = path.map(u)
            return 2 * np.abs(path.derivative(u)) / extremal_radius(model, z)
    else:
        if s_func is None:
            raise EtaError("an ambient path needs s_func")

        def f(u):
            z = path.map(u)
            s = np.asarray(s_func(z), dtype=float)
            if np.any(s <= 0):
                raise EtaError("s vanishes on the path interior")
            return 2 * np.linalg.norm(path.derivative(u), axis=-1) / s
    return _graded_integral(f, delta, sub=sub)


@dataclass
class CompletenessReport:
    verdict: str
    rays: list  # (label, lengths per rung, verdict)
    ladder: tuple


def threshold(k):
    """Lower bound the gain L_k - L_1 must clear at rung k (unbounded, ln-ln paced)."""
    return 0.5 * np.log((1 + k) / 2)


def ray_verdict(lengths, cauchy_tol=CAUCHY_TOL):
    L = np.asarray(lengths)
    ks = np.arange(1, len(L) + 1)
    if np.all(L[1:] - L[0] >= threshold(ks[1:])):
        return "complete"
    if len(L) >= 3 and np.all(np.abs(np.diff(L[-3:])) <= cauchy_tol):
        return "incomplete"
    return "inconclusive"


def separatrix_rays(scenario, q, start=0.5, directions=4):
    """Chart paths inside registered punctured leaves that run into q."""
    q = np.asarray(q, dtype=complex)
    rays = []
    for fam in scenario.leaf_families:
        if fam.project is None:
            continue
        for j in range(directions):
            e = np.exp(2j * np.pi * (j + 0.125) / directions)
            for axis in range(scenario.n):
                p0 = q.copy()
                p0[axis] = q[axis] + start * scenario.domain.r[axis] * e
                if not fam.member(p0):
                    continue
                ch = fam.chart(p0)
                if ch.model.kind != "punctured_disc":
                    continue
                if np.linalg.norm(ch(np.asarray(ch.model.puncture)) - q) > 1e-12:
                    continue
                path = PathSpec.segment(ch.base_param, ch.model.puncture, chart=ch)
                rays.append((f"{fam.name}:{axis}:{j}", path))
    return rays


def ambient_rays(scenario, q, start=0.25, directions=(0.0, np.pi / 4, np.pi / 2), phases=2):
    """Straight paths in the (z1, z2)-plane ending at q, for the comparison-density scenarios."""
    q = np.asarray(q, dtype=complex)
    rays = []
    for th in directions:
        for j in range(phases):
            v = np.zeros(scenario.n, dtype=complex)
            v[0] = np.cos(th)
            v[1] = np.sin(th) * np.exp(2j * np.pi * j / phases)
            rays.append((f"ray:{th:.3f}:{j}", PathSpec.segment(q + start * v, q)))
    return rays


def completeness_probe(scenario=None, q=None, rays=None, s_func=None, ladder=LADDER):
    """complete / incomplete / inconclusive verdict for the length metric at q.

    Each ray's truncated lengths L_k at delta_k must clear threshold(k)
    above L_1 for ``complete``; a ray whose last three rungs agree within
    1e-3 makes the verdict ``incomplete``.
    """
    if rays is None:
        if scenario is None or q is None:
            raise EtaError("need a scenario and q, or explicit rays")
        if "k" in scenario.params:
            rays = ambient_rays(scenario, q)
            s_func = s_func or (lambda z: ex32_s(z, scenario))
        else:
            rays = separatrix_rays(scenario, q)
    if not rays:
        raise EtaError("no rays run into q")
    out = []
    for label, path in rays:
        if path.chart is None and scenario is not None:
            if not np.all(scenario.domain.contains(path.map(np.array([0.0, 0.5])))):
                raise EtaError(f"ray {label} leaves the domain")
        L = [metric_length(path, s_func, d) for d in ladder]
        out.append((label, L, ray_verdict(L)))
    verdicts = {v for _, _, v in out}
    if verdicts == {"complete"}:
        verdict = "complete"
    elif "incomplete" in verdicts:
        verdict = "incomplete"
    else:
        verdict = "inconclusive"
    return CompletenessReport(verdict, out, tuple(ladder))


# -- the comparison density of scenario E3.2 ---------------------------------


def ex32_density(z, k, r, X):
    """h(z) = |pi(z)|^(2k-2) / (|X(z)|^2 log^2(|pi(z)| / r)), pi = (z1, z2)."""
    z = np.asarray(z, dtype=complex)
    pi = np.linalg.norm(z[..., :2], axis=-1)
    if np.any(pi == 0):
        raise EtaError("pi(z) = 0 lies on E")
    if np.any(pi >= r):
        raise EtaError("need |pi(z)| < r")
    xn = np.linalg.norm(X(z), axis=-1)
    h = pi ** (2 * k - 2) / (xn**2 * np.log(pi / r) ** 2)
    return float(h) if np.ndim(h) == 0 else h


def ex32_s(z, scenario):
    """Effective s = 2 / sqrt(h), so that 2 |dz| / s is the length element of h."""
    p = scenario.params
    return 2.0 / np.sqrt(ex32_density(z, p["k"], p["r"], scenario.field))


def ex32_bounds_check(X, k, rho, grid=None):
    """Extremes (C_low, C_high) of |X(z)| / |pi(z)|^k over a grid with 0 < |pi| < rho."""
    if grid is None:
        radii = rho * np.array([0.05, 0.2, 0.5, 0.8, 0.99])
        th = np.unique(np.concatenate([np.linspace(0, np.pi / 2, 17), [np.pi / 4]]))
        ph = 2 * np.pi * np.arange(6) / 6
        z3 = np.array([0.0, 0.3 * rho, -0.3j * rho])
        R, T, P1, P2, Z = np.meshgrid(radii, th, ph, ph, z3, indexing="ij")
        grid = np.stack([R * np.cos(T) * np.exp(1j * P1), R * np.sin(T) * np.exp(1j * P2),
                         Z.astype(complex)], axis=-1).reshape(-1, 3)
    grid = np.asarray(grid, dtype=complex)
    pi = np.linalg.norm(grid[:, :2], axis=-1)
    if np.any(pi == 0):
        raise EtaError("grid point with pi(z) = 0")
    ratio = np.linalg.norm(X(grid), axis=-1) / pi**k
    return float(ratio.min()), float(ratio.max())
