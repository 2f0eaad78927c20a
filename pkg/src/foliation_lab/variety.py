"""Singular sets, their Whitney C4 tangent cones, and invariant hypersurfaces."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import sympy as sp

from .field import FieldError, parse_expression

ANGLE_TOL = 1e-3
RELATION_TOL = 1e-10


class InconclusiveError(RuntimeError):
    """A sampled check could not gather enough evidence either way."""


def canonicalize(v):
    """Unit-normalise and rotate so the first nonzero entry is real positive."""
    v = np.asarray(v, dtype=complex)
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    u = v / norms
    first = np.argmax(np.abs(u) > 1e-12, axis=-1)
    lead = np.take_along_axis(u, first[..., None], axis=-1)
    return u * (np.abs(lead) / lead)


def projective_angle(u, v):
    """Fubini-Study angle between the complex lines spanned by u and v."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    c = np.abs(np.sum(np.conj(u) * v, axis=-1))
    c = c / (np.linalg.norm(u, axis=-1) * np.linalg.norm(v, axis=-1))
    return np.arccos(np.clip(c, 0.0, 1.0))


def dedupe_directions(dirs, tol=ANGLE_TOL):
    dirs = canonicalize(np.atleast_2d(dirs))
    kept = []
    for d in dirs:
        if not kept or np.min(projective_angle(np.asarray(kept), d)) > tol:
            kept.append(d)
    return np.asarray(kept, dtype=complex).reshape(-1, dirs.shape[-1])


@dataclass(frozen=True, eq=False)
class ConeSet:
    """Finite set of projective directions with optional certified relations.

    ``relations`` rows l satisfy sum_i l_i v_i = 0 for every stored direction;
    ``span_hint`` columns are an orthonormal basis when the set was found
    to fill the unit sphere of that subspace.
    """

    directions: np.ndarray
    relations: np.ndarray | None = None
    span_hint: np.ndarray | None = None
    scales: np.ndarray | None = None
    skipped_scales: tuple = ()

    def __post_init__(self):
        d = np.asarray(self.directions, dtype=complex)
        if d.size:
            if not np.allclose(np.linalg.norm(d, axis=-1), 1.0, atol=1e-12):
                raise ValueError("cone directions must be unit vectors")
            if self.relations is not None and len(self.relations):
                res = np.abs(d @ np.asarray(self.relations).T)
                if res.max() > RELATION_TOL:
                    raise ValueError(f"stored relation residual {res.max():.2e} too large")
        object.__setattr__(self, "directions", d)

    @property
    def n(self):
        return self.directions.shape[-1]

    def contains_direction(self, v, tol=ANGLE_TOL):
        return self.angle_to(v) <= tol

    def angle_to(self, v):
        """Smallest angle from v to the cone (subspace angle when spanned)."""
        v = np.asarray(v, dtype=complex)
        if self.span_hint is not None:
            proj = self.span_hint.conj().T @ v
            c = np.linalg.norm(proj) / np.linalg.norm(v)
            return float(np.arccos(min(1.0, c)))
        if not len(self.directions):
            return np.pi / 2
        return float(np.min(projective_angle(self.directions, v)))

    def same_as(self, other, tol=ANGLE_TOL):
        if (self.span_hint is None) != (other.span_hint is None):
            return False
        if self.span_hint is not None:
            return subspaces_equal(self.span_hint, other.span_hint)
        a, b = self.directions, other.directions
        return all(min(projective_angle(b, v)) <= tol for v in a) and \
            all(min(projective_angle(a, v)) <= tol for v in b)


def subspaces_equal(A, B, tol=1e-8):
    A = scipy.linalg.orth(np.asarray(A, dtype=complex))
    B = scipy.linalg.orth(np.asarray(B, dtype=complex))
    if A.shape[1] != B.shape[1]:
        return False
    return np.linalg.norm(A - B @ (B.conj().T @ A)) < tol


@dataclass(frozen=True, eq=False)
class LinearPiece:
    base: np.ndarray
    span: np.ndarray  # (n, k) complex basis
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "base", np.asarray(self.base, dtype=complex))
        span = np.atleast_2d(np.asarray(self.span, dtype=complex))
        if span.shape[0] != self.base.size:
            span = span.T
        object.__setattr__(self, "span", scipy.linalg.orth(span))

    @property
    def dim(self):
        return self.span.shape[1]

    def distance(self, points):
        d = np.asarray(points, dtype=complex) - self.base
        proj = d @ self.span.conj() @ self.span.T
        return np.linalg.norm(d - proj, axis=-1)

    def sample_near(self, p, radius, count, rng):
        if self.dim == 0:
            return np.tile(self.base, (count, 1))
        coef = rng.normal(size=(count, self.dim)) + 1j * rng.normal(size=(count, self.dim))
        coef *= (radius * rng.uniform(0.05, 1.0, size=(count, 1))) / np.linalg.norm(coef, axis=1, keepdims=True)
        q0 = self.project(p)
        return q0 + coef @ self.span.T

    def project(self, p):
        d = np.asarray(p, dtype=complex) - self.base
        return self.base + self.span @ (self.span.conj().T @ d)

    def tangent_basis(self, q):
        return self.span


@dataclass(frozen=True, eq=False)
class ChartPiece:
    """Image of a holomorphic curve t -> chart(t) over the disc |t| < radius."""

    chart: object
    derivative: object
    radius: float = 1.0
    label: str = ""

    @property
    def dim(self):
        return 1

    def _params(self, m=2048):
        k = np.arange(m)
        rr = self.radius * np.sqrt((k + 0.5) / m)
        return rr * np.exp(2j * np.pi * k * 0.6180339887498949)

    def distance(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=complex))
        img = np.asarray([self.chart(t) for t in self._params()])
        d = np.linalg.norm(pts[:, None, :] - img[None, :, :], axis=-1).min(axis=1)
        return d if np.ndim(points) > 1 else d[0]

    def _nearest_param(self, p):
        ts = self._params()
        img = np.asarray([self.chart(t) for t in ts])
        return ts[np.argmin(np.linalg.norm(img - p, axis=1))]

    def sample_near(self, p, radius, count, rng):
        t0 = self._nearest_param(p)
        dt = radius * rng.uniform(0.05, 1.0, count) * np.exp(2j * np.pi * rng.uniform(size=count))
        return np.asarray([self.chart(t0 + d) for d in dt])

    def tangent_basis(self, q):
        t = self._nearest_param(q)
        v = np.asarray(self.derivative(t), dtype=complex)
        return (v / np.linalg.norm(v))[:, None]


@dataclass(frozen=True, eq=False)
class AnalyticSetModel:
    pieces: tuple
    singular: bool = False  # tagged as the singular set of a foliation
    n: int = field(default=0)

    def __post_init__(self):
        pieces = tuple(self.pieces)
        n = self.n or (pieces[0].base.size if pieces and hasattr(pieces[0], "base") else 0)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(self, "n", n)
        if self.singular:
            for pc in pieces:
                if n - pc.dim < 2:
                    raise FieldError(f"singular set piece {pc.label!r} has codimension < 2")
        for pc in pieces:
            if pc.dim >= n and n:
                raise FieldError("analytic set pieces must have codimension >= 1")

    @classmethod
    def parse(cls, text, singular=False):
        """``linear base=(0,0,0) span=(0,1,0)`` pieces separated by ``;`` or newlines.

        A piece without ``span`` is the single point ``base``.
        """
        pieces = []
        for chunk in re.split(r"[;\n]", text):
            chunk = chunk.strip()
            if not chunk:
                continue
            m = re.fullmatch(r"linear\s+base=\(([^)]*)\)((?:\s+span=\([^)]*\))*)", chunk)
            if not m:
                raise FieldError(f"malformed set piece {chunk!r}")
            base = [complex(s.strip().replace("i", "j")) for s in m.group(1).split(",")]
            spans = [[complex(s.strip().replace("i", "j")) for s in g.split(",")]
                     for g in re.findall(r"span=\(([^)]*)\)", m.group(2))]
            span = np.array(spans).T if spans else np.zeros((len(base), 0))
            pieces.append(LinearPiece(np.array(base), span, label=chunk))
        return cls(tuple(pieces), singular=singular)

    def distance(self, points):
        if not self.pieces:
            shape = np.shape(points)[:-1]
            return np.full(shape, np.inf) if shape else np.inf
        d = np.stack([np.atleast_1d(pc.distance(points)) for pc in self.pieces])
        out = d.min(axis=0)
        return out if np.ndim(points) > 1 else float(out[0])

    def pieces_through(self, p, tol=1e-8):
        return [pc for pc in self.pieces if float(np.atleast_1d(pc.distance(p))[0]) <= tol]

    def contains(self, p, tol=1e-8):
        return bool(self.pieces) and self.distance(p) <= tol


def tangent_cone_of_set(E, p, scales=None, samples_per_scale=8, rng=None):
    """Whitney C4 cone of E at p as a ConeSet.

    At a regular point of a single piece this is that piece's tangent space
    (returned exactly, with span_hint).  Otherwise tangent spaces at regular
    points of each piece through p are sampled along the scale ladder.
    """
    p = np.asarray(p, dtype=complex)
    through = E.pieces_through(p)
    if not through:
        raise FieldError("point is not on the analytic set")
    rng = rng if rng is not None else np.random.default_rng(0)
    if len(through) == 1:
        basis = through[0].tangent_basis(p)
        dirs = dedupe_directions(basis.T)
        return ConeSet(dirs, span_hint=scipy.linalg.orth(basis))
    if scales is None:
        scales = 0.25 * 2.0 ** -np.arange(21)
    collected = []
    for pc in through:
        for r in scales:
            for q in pc.sample_near(p, r, samples_per_scale, rng):
                # regular points of E only: skip samples lying on another piece
                if any(float(np.atleast_1d(o.distance(q))[0]) <= 1e-12 for o in E.pieces if o is not pc):
                    continue
                B = pc.tangent_basis(q)
                if B.shape[1] == 1:
                    collected.append(B[:, 0])
                else:
                    c = rng.normal(size=(4, B.shape[1])) + 1j * rng.normal(size=(4, B.shape[1]))
                    collected.extend(list(B.T) + list(c @ B.T))
    return ConeSet(dedupe_directions(np.asarray(collected)))


def singular_locus(X, grid_density=3, max_iter=200, tol=1e-10, dedupe=1e-6):
    """Zeros of X found by Gauss-Newton from a real grid of seeds.

    Returns (points, dropped) where ``dropped`` counts seeds that diverged
    or left the domain.
    """
    if grid_density < 2:
        raise ValueError("grid_density must be at least 2 per real dimension")
    dom = X.domain
    axes = []
    for j in range(X.n):
        t = (np.arange(grid_density) + 0.5) / grid_density * 2 - 1
        axes.append(dom.c[j].real + 0.95 * dom.r[j] * t / np.sqrt(2))
        axes.append(dom.c[j].imag + 0.95 * dom.r[j] * t / np.sqrt(2))
    mesh = np.meshgrid(*axes, indexing="ij")
    real = np.stack([m.ravel() for m in mesh], axis=-1)
    z = real[:, 0::2] + 1j * real[:, 1::2]
    for _ in range(max_iter):
        F = X(z)
        J = X.jacobian_at(z)
        step = np.einsum("mij,mj->mi", np.linalg.pinv(J, rcond=1e-13), F)
        z = z - step
        if np.nanmax(np.abs(step)) < 1e-300:
            break
        z = np.where(np.isfinite(z), z, np.nan)
    ok = np.all(np.isfinite(z), axis=1)
    ok &= dom.contains(np.where(ok[:, None], z, 0.0))
    normF = np.full(len(z), np.inf)
    normF[ok] = np.linalg.norm(X(z[ok]), axis=1)
    good = ok & (normF <= tol)
    pts = []
    for q in z[good]:
        if not pts or np.min(np.linalg.norm(np.asarray(pts) - q, axis=1)) > dedupe:
            pts.append(q)
    return np.asarray(pts, dtype=complex).reshape(-1, X.n), int(np.sum(~good))


def _as_expr(f, n):
    return parse_expression(f, n) if isinstance(f, str) else sp.sympify(f)


def is_invariant_hypersurface(f, X, samples=200, tol=1e-9, rng=None):
    """Whether {f = 0} is X-invariant, i.e. f divides X(f).

    Monomials are decided exactly; other f by sampling {f = 0}.  Raises
    InconclusiveError when too few points of {f = 0} can be found.
    """
    syms = X.symbols
    f = sp.expand(_as_expr(f, X.n))
    if f == 0:
        raise ValueError("f must not vanish identically")
    Xf = X.lie_derivative(f)
    if f.is_polynomial(*syms) and len(sp.Add.make_args(f)) == 1:
        num, den = sp.fraction(sp.cancel(Xf / f))
        return not (den.free_symbols & set(syms))
    rng = rng if rng is not None else np.random.default_rng(0)
    fXf = sp.lambdify(syms, Xf, modules="numpy")
    dom = X.domain
    found = []
    solve_var = next((s for s in reversed(syms) if f.has(s)), None)
    others = [s for s in syms if s is not solve_var]
    k = syms.index(solve_var)
    if not f.is_polynomial(solve_var):
        raise InconclusiveError(f"cannot sample {{f = 0}}: f is not polynomial in {solve_var}")
    # coefficients of f as a polynomial in solve_var, as functions of the other coordinates
    coeff_fns = [sp.lambdify(others, c, modules="numpy") for c in sp.Poly(f, solve_var).all_coeffs()]
    found = []
    attempts = 0
    while len(found) < samples and attempts < 50:
        attempts += 1
        m = samples
        vals = {i: dom.c[i] + dom.r[i] * np.sqrt(rng.uniform(size=m)) * np.exp(2j * np.pi * rng.uniform(size=m))
                for i, s in enumerate(syms) if s in others}
        args = [vals[syms.index(s)] for s in others]
        coeffs = np.stack([np.broadcast_to(np.asarray(fn(*args), dtype=complex), (m,)) for fn in coeff_fns], axis=1)
        for j in range(m):
            c = np.trim_zeros(coeffs[j], "f")
            if len(c) < 2:
                continue
            for root in np.roots(c):
                if abs(root - dom.c[k]) < dom.r[k]:
                    pt = np.empty(len(syms), dtype=complex)
                    for i in vals:
                        pt[i] = vals[i][j]
                    pt[k] = root
                    found.append(pt)
    if len(found) < samples:
        raise InconclusiveError(f"found only {len(found)} of {samples} points on {{f = 0}}")
    pts = np.asarray(found[:samples])
    vals = np.abs(np.asarray(fXf(*pts.T), dtype=complex) * np.ones(len(pts)))
    return bool(np.all(vals <= tol))
