"""Polynomial (and simple analytic) holomorphic vector fields on polydiscs.

Components are stored as sympy expressions in the variables ``x1..xn``;
evaluation and Jacobians go through cached numpy lambdas.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

_ALIASES = ("x", "y", "z")
_FUNCTIONS = {"exp": sp.exp, "sin": sp.sin, "cos": sp.cos, "I": sp.I, "pi": sp.pi}


class FieldError(ValueError):
    pass


class OutsideDomainWarning(UserWarning):
    pass


def variables(n):
    return sp.symbols(" ".join(f"x{i + 1}" for i in range(n)), seq=True)


@dataclass(frozen=True)
class Polydisc:
    center: tuple
    radii: tuple

    def __post_init__(self):
        center = tuple(complex(c) for c in self.center)
        radii = tuple(float(r) for r in self.radii)
        if len(center) != len(radii):
            raise FieldError("center and radii have different lengths")
        if any(not r > 0 for r in radii):
            raise FieldError("polydisc radii must be positive")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radii", radii)

    @classmethod
    def unit(cls, n, radius=1.0):
        return cls((0.0,) * n, (radius,) * n)

    @property
    def n(self):
        return len(self.radii)

    @property
    def c(self):
        return np.asarray(self.center, dtype=complex)

    @property
    def r(self):
        return np.asarray(self.radii, dtype=float)

    def gauge(self, points):
        """max_j |p_j - c_j| / r_j; < 1 exactly on the open polydisc."""
        pts = np.asarray(points, dtype=complex)
        return np.max(np.abs(pts - self.c) / self.r, axis=-1)

    def contains(self, points, closed=False):
        g = self.gauge(points)
        return g <= 1.0 if closed else g < 1.0

    def shrink(self, factor):
        return Polydisc(self.center, tuple(factor * r for r in self.radii))

    def boundary_distance(self, p):
        """Euclidean distance from an interior point to the boundary."""
        p = np.asarray(p, dtype=complex)
        return float(np.min(self.r - np.abs(p - self.c)))

    def contains_polydisc(self, other):
        return bool(np.all(np.abs(other.c - self.c) + other.r <= self.r + 1e-15))


def parse_expression(text, n):
    """Parse one component in the config syntax (x1..xn, aliases x,y,z for n<=3)."""
    syms = variables(n)
    local = dict(_FUNCTIONS)
    local.update({str(s): s for s in syms})
    if n <= 3:
        local.update({a: s for a, s in zip(_ALIASES, syms)})
    try:
        expr = parse_expr(
            text.strip(),
            local_dict=local,
            global_dict={"Integer": sp.Integer, "Float": sp.Float,
                         "Rational": sp.Rational, "Symbol": sp.Symbol},
            transformations=standard_transformations + (convert_xor,),
        )
    except Exception as exc:  # sympy raises a zoo of types here
        raise FieldError(f"malformed expression {text!r}: {exc}") from None
    if not isinstance(expr, sp.Expr):
        raise FieldError(f"malformed expression {text!r}")
    stray = expr.free_symbols - set(syms)
    if stray:
        raise FieldError(f"unknown symbols {sorted(map(str, stray))} in {text!r}")
    return expr


@dataclass(frozen=True, eq=False)
class PolyVectorField:
    """X = sum_i X_i d/dx_i on a polydisc; components are sympy expressions."""

    components: tuple
    domain: Polydisc
    label: str = ""
    _syms: tuple = field(init=False, repr=False)

    def __post_init__(self):
        n = len(self.components)
        if n < 1:
            raise FieldError("a field needs at least one component")
        if self.domain.n != n:
            raise FieldError("field and domain dimensions differ")
        syms = variables(n)
        comps = tuple(sp.sympify(c) for c in self.components)
        for c in comps:
            if c.free_symbols - set(syms):
                raise FieldError("component uses symbols outside x1..xn")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "_syms", syms)

    @classmethod
    def parse(cls, text, domain=None, label=""):
        parts = [p for p in text.split(";")]
        n = len(parts)
        comps = tuple(parse_expression(p, n) for p in parts)
        return cls(comps, domain or Polydisc.unit(n), label)

    @classmethod
    def from_coefficients(cls, coeffs, domain, label=""):
        """Build from per-component {multi-index: coefficient} maps."""
        n = domain.n
        syms = variables(n)
        comps = []
        for cmap in coeffs:
            expr = sp.Integer(0)
            for idx, a in cmap.items():
                if len(idx) != n:
                    raise FieldError(f"multi-index {idx} has wrong length")
                if a != 0:
                    expr += sp.nsimplify(a) * sp.Mul(*[s**k for s, k in zip(syms, idx)])
            comps.append(expr)
        return cls(tuple(comps), domain, label)

    @property
    def n(self):
        return len(self.components)

    @property
    def symbols(self):
        return self._syms

    @cached_property
    def is_polynomial(self):
        return all(c.is_polynomial(*self._syms) for c in self.components)

    def coefficients(self):
        """Sparse multi-index -> complex maps, one per component (polynomials only)."""
        if not self.is_polynomial:
            raise FieldError("field has non-polynomial components")
        out = []
        for c in self.components:
            poly = sp.Poly(sp.expand(c), *self._syms)
            out.append({m: complex(a) for m, a in poly.terms() if a != 0})
        return out

    @cached_property
    def _f(self):
        return sp.lambdify(self._syms, list(self.components), modules="numpy")

    @cached_property
    def jacobian_expr(self):
        return sp.Matrix([[sp.diff(c, s) for s in self._syms] for c in self.components])

    @cached_property
    def _jac(self):
        return sp.lambdify(self._syms, self.jacobian_expr.tolist(), modules="numpy")

    def __call__(self, points):
        """Vectorised evaluation; ``points`` has shape (..., n)."""
        pts = np.asarray(points, dtype=complex)
        if pts.shape[-1] != self.n:
            raise FieldError(f"expected points of dimension {self.n}, got {pts.shape[-1]}")
        vals = self._f(*np.moveaxis(pts, -1, 0))
        shape = pts.shape[:-1]
        return np.stack([np.broadcast_to(np.asarray(v, dtype=complex), shape) for v in vals], axis=-1)

    def jacobian_at(self, points):
        pts = np.asarray(points, dtype=complex)
        vals = self._jac(*np.moveaxis(pts, -1, 0))
        shape = pts.shape[:-1]
        rows = [np.stack([np.broadcast_to(np.asarray(v, dtype=complex), shape) for v in row], axis=-1)
                for row in vals]
        return np.stack(rows, axis=-2)

    def __add__(self, other):
        if other.n != self.n:
            raise FieldError("dimension mismatch")
        return PolyVectorField(tuple(a + b for a, b in zip(self.components, other.components)),
                               self.domain)

    def __rmul__(self, scalar):
        c = sp.nsimplify(scalar) if isinstance(scalar, (int, float)) else sp.sympify(scalar)
        return PolyVectorField(tuple(c * a for a in self.components), self.domain)

    def lie_derivative(self, f):
        """X(f) = sum_i X_i df/dx_i for a sympy expression f."""
        return sp.expand(sum(c * sp.diff(f, s) for c, s in zip(self.components, self._syms)))

    def sup_norm_bound(self, region):
        """Upper bound on sup ||X|| over the closed polydisc ``region``.

        Polynomial components use the coefficient majorant; other components
        are sampled on the distinguished boundary (maximum principle) with a
        Lipschitz pad.
        """
        if self.is_polynomial:
            base = np.abs(region.c) + region.r
            total = 0.0
            for cmap in self.coefficients():
                m = sum(abs(a) * float(np.prod(base ** np.asarray(idx))) for idx, a in cmap.items())
                total += m * m
            return float(np.sqrt(total))
        m = 16
        theta = 2 * np.pi * np.arange(m) / m
        grids = np.meshgrid(*[region.c[j] + region.r[j] * np.exp(1j * theta) for j in range(self.n)],
                            indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        vals = np.abs(self(pts))
        jac = np.abs(self.jacobian_at(pts))
        pad = jac.sum(axis=-1).max(axis=0) * np.max(region.r) * np.pi / m
        return float(np.sqrt(np.sum((vals.max(axis=0) + pad) ** 2)))


def eval_field(X, p):
    """Evaluate X at p. Points outside the domain warn but still evaluate."""
    p = np.asarray(p, dtype=complex)
    if p.shape[-1] != X.n:
        raise FieldError(f"point has dimension {p.shape[-1]}, field has {X.n}")
    if np.any(~X.domain.contains(p)):
        warnings.warn("evaluation point outside the field's domain", OutsideDomainWarning,
                      stacklevel=2)
    return X(p)


@dataclass(frozen=True)
class JacobianInfo:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    index: complex | None  # n == 2 only; None when an eigenvalue vanishes


def jacobian(X, p):
    p = np.asarray(p, dtype=complex)
    if p.shape != (X.n,):
        raise FieldError(f"point has shape {p.shape}, expected ({X.n},)")
    J = X.jacobian_at(p)
    eig = np.linalg.eigvals(J)
    index = None
    if X.n == 2:
        # index = (eigenvalue along y) / (eigenvalue along x), so x d/dx + a y d/dy has index a
        if np.allclose(np.tril(J, -1), 0) or np.allclose(np.triu(J, 1), 0):
            lam_y, lam_x = J[1, 1], J[0, 0]
        else:
            lam_y, lam_x = eig[1], eig[0]
        if lam_x != 0 and lam_y != 0:
            index = complex(lam_y / lam_x)
    return JacobianInfo(J, eig, index)


def _is_natural(a, tol=1e-12):
    a = complex(a)
    return abs(a.imag) < tol and a.real > 0.5 and abs(a.real - round(a.real)) < tol


def normal_form(kind, **params):
    """Normal-form fields on the unit bidisc near a reduced singularity at 0.

    kinds: ``linearizable`` (alpha), ``resonant_negative`` (alpha, f),
    ``poincare_dulac`` (n, a) and ``pd_swapped`` (n, a).
    """
    x, y = variables(2)
    dom = Polydisc.unit(2)
    if kind == "linearizable":
        alpha = complex(params["alpha"])
        if alpha == 0 or (abs(alpha.imag) < 1e-15 and alpha.real < 0):
            raise FieldError("linearizable form needs alpha outside R^- u {0}")
        if _is_natural(alpha) or _is_natural(1 / alpha):
            raise FieldError("linearizable form needs alpha, 1/alpha not in N")
        comps = (x, sp.nsimplify(alpha) * y)
    elif kind == "resonant_negative":
        alpha = complex(params["alpha"])
        if not (abs(alpha.imag) < 1e-15 and alpha.real < 0):
            raise FieldError("resonant_negative form needs alpha in R^- \\ {0}")
        f = params.get("f", 0)
        f = parse_expression(f, 2) if isinstance(f, str) else sp.sympify(f)
        if sp.expand(f.subs(x, 0)) != 0 or sp.expand(f.subs(y, 0)) != 0:
            raise FieldError("f must be divisible by both x and y")
        comps = (x, sp.nsimplify(alpha.real) * y * (1 + f))
    elif kind in ("poincare_dulac", "pd_swapped"):
        n = params["n"]
        if int(n) != n or n < 1:
            raise FieldError("Poincare-Dulac form needs n in N")
        a = sp.nsimplify(params.get("a", 0))
        if kind == "poincare_dulac":
            comps = (x, n * y + a * x**n)
        else:
            comps = (n * x + a * y**n, y)
    else:
        raise FieldError(f"unknown normal form {kind!r}")
    return PolyVectorField(tuple(sp.expand(c) for c in comps), dom, label=kind)
